use std::process::{Command, Output};

fn rbvem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbvem")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn vem_solve_prints_eigenvalue_csv() {
    let o = rbvem(&[
        "solve",
        "--problem",
        "square_eig",
        "--method",
        "vem",
        "--mesh",
        "dyadic:4",
        "--num-eigs",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,index,lambda_h,lambda_exact,rel_error"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn offline_database_feeds_solve() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("n4.rbdb");
    let out = dir.path().join("eig.csv");
    let o = rbvem(&[
        "offline",
        "--N",
        "4",
        "--M",
        "2",
        "--L",
        "10",
        "--level",
        "3",
        "--out",
        db.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let args = [
        "solve",
        "--problem",
        "square_eig",
        "--mesh",
        "dyadic:4",
        "--M",
        "2",
        "--num-eigs",
        "2",
    ];
    let o = rbvem(
        &[
            &args[..],
            &["--db", db.to_str().unwrap(), "--out", out.to_str().unwrap()],
        ]
        .concat(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);

    // the stored database only has two modes
    let o = rbvem(&[
        "solve",
        "--problem",
        "square_eig",
        "--mesh",
        "dyadic:4",
        "--M",
        "3",
        "--db",
        db.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_sweep_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "# alpha sweep on a single square\nproblem=param_sweep\nsweep=alpha\nsweep_values=0.5,1,2\noutput={}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = rbvem(&["bench", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("param,index,lambda"));
    assert!(csv.lines().count() > 3);
}

#[test]
fn errors_map_to_exit_codes() {
    let o = rbvem(&["solve", "--problem", "square_eig", "--method", "rbvem", "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=config"), "{}", stderr(&o));

    let o = rbvem(&["solve", "--problem", "square_eig", "--mesh", "/no/such/mesh.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=io"));

    let o = rbvem(&["bench", "--config", "/no/such.cfg"]);
    assert_eq!(o.status.code(), Some(2));

    // no stabilization on square cells leaves the stiffness singular
    let o = rbvem(&[
        "solve",
        "--problem",
        "square_eig",
        "--method",
        "vem",
        "--alpha",
        "0",
        "--mesh",
        "dyadic:4",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("exit=3"));
}
