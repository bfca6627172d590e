use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use rbvem::bench::{run_experiment, ExperimentConfig, ExperimentResult};
use rbvem::rb_offline::{build_offline_db, save_offline_db, OfflineConfig};
use rbvem::Error;

#[derive(Parser)]
#[command(name = "rbvem", version, about = "Virtual element and reduced-basis VEM benchmarks")]
struct Cli {
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an offline database for N-gons and write it to disk
    Offline(OfflineArgs),
    /// Solve one problem on one mesh and write its CSV
    Solve(SolveArgs),
    /// Run an experiment described by a key=value config file
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct OfflineArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "M", default_value_t = 1)]
    m: usize,
    #[arg(long = "L", default_value_t = 100)]
    l: usize,
    #[arg(long, default_value_t = 5)]
    level: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "rbvem")]
    method: String,
    /// Mesh file or `family:size` (dyadic, octagon, voronoi, lshape_dyadic,
    /// lshape_voronoi, checker_dyadic, checker_voronoi); comma-separated for a sequence
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    chi: Option<u8>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long = "num-eigs")]
    num_eigs: Option<usize>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Offline database file, or a directory used as a database cache; repeatable
    #[arg(long)]
    db: Vec<PathBuf>,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn to_config(&self) -> Result<ExperimentConfig, Error> {
        let mut kv = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        put("problem", Some(self.problem.clone()));
        put("method", Some(self.method.clone()));
        put("meshes", self.mesh.clone());
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("chi", self.chi.map(|v| v.to_string()));
        put("M", self.m.map(|v| v.to_string()));
        put("L", self.l.map(|v| v.to_string()));
        put("level", self.level.map(|v| v.to_string()));
        put("num_eigs", self.num_eigs.map(|v| v.to_string()));
        put("bc", self.bc.clone());
        put("delta", self.delta.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        let mut cfg = ExperimentConfig::from_pairs(kv)?;
        for p in &self.db {
            if p.is_dir() {
                if cfg.db_dir.replace(p.clone()).is_some() {
                    return Err(Error::Config("at most one database directory".into()));
                }
            } else {
                cfg.db_files.push(p.clone());
            }
        }
        Ok(cfg)
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summarize(r: &ExperimentResult) {
    if let Some(c) = &r.convergence {
        for (t, s) in c.targets.iter().zip(&c.slopes) {
            info!("{t}: slope {s:.3} over the last {} of {} meshes", c.window, c.h.len());
        }
    }
    for (k, s) in r.spurious.iter().enumerate() {
        if !s.is_empty() {
            info!("mesh {k}: {} spurious eigenvalues {:?}", s.len(), s);
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Offline(a) => {
            let cfg = OfflineConfig {
                l: a.l,
                level: a.level,
                seed: a.seed,
                ..OfflineConfig::new(a.n, a.m)
            };
            let db = build_offline_db(&cfg)?;
            save_offline_db(&db, &a.out)?;
            info!("wrote N = {}, M = {} to {}", db.n, db.m, a.out.display());
            Ok(())
        }
        Command::Solve(a) => {
            let cfg = a.to_config()?;
            let r = run_experiment(&cfg)?;
            summarize(&r);
            let main = r
                .files
                .first()
                .ok_or_else(|| Error::Config("experiment produced no output".into()))?;
            write_or_print(&main.1, a.out.as_deref())
        }
        Command::Bench { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Io {
                path: config.clone(),
                source: e,
            })?;
            let cfg = ExperimentConfig::parse(&text)?;
            let r = run_experiment(&cfg)?;
            summarize(&r);
            match &cfg.output {
                Some(dir) => {
                    for p in r.write(dir)? {
                        info!("wrote {}", p.display());
                    }
                }
                None => {
                    for (name, text) in &r.files {
                        println!("# {name}");
                        print!("{text}");
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_numerical() { 3 } else { 2 };
            let msg = e.to_string().replace('"', "'");
            eprintln!("error kind={} exit={code} message=\"{msg}\"", e.kind());
            ExitCode::from(code)
        }
    }
}
