mod common;

use common::small_db;
use rbvem::eigsolve::*;
use rbvem::linalg::CsrMatrix;
use rbvem::polymesh::*;
use rbvem::vem_core::{LoadMode, Method};

fn library_for(meshes: &[&PolyMesh]) -> RbLibrary {
    let mut ns: Vec<usize> = meshes.iter().flat_map(|m| m.vertex_counts()).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut lib = RbLibrary::new();
    for n in ns {
        lib.insert(small_db(n, 2, 12, 3));
    }
    lib
}

fn families() -> Vec<(&'static str, PolyMesh)> {
    let opts = VoronoiOptions::default();
    vec![
        ("dyadic", generate_dyadic_mesh(4).unwrap()),
        ("octagon", generate_octagon_mesh(3).unwrap()),
        ("voronoi", generate_voronoi_mesh(40, 5, 5).unwrap()),
        ("lshape_dyadic", generate_dyadic_lshape(4).unwrap()),
        ("lshape_voronoi", generate_voronoi_lshape(36, 2, &opts).unwrap()),
        ("checker_voronoi", generate_voronoi_checkerboard(40, 3, &opts).unwrap()),
    ]
}

const METHODS: [Method; 4] = [
    Method::Vem { alpha: 1.0, beta: 1.0 },
    Method::RbVem,
    Method::RbStab { chi: 0 },
    Method::RbStab { chi: 1 },
];

fn max_diff(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let d = a.add_scaled(-1.0, b).unwrap();
    d.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn patch_test_all_families_and_methods() {
    let fams = families();
    let lib = library_for(&fams.iter().map(|f| &f.1).collect::<Vec<_>>());
    let lin = |p: Point2| 0.3 - 1.7 * p.x + 0.9 * p.y;
    for (name, mesh) in &fams {
        for method in METHODS {
            let sys = assemble_global(mesh, method, &Diffusivity::identity(), Some(&lib)).unwrap();
            for mode in [LoadMode::Projected, LoadMode::ExactRb] {
                let load = assemble_load(mesh, &sys, &|_| 0.0, mode, Some(&lib)).unwrap();
                let u = solve_dirichlet_source(&sys, &load, &|i| lin(mesh.points()[i])).unwrap();
                let err = u
                    .iter()
                    .zip(mesh.points())
                    .fold(0.0f64, |m, (v, p)| m.max((v - lin(*p)).abs()));
                assert!(err < 1e-10, "{name} {method} {mode:?}: {err:e}");
            }
        }
    }
}

#[test]
fn constants_in_stiffness_kernel_and_mass_sums_to_area() {
    let fams = families();
    let lib = library_for(&fams.iter().map(|f| &f.1).collect::<Vec<_>>());
    for (name, mesh) in &fams {
        for method in METHODS {
            let sys = assemble_global(mesh, method, &Diffusivity::contrast(7.0), Some(&lib)).unwrap();
            let ones = vec![1.0; sys.n_dofs()];
            let k1 = sys.k.mul_vec(&ones);
            assert!(k1.iter().all(|v| v.abs() < 1e-11), "{name} {method}");
            let total: f64 = sys.m.mul_vec(&ones).iter().sum();
            assert!((total - mesh.total_area()).abs() < 1e-11, "{name} {method}: {total}");
        }
    }
}

#[test]
fn rb_stiffness_shared_between_rb_methods() {
    let mesh = generate_voronoi_mesh(30, 9, 5).unwrap();
    let lib = library_for(&[&mesh]);
    let d = Diffusivity::identity();
    let a = assemble_global(&mesh, Method::RbVem, &d, Some(&lib)).unwrap();
    let b = assemble_global(&mesh, Method::RbStab { chi: 1 }, &d, Some(&lib)).unwrap();
    assert!(max_diff(&a.k, &b.k) < 1e-12);
    let f = |p: Point2| (3.0 * p.x).sin() + p.y * p.y;
    let la = assemble_load(&mesh, &a, &f, LoadMode::Projected, Some(&lib)).unwrap();
    let lb = assemble_load(&mesh, &b, &f, LoadMode::Projected, Some(&lib)).unwrap();
    let ua = solve_dirichlet_source(&a, &la, &|_| 0.0).unwrap();
    let ub = solve_dirichlet_source(&b, &lb, &|_| 0.0).unwrap();
    let scale = ua.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(ua.iter().zip(&ub).all(|(x, y)| (x - y).abs() <= 1e-12 * scale));
}

#[test]
fn stiffness_is_affine_in_alpha() {
    let mesh = generate_octagon_mesh(3).unwrap();
    let d = Diffusivity::identity();
    let k = |alpha: f64| {
        assemble_global(&mesh, Method::Vem { alpha, beta: 1.0 }, &d, None)
            .unwrap()
            .k
    };
    let (k0, k1, k2) = (k(0.0), k(0.5), k(1.0));
    let lhs = k2.add_scaled(-1.0, &k1).unwrap();
    let rhs = k1.add_scaled(-1.0, &k0).unwrap();
    assert!(max_diff(&lhs, &rhs) < 1e-13);
}

#[test]
fn dyadic_dof_count_and_dirichlet_reduction() {
    let mesh = generate_dyadic_mesh(2).unwrap();
    let sys = assemble_global(
        &mesh,
        Method::Vem { alpha: 1.0, beta: 1.0 },
        &Diffusivity::identity(),
        None,
    )
    .unwrap();
    assert_eq!(sys.n_dofs(), 21);
    let red = apply_boundary_conditions(&sys, BoundaryCondition::Dirichlet);
    // the four edge midpoints shared by two cells and the center vertex
    assert_eq!(red.dim(), 5);
    assert_eq!(red.expand(&[1.0; 5]).iter().sum::<f64>(), 5.0);
}

#[test]
fn neumann_zero_mode_is_removed() {
    let mesh = generate_dyadic_mesh(6).unwrap();
    let lib = library_for(&[&mesh]);
    for method in METHODS {
        let sys = assemble_global(&mesh, method, &Diffusivity::identity(), Some(&lib)).unwrap();
        let red = apply_boundary_conditions(&sys, BoundaryCondition::Neumann);
        let sp = solve_eigenproblem(&red, 4).unwrap();
        assert_eq!(sp.len(), 4);
        let pi2 = std::f64::consts::PI.powi(2);
        // Neumann spectrum of the unit square starts π², π², 2π²
        assert!(
            (sp.eigenvalues[0] / pi2 - 1.0).abs() < 0.05,
            "{method}: {:?}",
            sp.eigenvalues
        );
        // stabilized VEM on dyadic cells has a spurious value below 2π²
        if method.is_rb() {
            assert!(
                (sp.eigenvalues[2] / pi2 - 2.0).abs() < 0.1,
                "{method}: {:?}",
                sp.eigenvalues
            );
        }
        assert!(sp.relative_residuals(&red.k, &red.m).iter().all(|r| *r < 1e-8));
    }
}

#[test]
fn lanczos_agrees_with_dense() {
    let mesh = generate_voronoi_mesh(120, 4, 5).unwrap();
    let lib = library_for(&[&mesh]);
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let sys = assemble_global(&mesh, Method::RbVem, &Diffusivity::identity(), Some(&lib)).unwrap();
        let red = apply_boundary_conditions(&sys, bc);
        assert!(red.dim() <= 600);
        let shift = if bc == BoundaryCondition::Neumann {
            neumann_shift(&red.k, &red.m)
        } else {
            0.0
        };
        let dense = solve_gevp_dense(&red.k, &red.m, 8, shift).unwrap();
        let opts = GevpOptions::default();
        let lanczos = solve_gevp_lanczos(&red.k, &red.m, 8, shift, &opts).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&lanczos.eigenvalues) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{bc:?}: {a} vs {b}");
        }
        assert!(lanczos.orthonormality_defect(&red.m) < 1e-8);
    }
}

#[test]
fn missing_database_is_reported() {
    let mesh = generate_voronoi_mesh(20, 1, 2).unwrap();
    let err = assemble_global(&mesh, Method::RbVem, &Diffusivity::identity(), None).unwrap_err();
    assert!(err.to_string().contains("no offline database"), "{err}");
    assert!(!err.is_numerical());
}
