mod common;

use common::*;
use nalgebra::{DMatrix, Matrix2};
use rbvem::polymesh::ElementMap;
use rbvem::rb_offline::{sample_parameter_space_with, SamplingOptions};
use rbvem::rb_online::*;
use rbvem::reffem::{build_reference_ngon, solve_snapshots, SectorForms};

#[test]
fn reference_polygon_has_zero_correction() {
    let db = small_db(6, 2, 6, 3);
    let tri = db.triangulation().unwrap();
    let forms = SectorForms::assemble(&tri).unwrap();
    let lap = forms.laplacian();
    for poly in [
        build_reference_ngon(6).unwrap(),
        build_reference_ngon(6)
            .unwrap()
            .scaled(0.3)
            .translated(rbvem::polymesh::Point2::new(4.0, 1.0)),
    ] {
        let ctx = OnlineElementCtx::new(&db, &poly, &Matrix2::identity()).unwrap();
        assert!(ctx.coeffs.iter().flatten().all(|c| c.abs() < 1e-12));
        for i in 0..6 {
            for j in 0..6 {
                let direct = lap.quad_form(&db.liftings[j], &db.liftings[i]);
                assert!((ctx.psi[(i, j)] - direct).abs() < 1e-12);
            }
        }
        let s2 = poly.area() / build_reference_ngon(6).unwrap().area();
        let total: f64 = ctx.phi.iter().sum();
        assert!((total - poly.area()).abs() < 1e-12 * s2.max(1.0));
    }
}

#[test]
fn brick_forms_match_direct_integration() {
    let mut r = rng(5);
    for n in 3..=8 {
        let db = small_db(n, 3, 8, 3);
        let tri = db.triangulation().unwrap();
        for _ in 0..3 {
            let poly = random_star(n, &mut r);
            let kappa = Matrix2::new(1.5, 0.3, 0.3, 0.7);
            let ctx = OnlineElementCtx::new(&db, &poly, &kappa).unwrap();
            let basis = reconstruct_basis_fe(&db, &ctx.coeffs).unwrap();
            let phys = physical_triangles(&tri, &ctx.map);
            let scale_a = ctx.psi.abs().max();
            let scale_m = ctx.phi.abs().max();
            // q_j: affine functions sampled at center and vertices
            let xk = poly.centroid();
            let pts: Vec<_> = std::iter::once(xk).chain(poly.vertices().iter().copied()).collect();
            let q = DMatrix::from_fn(n + 1, 3, |k, c| match c {
                0 => 1.0,
                1 => pts[k].x - xk.x,
                _ => 2.0 * (pts[k].y - xk.y) + 0.5 * (pts[k].x - xk.x),
            });
            let pt = ctx.phi_tilde(&db, &q).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let a = direct_stiffness(&phys, &kappa, &basis[j], &basis[i]);
                    assert!(
                        (ctx.psi[(i, j)] - a).abs() < 1e-11 * scale_a.max(1.0),
                        "N={n} psi {i}{j}"
                    );
                    let b = direct_mass(&phys, &basis[i], &basis[j]);
                    assert!(
                        (ctx.phi[(i, j)] - b).abs() < 1e-11 * scale_m.max(1.0),
                        "N={n} phi {i}{j}"
                    );
                }
                for c in 0..3 {
                    let qv: Vec<f64> = tri
                        .nodes()
                        .iter()
                        .enumerate()
                        .map(|(node, _)| (0..=n).map(|k| q[(k, c)] * tri.fan_hat(k)[node]).sum())
                        .collect();
                    let b = direct_mass(&phys, &basis[i], &qv);
                    assert!((pt[(i, c)] - b).abs() < 1e-11 * scale_m.max(1.0));
                }
            }
        }
    }
}

#[test]
fn nonsymmetric_diffusion_uses_antisymmetric_bricks() {
    let n = 5;
    let db = small_db(n, 2, 6, 3);
    let tri = db.triangulation().unwrap();
    let poly = random_star(n, &mut rng(2));
    let kappa = Matrix2::new(1.0, 0.4, -0.2, 1.3);
    let map = ElementMap::new(&poly, &kappa).unwrap();
    assert!(map.theta().iter().any(|t| t[3].abs() > 1e-3));
    let c: Vec<Vec<f64>> = (0..n).map(|j| solve_reduced(&db, map.theta(), j).unwrap()).collect();
    let basis = reconstruct_basis_fe(&db, &c).unwrap();
    let phys = physical_triangles(&tri, &map);
    let psi = compute_psi(&db, map.theta(), &c).unwrap();
    for i in 0..n {
        for j in 0..n {
            let a = 0.5
                * (direct_stiffness(&phys, &kappa, &basis[j], &basis[i])
                    + direct_stiffness(&phys, &kappa, &basis[i], &basis[j]));
            assert!((psi[(i, j)] - a).abs() < 1e-11);
        }
    }
}

#[test]
fn snapshots_reproduced_at_rank() {
    let (n, l) = (5, 4);
    let db = small_db(n, l, l, 3);
    assert_eq!(db.m, l);
    let tri = db.triangulation().unwrap();
    let forms = SectorForms::assemble(&tri).unwrap();
    let lap = forms.laplacian();
    let samples = sample_parameter_space_with(n, l, 17, &SamplingOptions::default()).unwrap();
    for poly in &samples.polygons {
        let map = ElementMap::new(poly, &Matrix2::identity()).unwrap();
        let truth = solve_snapshots(&tri, &forms, map.theta(), &db.liftings).unwrap();
        let ctx = OnlineElementCtx::from_map(&db, map).unwrap();
        let basis = reconstruct_basis_fe(&db, &ctx.coeffs).unwrap();
        for j in 0..n {
            let e: Vec<f64> = basis[j]
                .iter()
                .zip(&db.liftings[j])
                .zip(&truth[j])
                .map(|((b, t), d)| b - t - d)
                .collect();
            assert!(lap.quad_form(&e, &e).sqrt() < 1e-10);
        }
        // exact reduced solves keep the partition of unity
        let row: f64 = ctx.psi.row(0).iter().sum();
        assert!(row.abs() < 1e-11);
        for node in 0..tri.n_nodes() {
            let s: f64 = basis.iter().map(|b| b[node]).sum();
            assert!((s - 1.0).abs() < 1e-11);
        }
    }
}

#[test]
fn reduced_error_decreases_with_m() {
    let n = 6;
    let full = small_db(n, 5, 20, 3);
    let tri = full.triangulation().unwrap();
    let forms = SectorForms::assemble(&tri).unwrap();
    let mut r = rng(9);
    for _ in 0..5 {
        let poly = random_star(n, &mut r);
        let map = ElementMap::new(&poly, &Matrix2::identity()).unwrap();
        let a = forms.combine(map.theta()).unwrap();
        let truth = solve_snapshots(&tri, &forms, map.theta(), &full.liftings).unwrap();
        let mut prev = f64::INFINITY;
        for m in 1..=5 {
            let db = full.truncate(m).unwrap();
            let c = solve_reduced(&db, map.theta(), 0).unwrap();
            let mut e = truth[0].clone();
            for (l, cl) in c.iter().enumerate() {
                for (x, y) in e.iter_mut().zip(&db.rb.modes[0][l]) {
                    *x -= cl * y;
                }
            }
            let err = a.quad_form(&e, &e).sqrt();
            assert!(err <= prev * (1.0 + 1e-12) + 1e-14);
            prev = err;
        }
    }
}

#[test]
fn psi_is_psd_and_phi_spd() {
    let mut r = rng(12);
    let db = small_db(7, 2, 10, 3);
    for _ in 0..10 {
        let poly = random_star(7, &mut r);
        let ctx = OnlineElementCtx::new(&db, &poly, &Matrix2::identity()).unwrap();
        let ep = nalgebra::SymmetricEigen::new(ctx.psi.clone()).eigenvalues;
        let em = nalgebra::SymmetricEigen::new(ctx.phi.clone()).eigenvalues;
        assert!(ep.min() > -1e-10 * ep.max());
        assert!(em.min() > 0.0);
        assert!((&ctx.psi - ctx.psi.transpose()).abs().max() == 0.0);
    }
}

#[test]
fn scaling_acts_on_mass_only() {
    let db = small_db(5, 2, 6, 3);
    let poly = random_star(5, &mut rng(3));
    let a = OnlineElementCtx::new(&db, &poly, &Matrix2::identity()).unwrap();
    let b = OnlineElementCtx::new(&db, &poly.scaled(2.5), &Matrix2::identity()).unwrap();
    assert!((&a.psi - &b.psi).abs().max() < 1e-12);
    assert!((&a.phi * 6.25 - &b.phi).abs().max() < 1e-12 * b.phi.abs().max());
}

#[test]
fn dimension_errors() {
    let db = small_db(4, 1, 3, 2);
    let poly = random_star(5, &mut rng(1));
    assert!(OnlineElementCtx::new(&db, &poly, &Matrix2::identity()).is_err());
    assert!(solve_reduced(&db, &[[1.0, 1.0, 0.0, 0.0]; 4], 4).is_err());
    assert!(compute_psi(&db, &[[1.0, 1.0, 0.0, 0.0]; 4], &vec![vec![0.0]; 3]).is_err());
}
