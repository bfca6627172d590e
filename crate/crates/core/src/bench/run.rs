use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;

use super::config::{ExperimentConfig, Problem};
use super::errors::{
    checkerboard_reference, compute_eigen_errors, convergence_rate, detect_spurious, square_dirichlet_exact,
    sums_of_squares, LSHAPE_NEUMANN,
};
use super::field::compute_field_errors;
use crate::eigsolve::{
    apply_boundary_conditions, assemble_global, assemble_load, solve_dirichlet_source, solve_eigenproblem,
    toy_matrices, toy_parametric_sweep, BoundaryCondition, Diffusivity, GlobalSystem, RbLibrary, Spectrum, SweepRow,
};
use crate::error::{Error, Result};
use crate::polymesh::{Point2, PolyMesh};
use crate::rb_offline::{build_offline_db, load_offline_db, DbStore, OfflineConfig};
use crate::vem_core::Method;

/// Errors and tail slopes of a mesh-refinement study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    pub targets: Vec<String>,
    /// reference value per target (NaN for field norms)
    pub reference: Vec<f64>,
    /// `[target][mesh]`
    pub errors: Vec<Vec<f64>>,
    /// per target, empty with fewer than two meshes
    pub slopes: Vec<f64>,
    pub window: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessReport {
    pub m: Vec<usize>,
    /// `[M][index]`
    pub eigenvalues: Vec<Vec<f64>>,
    /// `(max - min) / |mean|` per index
    pub spread: Vec<f64>,
}

/// One solved eigenproblem with its quality measures.
#[derive(Clone, Debug)]
pub struct EigenRun {
    pub h: f64,
    pub spectrum: Spectrum,
    /// Eigenvectors on all mesh nodes, zero on eliminated ones.
    pub nodal_modes: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub orthonormality_defect: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentResult {
    pub convergence: Option<ConvergenceReport>,
    pub robustness: Option<RobustnessReport>,
    pub sweep: Vec<SweepRow>,
    /// computed eigenvalues per mesh
    pub eigenvalues: Vec<Vec<f64>>,
    /// spurious `(index, value)` per mesh
    pub spurious: Vec<Vec<(usize, f64)>>,
    pub max_residual: f64,
    pub max_orthonormality_defect: f64,
    /// `(file name, contents)`
    pub files: Vec<(String, String)>,
}

impl ExperimentResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, text)| {
                let p = dir.join(name);
                std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
                Ok(p)
            })
            .collect()
    }

    fn note(&mut self, run: &EigenRun) {
        self.max_residual = self.max_residual.max(run.max_residual);
        self.max_orthonormality_defect = self.max_orthonormality_defect.max(run.orthonormality_defect);
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.12e}")
    }
}

/// Offline databases for every vertex count of `meshes`, with `m` modes.
pub fn rb_library(cfg: &ExperimentConfig, meshes: &[PolyMesh], m: usize) -> Result<RbLibrary> {
    let mut ns: Vec<usize> = meshes.iter().flat_map(|x| x.vertex_counts()).collect();
    ns.sort_unstable();
    ns.dedup();
    let template = OfflineConfig {
        l: cfg.l,
        level: cfg.level,
        seed: cfg.offline_seed,
        ..OfflineConfig::new(0, m)
    };
    let mut lib = RbLibrary::new();
    for path in &cfg.db_files {
        let db = load_offline_db(path)?;
        if db.m < m {
            return Err(Error::Config(format!(
                "{} holds {} modes, {m} requested",
                path.display(),
                db.m
            )));
        }
        lib.insert(db.truncate(m)?);
    }
    let have = lib.vertex_counts();
    let store = cfg.db_dir.as_ref().map(DbStore::new);
    for n in ns.into_iter().filter(|n| !have.contains(n)) {
        let c = OfflineConfig { n, ..template.clone() };
        match &store {
            Some(s) => lib.insert(s.get_or_build(&c)?),
            None => {
                info!("building offline database for N = {n}");
                lib.insert(build_offline_db(&c)?);
            }
        }
    }
    Ok(lib)
}

/// Assembles, applies `bc` and solves for the lowest `num_eigs` pairs.
pub fn eigen_run(
    mesh: &PolyMesh,
    method: Method,
    diffusivity: &Diffusivity,
    rb: Option<&RbLibrary>,
    bc: BoundaryCondition,
    num_eigs: usize,
) -> Result<EigenRun> {
    let sys = assemble_global(mesh, method, diffusivity, rb)?;
    let red = apply_boundary_conditions(&sys, bc);
    let spectrum = solve_eigenproblem(&red, num_eigs)?;
    let max_residual = spectrum
        .relative_residuals(&red.k, &red.m)
        .into_iter()
        .fold(0.0, f64::max);
    let orthonormality_defect = spectrum.orthonormality_defect(&red.m);
    if spectrum.eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Numerical("eigenvalues are not ascending".into()));
    }
    let nodal_modes = spectrum
        .eigenvectors
        .column_iter()
        .map(|c| red.expand(c.as_slice()))
        .collect();
    Ok(EigenRun {
        h: mesh.h(),
        spectrum,
        nodal_modes,
        max_residual,
        orthonormality_defect,
    })
}

fn square_neumann_exact(count: usize) -> Vec<f64> {
    sums_of_squares(0, count)
        .into_iter()
        .map(|s| s as f64 * PI * PI)
        .collect()
}

/// Reference eigenvalues of an eigenvalue problem, ascending.
pub fn reference_eigenvalues(cfg: &ExperimentConfig, count: usize) -> Result<Vec<f64>> {
    match (cfg.problem, cfg.bc) {
        (Problem::SquareEig | Problem::MRobustness, BoundaryCondition::Dirichlet) => Ok(square_dirichlet_exact(count)),
        (Problem::SquareEig | Problem::MRobustness, BoundaryCondition::Neumann) => Ok(square_neumann_exact(count)),
        (Problem::LshapeEig, _) => Ok(LSHAPE_NEUMANN.to_vec()),
        (Problem::DiffusionEig, _) => checkerboard_reference(cfg.delta)
            .map(|v| v.to_vec())
            .ok_or_else(|| Error::Config(format!("no reference values for delta = {}", cfg.delta))),
        _ => Err(Error::Config(format!("{} has no reference eigenvalues", cfg.problem))),
    }
}

fn diffusivity(cfg: &ExperimentConfig) -> Diffusivity {
    if cfg.problem == Problem::DiffusionEig {
        Diffusivity::contrast(cfg.delta)
    } else {
        Diffusivity::identity()
    }
}

fn convergence(
    h: Vec<f64>,
    targets: Vec<String>,
    reference: Vec<f64>,
    errors: Vec<Vec<f64>>,
    window: usize,
) -> Result<ConvergenceReport> {
    let slopes = if h.len() >= 2 {
        errors
            .iter()
            .map(|e| convergence_rate(&h, e, window))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(ConvergenceReport {
        window: window.min(h.len()),
        h,
        targets,
        reference,
        errors,
        slopes,
    })
}

fn convergence_csv(r: &ConvergenceReport) -> String {
    let mut s = String::from("target,slope,window,points\n");
    for (t, slope) in r.targets.iter().zip(&r.slopes) {
        let _ = writeln!(s, "{t},{},{},{}", num(*slope), r.window, r.h.len());
    }
    s
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    match cfg.problem {
        Problem::ParamSweep => run_sweep(cfg),
        Problem::MRobustness => run_robustness(cfg),
        Problem::SourceConv => run_source(cfg),
        _ => run_eigen(cfg),
    }
}

fn build_meshes(cfg: &ExperimentConfig) -> Result<Vec<PolyMesh>> {
    cfg.meshes.iter().map(|m| m.build(cfg.seed)).collect()
}

fn run_eigen(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let meshes = build_meshes(cfg)?;
    let lib = if cfg.method.is_rb() {
        Some(rb_library(cfg, &meshes, cfg.m)?)
    } else {
        None
    };
    let diff = diffusivity(cfg);
    let exact = reference_eigenvalues(cfg, cfg.num_eigs)?;
    let count = cfg.num_eigs.min(exact.len());
    // a longer list for spurious detection on the square
    let wide = match cfg.problem {
        Problem::SquareEig => reference_eigenvalues(cfg, 4 * cfg.num_eigs + 8)?,
        _ => exact.clone(),
    };
    let mut out = ExperimentResult::default();
    let mut csv = String::from("h,index,lambda_h,lambda_exact,rel_error\n");
    let mut h = Vec::new();
    let mut errors = vec![Vec::new(); count];
    for (spec, mesh) in cfg.meshes.iter().zip(&meshes) {
        let run = eigen_run(mesh, cfg.method, &diff, lib.as_ref(), cfg.bc, cfg.num_eigs)?;
        let ev = run.spectrum.eigenvalues.clone();
        info!("{spec} {}: {:?}", cfg.method, ev);
        let rel = compute_eigen_errors(&ev, &exact, count)?;
        for (i, &l) in ev.iter().enumerate() {
            let (le, re) = exact.get(i).map_or((f64::NAN, f64::NAN), |&e| (e, (l - e).abs() / e));
            let _ = writeln!(csv, "{},{},{},{},{}", num(run.h), i + 1, num(l), num(le), num(re));
        }
        for (e, r) in errors.iter_mut().zip(rel) {
            e.push(r);
        }
        h.push(run.h);
        out.spurious.push(detect_spurious(&ev, &wide, cfg.tol_match));
        out.eigenvalues.push(ev);
        out.note(&run);
    }
    let targets = (1..=count).map(|i| format!("lambda_{i}")).collect();
    let report = convergence(h, targets, exact[..count].to_vec(), errors, cfg.window)?;
    out.files.push(("eigenvalues.csv".into(), csv));
    out.files.push(("convergence.csv".into(), convergence_csv(&report)));
    out.convergence = Some(report);
    Ok(out)
}

fn run_robustness(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.meshes.len() != 1 {
        return Err(Error::Config("m_robustness takes exactly one mesh".into()));
    }
    if !cfg.method.is_rb() {
        return Err(Error::Config("m_robustness needs a reduced-basis method".into()));
    }
    let meshes = build_meshes(cfg)?;
    let m_max = cfg.m_list.iter().copied().max().unwrap_or(1);
    let full = rb_library(cfg, &meshes, m_max)?;
    let mut out = ExperimentResult::default();
    let mut csv = String::from("M,index,lambda_h\n");
    let mut rows = Vec::new();
    for &m in &cfg.m_list {
        let lib = full.truncated(m)?;
        let run = eigen_run(
            &meshes[0],
            cfg.method,
            &Diffusivity::identity(),
            Some(&lib),
            cfg.bc,
            cfg.num_eigs,
        )?;
        for (i, l) in run.spectrum.eigenvalues.iter().enumerate() {
            let _ = writeln!(csv, "{m},{},{}", i + 1, num(*l));
        }
        out.note(&run);
        rows.push(run.spectrum.eigenvalues.clone());
    }
    let k = rows.iter().map(Vec::len).min().unwrap_or(0);
    let spread = (0..k)
        .map(|i| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            (hi - lo) / mean.abs()
        })
        .collect();
    out.eigenvalues = rows.clone();
    out.files.push(("robustness.csv".into(), csv));
    out.robustness = Some(RobustnessReport {
        m: cfg.m_list.clone(),
        eigenvalues: rows,
        spread,
    });
    Ok(out)
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let (c1, c2) = toy_matrices();
    let rows = toy_parametric_sweep(&c1, &c2, cfg.sweep_mode, &cfg.sweep_values)?;
    let mut csv = String::from("param,index,lambda\n");
    for r in &rows {
        for (i, l) in r.eigenvalues.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", num(r.param), i + 1, num(*l));
        }
    }
    Ok(ExperimentResult {
        sweep: rows,
        files: vec![("sweep.csv".into(), csv)],
        ..Default::default()
    })
}

/// `u = sin(πx) sin(πy)` on the unit square.
pub fn source_exact(p: Point2) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin()
}

pub fn source_exact_grad(p: Point2) -> Point2 {
    Point2::new(
        PI * (PI * p.x).cos() * (PI * p.y).sin(),
        PI * (PI * p.x).sin() * (PI * p.y).cos(),
    )
}

/// Solves the Dirichlet source problem for `u = sin(πx) sin(πy)` and returns
/// the discrete solution and the system it came from.
pub fn solve_source_problem(
    mesh: &PolyMesh,
    cfg: &ExperimentConfig,
    rb: Option<&RbLibrary>,
) -> Result<(GlobalSystem, Vec<f64>)> {
    let sys = assemble_global(mesh, cfg.method, &Diffusivity::identity(), rb)?;
    let f = |p: Point2| 2.0 * PI * PI * source_exact(p);
    let load = assemble_load(mesh, &sys, &f, cfg.load, rb)?;
    let pts = mesh.points();
    let u = solve_dirichlet_source(&sys, &load, &|i| source_exact(pts[i]))?;
    Ok((sys, u))
}

fn run_source(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let meshes = build_meshes(cfg)?;
    let lib = if cfg.method.is_rb() {
        Some(rb_library(cfg, &meshes, cfg.m)?)
    } else {
        None
    };
    let mut csv = String::from("h,target,error\n");
    let (mut h, mut e1, mut e0) = (Vec::new(), Vec::new(), Vec::new());
    for mesh in &meshes {
        let (sys, u) = solve_source_problem(mesh, cfg, lib.as_ref())?;
        let (eh1, el2) = compute_field_errors(mesh, &sys, lib.as_ref(), &u, &source_exact, &source_exact_grad)?;
        info!("h = {:.4}: H1 {eh1:e}, L2 {el2:e}", mesh.h());
        let _ = writeln!(csv, "{},h1,{}", num(mesh.h()), num(eh1));
        let _ = writeln!(csv, "{},l2,{}", num(mesh.h()), num(el2));
        h.push(mesh.h());
        e1.push(eh1);
        e0.push(el2);
    }
    let report = convergence(
        h,
        vec!["h1".into(), "l2".into()],
        vec![f64::NAN, f64::NAN],
        vec![e1, e0],
        cfg.window,
    )?;
    Ok(ExperimentResult {
        files: vec![
            ("errors.csv".into(), csv),
            ("convergence.csv".into(), convergence_csv(&report)),
        ],
        convergence: Some(report),
        ..Default::default()
    })
}
