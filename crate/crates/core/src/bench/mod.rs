//! Benchmark drivers: reference spectra, error measures, convergence rates
//! and the experiment runner behind the command-line tool.

mod config;
mod errors;
mod field;
mod run;

pub use config::{ExperimentConfig, MeshSpec, Problem};
pub use errors::{
    checkerboard_reference, compute_eigen_errors, convergence_rate, detect_spurious, square_dirichlet_exact,
    LSHAPE_NEUMANN,
};
pub use field::compute_field_errors;
pub use run::{
    eigen_run, rb_library, reference_eigenvalues, run_experiment, solve_source_problem, source_exact,
    source_exact_grad, ConvergenceReport, EigenRun, ExperimentResult, RobustnessReport,
};
