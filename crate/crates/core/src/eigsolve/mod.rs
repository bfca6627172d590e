//! Global assembly, boundary conditions, eigen and source solves.

mod assembly;
mod gevp;
mod toy;

pub use assembly::{
    apply_boundary_conditions, assemble_global, assemble_load, element_matrices, neumann_shift, solve_dirichlet_source,
    solve_eigenproblem, solve_source, BoundaryCondition, Diffusivity, ElementData, GlobalSystem, RbLibrary,
    ReducedSystem,
};
pub use gevp::{solve_gevp, solve_gevp_dense, solve_gevp_lanczos, solve_gevp_with, GevpOptions, Spectrum};
pub use toy::{toy_matrices, toy_parametric_sweep, SweepMode, SweepRow};
