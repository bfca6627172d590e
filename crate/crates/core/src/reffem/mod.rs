//! P1 finite elements on a sector-conforming triangulation of the reference
//! regular N-gon: sector forms, harmonic liftings and truth snapshots.

mod forms;
mod solve;
mod triangulation;

pub use forms::{p1_gradients, SectorBlock, SectorForms};
pub use solve::{
    harmonic_lifting, harmonic_liftings, interior_residual, solve_snapshot, solve_snapshots, InteriorSolver,
};
pub use triangulation::{build_reference_ngon, RefTriangulation};
