//! Local lowest-order VEM machinery: elliptic projector, consistency and
//! dofi-dofi forms, and element matrices for the stabilized and the
//! reduced-basis variants.

mod element;
mod projector;
pub mod quadrature;

pub use element::{
    element_load, element_rbstab, element_rbvem, element_vem, pullback_triangles, ElementMatrices, LoadMode, Method,
    PulledBack,
};
pub use projector::{consistency_matrices, dofi_dofi_stab, pi_nabla_matrices, ProjectorMatrices, StabMode};
