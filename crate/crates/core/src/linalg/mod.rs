//! Sparse matrices and a sparse Cholesky factorization.

mod cholesky;
mod sparse;

pub use cholesky::{rcm_ordering, SparseCholesky};
pub use sparse::{axpy, dot, norm2, CsrMatrix, TripletBuilder};
