pub mod bench;
pub mod eigsolve;
pub mod error;
pub mod linalg;
pub mod polymesh;
pub mod rb_offline;
pub mod rb_online;
pub mod reffem;
pub mod vem_core;

pub use error::{Error, Result};
