//! Offline reduced-basis stage: parameter sampling, truth snapshots, POD
//! compression and parameter-independent bricks, persisted as a database.

mod bricks;
mod db;
mod pod;
mod sampling;

pub use bricks::{precompute_bricks, BrickDb};
pub use db::{
    build_offline_db, decode_offline_db, encode_offline_db, load_offline_db, save_offline_db, DbStore, OfflineConfig,
    OfflineDb, FORMAT_VERSION,
};
pub use pod::{pod_compress, PodTarget, RbSpace};
pub use sampling::{
    compute_snapshots, sample_parameter_space, sample_parameter_space_with, SampleSet, SamplingOptions,
};
