use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid topology in cell {cell}: {msg}")]
    Topology { cell: usize, msg: String },

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("polygon is not star-shaped with respect to its centroid{}", cell_suffix(.cell))]
    NotStarShaped { cell: Option<usize> },

    #[error("degenerate fan sector {sector} (collinear with the centroid)")]
    SingularSector { sector: usize },

    #[error("degenerate mesh cell {cell}: {msg}")]
    DegenerateCell { cell: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("singular reduced system: {0}")]
    SingularReducedSystem(String),

    #[error("rejection sampling exhausted after {tries} tries")]
    SamplingExhausted { tries: usize },

    #[error("no offline database available for polygons with {0} vertices")]
    MissingOfflineDb(usize),

    #[error("element {cell}: {source}")]
    Element {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("offline database checksum mismatch")]
    Checksum,

    #[error("unsupported offline database version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid offline database: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn cell_suffix(cell: &Option<usize>) -> String {
    match cell {
        Some(c) => format!(" (cell {c})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_cell(self, cell: usize) -> Self {
        match self {
            Error::NotStarShaped { cell: None } => Error::NotStarShaped { cell: Some(cell) },
            e @ Error::Element { .. } => e,
            e => Error::Element {
                cell,
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable tag of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Topology { .. } => "topology",
            Error::InvalidPolygon(_) => "invalid_polygon",
            Error::NotStarShaped { .. } => "not_star_shaped",
            Error::SingularSector { .. } => "singular_sector",
            Error::DegenerateCell { .. } => "degenerate_cell",
            Error::Dimension(_) => "dimension",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NoConvergence(_) => "no_convergence",
            Error::SingularReducedSystem(_) => "singular_reduced_system",
            Error::SamplingExhausted { .. } => "sampling_exhausted",
            Error::MissingOfflineDb(_) => "missing_offline_db",
            Error::Element { source, .. } => source.kind(),
            Error::Checksum => "checksum",
            Error::Version { .. } => "version",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// True for failures of the numerical kernels (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NoConvergence(_)
            | Error::SingularReducedSystem(_)
            | Error::Numerical(_)
            | Error::SingularSector { .. } => true,
            Error::Element { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
