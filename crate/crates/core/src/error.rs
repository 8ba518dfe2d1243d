use thiserror::Error;

/// Errors produced by the geometry kernel, the partition process, the
/// sampler and the data/model plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("non-finite coordinate in point set")]
    NonFinitePoint,

    #[error("unsplittable region")]
    UnsplittableRegion,

    #[error("zero-length projection for direction {theta}")]
    ZeroProjection { theta: f64 },

    #[error("cut misses region")]
    CutMissesRegion,

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("no cuttable leaf")]
    NoCuttableLeaf,

    #[error("invalid dimension pair ({0}, {1})")]
    InvalidDimensionPair(usize, usize),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("degenerate label variance")]
    DegenerateLabels,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("model decode error: {0}")]
    Decode(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
