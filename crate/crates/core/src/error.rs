//! Error type shared by all pipeline stages.

use std::path::PathBuf;

/// Errors produced by the floorvis library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid sigma {0}: must be > 0")]
    InvalidSigma(f64),
    #[error("invalid superpixel count k={k}: must be in [1, {n_pixels}]")]
    InvalidK { k: u32, n_pixels: usize },
    #[error("empty image")]
    EmptyImage,
    #[error("position ({x}, {y}) out of bounds")]
    OutOfBounds { x: i64, y: i64 },
    #[error("unknown segment label {0}")]
    UnknownLabel(u32),
    #[error("dimension mismatch: {expected:?} vs {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("no superpixel intersects the safe zone")]
    EmptyIntersection,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("seed point ({x}, {y}) out of bounds")]
    SeedOutOfBounds { x: i64, y: i64 },
    #[error(
        "seed superpixel {label} is not floor (ssd {ssd:.4} > threshold {threshold:.4}); \
         the safe zone assumption is violated"
    )]
    SeedNotFloor { label: u32, ssd: f64, threshold: f64 },
    #[error("flood fill node ({x}, {y}) out of bounds")]
    NodeOutOfBounds { x: i64, y: i64 },
    #[error("invalid thresholds: low {low} > high {high}")]
    InvalidThresholds { low: f64, high: f64 },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("point maps to infinity (homogeneous w ~ 0)")]
    PointAtInfinity,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid safe zone: {0}")]
    InvalidSafeZone(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
