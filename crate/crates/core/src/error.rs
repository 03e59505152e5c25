use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("frame dimensions must be even and nonzero for 4:2:0, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },

    #[error("partial frame: expected {expected} bytes per frame, got {actual} trailing bytes")]
    PartialFrame { expected: usize, actual: usize },

    #[error("plane size mismatch: {plane} plane expected {expected} samples, got {actual}")]
    PlaneSize {
        plane: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("missing YUV4MPEG2 signature")]
    Y4mSignature,

    #[error("malformed y4m header: {0}")]
    Y4mHeader(String),

    #[error("unsupported colorspace {0:?}: only 8-bit 4:2:0 is supported")]
    UnsupportedColorspace(String),

    #[error("truncated frame {index}: expected {expected} payload bytes, got {actual}")]
    TruncatedFrame {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("not a flow file: magic {0} != 202021.25")]
    FloMagic(f32),

    #[error("invalid flow dimensions {width}x{height}")]
    FloDimensions { width: i64, height: i64 },

    #[error("truncated flow payload: expected {expected} bytes, got {actual}")]
    FloTruncated { expected: usize, actual: usize },

    #[error("non-finite flow component at ({x}, {y})")]
    NonFiniteFlow { x: usize, y: usize },

    #[error("dimension mismatch: {expected_w}x{expected_h} vs {actual_w}x{actual_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        actual_w: usize,
        actual_h: usize,
    },

    #[error("frame count mismatch: reference has {reference}, distorted has {distorted}")]
    FrameCountMismatch { reference: usize, distorted: usize },

    #[error("input too small: {0}")]
    TooSmall(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("missing flow file {}", .0.display())]
    MissingFlow(PathBuf),

    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected_w: expected.0,
            expected_h: expected.1,
            actual_w: actual.0,
            actual_h: actual.1,
        }
    }
}
