//! Motion-field quality metrics for frame-interpolated video.
//!
//! The crate scores a distorted (interpolated) sequence against its high
//! frame rate reference by estimating dense motion fields for both and
//! comparing them: endpoint error, trajectory smoothness, vector-median
//! deviation, divergence, and motion-weighted PSNR/SSIM. Scores can then be
//! correlated against subjective DMOS with a four-parameter logistic fit.

pub mod correlation;
pub mod error;
pub mod estimate;
pub mod export;
pub mod flow;
pub mod image;
pub mod manifest;
pub mod media;
pub mod pipeline;
pub mod report;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
pub use flow::MotionField;
pub use media::{Frame, VideoSequence};
