//! Shared error types.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("pixel plane has {actual} bytes, expected {expected}")]
    PlaneSize { expected: usize, actual: usize },
}
