//! Bit-exact readers and writers for the toolkit's wire formats.

pub mod detections;
pub mod manifest;
pub mod pnm;
pub mod y4m;
