//! Core pixel and video identity types shared by every pipeline stage.

use serde::{Deserialize, Serialize};

use crate::error::FrameError;

/// Pixel payload of a decoded frame: a single 8-bit luma plane or
/// three interleaved 8-bit RGB channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PixelData {
    Luma(Vec<u8>),
    Rgb(Vec<u8>),
}

impl PixelData {
    pub fn channels(&self) -> usize {
        match self {
            PixelData::Luma(_) => 1,
            PixelData::Rgb(_) => 3,
        }
    }

    pub fn bytes(&self) -> &[u8] {
        match self {
            PixelData::Luma(b) | PixelData::Rgb(b) => b,
        }
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        match self {
            PixelData::Luma(b) | PixelData::Rgb(b) => b,
        }
    }
}

/// One decoded image with its video/frame identity.
///
/// `frame_index` is 0-based everywhere inside the toolkit; the CSV wire
/// format uses 1-based frame ids (see the detection reader).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub video_id: u32,
    pub frame_index: u32,
    pub width: u32,
    pub height: u32,
    pub pixels: PixelData,
}

impl Frame {
    pub fn new_luma(
        video_id: u32,
        frame_index: u32,
        width: u32,
        height: u32,
        luma: Vec<u8>,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if luma.len() != expected {
            return Err(FrameError::PlaneSize {
                expected,
                actual: luma.len(),
            });
        }
        Ok(Frame {
            video_id,
            frame_index,
            width,
            height,
            pixels: PixelData::Luma(luma),
        })
    }

    pub fn new_rgb(
        video_id: u32,
        frame_index: u32,
        width: u32,
        height: u32,
        rgb: Vec<u8>,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if rgb.len() != expected {
            return Err(FrameError::PlaneSize {
                expected,
                actual: rgb.len(),
            });
        }
        Ok(Frame {
            video_id,
            frame_index,
            width,
            height,
            pixels: PixelData::Rgb(rgb),
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Luma value at (x, y). RGB pixels go through integer Rec.601.
    pub fn luma_at(&self, x: u32, y: u32) -> u8 {
        let idx = (y as usize * self.width as usize + x as usize) * self.pixels.channels();
        match &self.pixels {
            PixelData::Luma(b) => b[idx],
            PixelData::Rgb(b) => rgb_to_luma(b[idx], b[idx + 1], b[idx + 2]),
        }
    }

    /// Collapse to a single luma plane. Luma frames are returned as-is.
    pub fn to_luma(&self) -> Frame {
        match &self.pixels {
            PixelData::Luma(_) => self.clone(),
            PixelData::Rgb(rgb) => {
                let luma: Vec<u8> = rgb
                    .chunks_exact(3)
                    .map(|px| rgb_to_luma(px[0], px[1], px[2]))
                    .collect();
                Frame {
                    video_id: self.video_id,
                    frame_index: self.frame_index,
                    width: self.width,
                    height: self.height,
                    pixels: PixelData::Luma(luma),
                }
            }
        }
    }
}

/// Integer Rec.601 luma: Y = round(0.299 R + 0.587 G + 0.114 B).
///
/// Fixed-point with 16-bit fractional coefficients; exact rounding for
/// all 8-bit inputs.
pub fn rgb_to_luma(r: u8, g: u8, b: u8) -> u8 {
    // 19595/65536 = 0.2990, 38470/65536 = 0.5870, 7471/65536 = 0.1140
    let y = 19595u32 * r as u32 + 38470u32 * g as u32 + 7471u32 * b as u32;
    ((y + 32768) >> 16) as u8
}

/// Exact frames-per-second as a ratio, as carried by the Y4M header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub fn new(num: u32, den: u32) -> Self {
        Rational { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.num, self.den)
    }
}

/// Identity and stream parameters of one source video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSource {
    pub video_id: u32,
    pub path: std::path::PathBuf,
    pub fps: Rational,
    pub frame_count: u32,
    pub width: u32,
    pub height: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_rejects_bad_plane_size() {
        assert!(Frame::new_luma(1, 0, 2, 2, vec![0; 3]).is_err());
        assert!(Frame::new_luma(1, 0, 2, 2, vec![0; 4]).is_ok());
        assert!(Frame::new_luma(1, 0, 0, 2, vec![]).is_err());
    }

    #[test]
    fn rec601_matches_float_rounding() {
        for &(r, g, b) in &[(0u8, 0u8, 0u8), (255, 255, 255), (255, 0, 0), (12, 200, 9)] {
            let expect =
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8;
            assert_eq!(rgb_to_luma(r, g, b), expect, "rgb ({r},{g},{b})");
        }
    }

    #[test]
    fn rgb_to_luma_plane() {
        let f = Frame::new_rgb(1, 0, 1, 1, vec![255, 0, 0]).unwrap();
        let l = f.to_luma();
        assert_eq!(l.pixels, PixelData::Luma(vec![76]));
    }
}
