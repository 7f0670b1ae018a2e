//! The six augmentations (horizontal flip, rotation, scaling, cropping,
//! blurring, color manipulation) applied to pixels and, for the geometric
//! ops, co-applied to bounding boxes.
//!
//! Geometric box transforms map the four corners and take the axis-aligned
//! hull. Crop is the only op that can drop a box (surviving area below a
//! fraction of the original). Photometric ops never touch geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{rgb_to_luma, Frame, PixelData};
use crate::io::detections::BBox;

/// Fraction of a box's area that must survive a crop.
pub const DEFAULT_CROP_SURVIVAL: f64 = 0.25;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("crop rectangle ({left},{top},{width},{height}) lies outside a {fw}x{fh} frame")]
    CropOutsideFrame {
        left: i64,
        top: i64,
        width: u32,
        height: u32,
        fw: u32,
        fh: u32,
    },
    #[error("blur radius must be non-negative, got {0}")]
    NegativeBlurRadius(f64),
    #[error("contrast factor must be positive, got {0}")]
    NonPositiveContrast(f64),
    #[error("chain failed at spec {index}: {source}")]
    Chain {
        index: usize,
        #[source]
        source: Box<AugmentError>,
    },
}

/// Axis-aligned box with real coordinates, used while transforming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxF {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BoxF {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        BoxF { left, top, width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.left, self.top),
            (self.left + self.width, self.top),
            (self.left, self.top + self.height),
            (self.left + self.width, self.top + self.height),
        ]
    }

    /// Axis-aligned hull of a set of points.
    pub fn hull(points: &[(f64, f64)]) -> Self {
        let xs = points.iter().map(|p| p.0);
        let ys = points.iter().map(|p| p.1);
        let min_x = xs.clone().fold(f64::INFINITY, f64::min);
        let max_x = xs.fold(f64::NEG_INFINITY, f64::max);
        let min_y = ys.clone().fold(f64::INFINITY, f64::min);
        let max_y = ys.fold(f64::NEG_INFINITY, f64::max);
        BoxF::new(min_x, min_y, max_x - min_x, max_y - min_y)
    }

    /// Integer wire form: corners rounded to nearest pixel.
    pub fn to_bbox(&self) -> BBox {
        let left = self.left.round() as i64;
        let top = self.top.round() as i64;
        let right = (self.left + self.width).round() as i64;
        let bottom = (self.top + self.height).round() as i64;
        BBox::new(left, top, (right - left).max(1), (bottom - top).max(1))
    }
}

impl From<BBox> for BoxF {
    fn from(b: BBox) -> Self {
        BoxF::new(b.left as f64, b.top as f64, b.width as f64, b.height as f64)
    }
}

/// One augmentation op with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentationSpec {
    HFlip,
    Rotate { degrees: f64 },
    Scale { factor: f64 },
    Crop { left: i64, top: i64, width: u32, height: u32 },
    Blur { radius: f64 },
    Color { brightness: f64, contrast: f64, saturation: f64 },
}

impl AugmentationSpec {
    /// Photometric ops keep geometry, so negatives stay full-frame
    /// backgrounds under them.
    pub fn preserves_geometry(&self) -> bool {
        matches!(
            self,
            AugmentationSpec::Blur { .. } | AugmentationSpec::Color { .. }
        ) || matches!(self, AugmentationSpec::HFlip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub frame: Frame,
    pub boxes: Vec<BoxF>,
    /// for each surviving box, its index in the input box list
    pub box_sources: Vec<usize>,
    pub applied: Vec<AugmentationSpec>,
}

pub fn apply(
    frame: &Frame,
    boxes: &[BoxF],
    spec: AugmentationSpec,
) -> Result<AugmentedSample, AugmentError> {
    apply_with_survival(frame, boxes, spec, DEFAULT_CROP_SURVIVAL)
}

pub fn apply_with_survival(
    frame: &Frame,
    boxes: &[BoxF],
    spec: AugmentationSpec,
    crop_survival: f64,
) -> Result<AugmentedSample, AugmentError> {
    let all = |n: usize| (0..n).collect::<Vec<usize>>();
    let (out_frame, out_boxes, box_sources) = match spec {
        AugmentationSpec::HFlip => (
            hflip_pixels(frame),
            hflip_boxes(frame.width, boxes),
            all(boxes.len()),
        ),
        AugmentationSpec::Rotate { degrees } => {
            if degrees == 0.0 {
                (frame.clone(), boxes.to_vec(), all(boxes.len()))
            } else {
                let (f, b) = rotate(frame, boxes, degrees);
                (f, b, all(boxes.len()))
            }
        }
        AugmentationSpec::Scale { factor } => {
            if factor <= 0.0 {
                return Err(AugmentError::NonPositiveScale(factor));
            }
            (
                scale_pixels(frame, factor),
                scale_boxes(boxes, factor),
                all(boxes.len()),
            )
        }
        AugmentationSpec::Crop { left, top, width, height } => {
            let (f, b, s) = crop(frame, boxes, left, top, width, height, crop_survival)?;
            (f, b, s)
        }
        AugmentationSpec::Blur { radius } => {
            if radius < 0.0 {
                return Err(AugmentError::NegativeBlurRadius(radius));
            }
            let f = if radius == 0.0 { frame.clone() } else { gaussian_blur(frame, radius) };
            (f, boxes.to_vec(), all(boxes.len()))
        }
        AugmentationSpec::Color { brightness, contrast, saturation } => {
            if contrast <= 0.0 {
                return Err(AugmentError::NonPositiveContrast(contrast));
            }
            (
                color_adjust(frame, brightness, contrast, saturation),
                boxes.to_vec(),
                all(boxes.len()),
            )
        }
    };
    Ok(AugmentedSample {
        frame: out_frame,
        boxes: out_boxes,
        box_sources,
        applied: vec![spec],
    })
}

/// Left-to-right composition; `applied` records the exact ordered specs.
pub fn apply_chain(
    frame: &Frame,
    boxes: &[BoxF],
    specs: &[AugmentationSpec],
) -> Result<AugmentedSample, AugmentError> {
    let mut sample = AugmentedSample {
        frame: frame.clone(),
        boxes: boxes.to_vec(),
        box_sources: (0..boxes.len()).collect(),
        applied: Vec::new(),
    };
    for (index, &spec) in specs.iter().enumerate() {
        let next = apply(&sample.frame, &sample.boxes, spec).map_err(|source| {
            AugmentError::Chain { index, source: Box::new(source) }
        })?;
        sample.frame = next.frame;
        sample.boxes = next.boxes;
        // compose survival through the chain
        sample.box_sources = next
            .box_sources
            .iter()
            .map(|&i| sample.box_sources[i])
            .collect();
        sample.applied.push(spec);
    }
    Ok(sample)
}

fn hflip_pixels(frame: &Frame) -> Frame {
    let w = frame.width as usize;
    let ch = frame.pixels.channels();
    let src = frame.pixels.bytes();
    let mut out = vec![0u8; src.len()];
    for row in 0..frame.height as usize {
        let base = row * w * ch;
        for x in 0..w {
            let s = base + x * ch;
            let d = base + (w - 1 - x) * ch;
            out[d..d + ch].copy_from_slice(&src[s..s + ch]);
        }
    }
    let pixels = match frame.pixels {
        PixelData::Luma(_) => PixelData::Luma(out),
        PixelData::Rgb(_) => PixelData::Rgb(out),
    };
    Frame { pixels, ..frame.clone() }
}

fn hflip_boxes(width: u32, boxes: &[BoxF]) -> Vec<BoxF> {
    boxes
        .iter()
        .map(|b| BoxF::new(width as f64 - b.left - b.width, b.top, b.width, b.height))
        .collect()
}

/// Map a point through the rotation used by both pixels and boxes:
/// rotate by `degrees` about the source center, then recenter on the
/// expanded canvas.
pub fn rotate_point(
    (x, y): (f64, f64),
    degrees: f64,
    src: (u32, u32),
    dst: (u32, u32),
) -> (f64, f64) {
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = src.0 as f64 / 2.0;
    let cy = src.1 as f64 / 2.0;
    let dx = x - cx;
    let dy = y - cy;
    (
        cos * dx - sin * dy + dst.0 as f64 / 2.0,
        sin * dx + cos * dy + dst.1 as f64 / 2.0,
    )
}

/// Canvas size that fits the whole rotated frame.
pub fn rotated_canvas(width: u32, height: u32, degrees: f64) -> (u32, u32) {
    let theta = degrees.to_radians();
    let (sin, cos) = (theta.sin().abs(), theta.cos().abs());
    let w = width as f64;
    let h = height as f64;
    // small epsilon so axis-aligned angles don't gain a row from
    // floating-point dust
    (
        ((w * cos + h * sin - 1e-9).ceil() as u32).max(1),
        ((w * sin + h * cos - 1e-9).ceil() as u32).max(1),
    )
}

fn rotate(frame: &Frame, boxes: &[BoxF], degrees: f64) -> (Frame, Vec<BoxF>) {
    let (nw, nh) = rotated_canvas(frame.width, frame.height, degrees);
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let scx = frame.width as f64 / 2.0;
    let scy = frame.height as f64 / 2.0;
    let dcx = nw as f64 / 2.0;
    let dcy = nh as f64 / 2.0;
    let ch = frame.pixels.channels();
    let mut out = vec![0u8; nw as usize * nh as usize * ch];
    for y in 0..nh as usize {
        for x in 0..nw as usize {
            // inverse map: rotate dest offset by -theta back into source
            let dx = (x as f64 + 0.5) - dcx;
            let dy = (y as f64 + 0.5) - dcy;
            let sx = cos * dx + sin * dy + scx - 0.5;
            let sy = -sin * dx + cos * dy + scy - 0.5;
            let dst = (y * nw as usize + x) * ch;
            sample_bilinear(frame, sx, sy, &mut out[dst..dst + ch]);
        }
    }
    let pixels = match frame.pixels {
        PixelData::Luma(_) => PixelData::Luma(out),
        PixelData::Rgb(_) => PixelData::Rgb(out),
    };
    let out_frame = Frame {
        width: nw,
        height: nh,
        pixels,
        ..frame.clone()
    };
    let out_boxes = boxes
        .iter()
        .map(|b| {
            let mapped: Vec<(f64, f64)> = b
                .corners()
                .iter()
                .map(|&(x, y)| {
                    let dx = x - scx;
                    let dy = y - scy;
                    (cos * dx - sin * dy + dcx, sin * dx + cos * dy + dcy)
                })
                .collect();
            BoxF::hull(&mapped)
        })
        .collect();
    (out_frame, out_boxes)
}

/// Bilinear sample at real source coordinates; outside pixels are black.
fn sample_bilinear(frame: &Frame, sx: f64, sy: f64, out: &mut [u8]) {
    let w = frame.width as i64;
    let h = frame.height as i64;
    let ch = frame.pixels.channels();
    let x0 = sx.floor() as i64;
    let y0 = sy.floor() as i64;
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let src = frame.pixels.bytes();
    let fetch = |x: i64, y: i64, c: usize| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            src[(y as usize * w as usize + x as usize) * ch + c] as f64
        }
    };
    for c in 0..ch {
        let v = fetch(x0, y0, c) * (1.0 - fx) * (1.0 - fy)
            + fetch(x0 + 1, y0, c) * fx * (1.0 - fy)
            + fetch(x0, y0 + 1, c) * (1.0 - fx) * fy
            + fetch(x0 + 1, y0 + 1, c) * fx * fy;
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
}

fn scale_pixels(frame: &Frame, factor: f64) -> Frame {
    let nw = ((frame.width as f64 * factor).round() as u32).max(1);
    let nh = ((frame.height as f64 * factor).round() as u32).max(1);
    let ch = frame.pixels.channels();
    let mut out = vec![0u8; nw as usize * nh as usize * ch];
    for y in 0..nh as usize {
        for x in 0..nw as usize {
            let sx = (x as f64 + 0.5) * frame.width as f64 / nw as f64 - 0.5;
            let sy = (y as f64 + 0.5) * frame.height as f64 / nh as f64 - 0.5;
            let dst = (y * nw as usize + x) * ch;
            sample_bilinear(frame, sx, sy, &mut out[dst..dst + ch]);
        }
    }
    let pixels = match frame.pixels {
        PixelData::Luma(_) => PixelData::Luma(out),
        PixelData::Rgb(_) => PixelData::Rgb(out),
    };
    Frame { width: nw, height: nh, pixels, ..frame.clone() }
}

fn scale_boxes(boxes: &[BoxF], factor: f64) -> Vec<BoxF> {
    boxes
        .iter()
        .map(|b| BoxF::new(b.left * factor, b.top * factor, b.width * factor, b.height * factor))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn crop(
    frame: &Frame,
    boxes: &[BoxF],
    left: i64,
    top: i64,
    width: u32,
    height: u32,
    survival: f64,
) -> Result<(Frame, Vec<BoxF>, Vec<usize>), AugmentError> {
    let err = || AugmentError::CropOutsideFrame {
        left,
        top,
        width,
        height,
        fw: frame.width,
        fh: frame.height,
    };
    if width == 0 || height == 0 {
        return Err(err());
    }
    // clamp the rectangle to the frame
    let x0 = left.max(0);
    let y0 = top.max(0);
    let x1 = (left + width as i64).min(frame.width as i64);
    let y1 = (top + height as i64).min(frame.height as i64);
    if x0 >= x1 || y0 >= y1 {
        return Err(err());
    }
    let (x0, y0, x1, y1) = (x0 as usize, y0 as usize, x1 as usize, y1 as usize);
    let cw = x1 - x0;
    let chh = y1 - y0;
    let ch = frame.pixels.channels();
    let src = frame.pixels.bytes();
    let mut out = Vec::with_capacity(cw * chh * ch);
    for row in y0..y1 {
        let base = (row * frame.width as usize + x0) * ch;
        out.extend_from_slice(&src[base..base + cw * ch]);
    }
    let pixels = match frame.pixels {
        PixelData::Luma(_) => PixelData::Luma(out),
        PixelData::Rgb(_) => PixelData::Rgb(out),
    };
    let out_frame = Frame {
        width: cw as u32,
        height: chh as u32,
        pixels,
        ..frame.clone()
    };
    let mut out_boxes = Vec::new();
    let mut sources = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let bl = (b.left - x0 as f64).max(0.0);
        let bt = (b.top - y0 as f64).max(0.0);
        let br = (b.left + b.width - x0 as f64).min(cw as f64);
        let bb = (b.top + b.height - y0 as f64).min(chh as f64);
        if br <= bl || bb <= bt {
            continue;
        }
        let clipped = BoxF::new(bl, bt, br - bl, bb - bt);
        if clipped.area() < survival * b.area() {
            continue;
        }
        out_boxes.push(clipped);
        sources.push(i);
    }
    Ok((out_frame, out_boxes, sources))
}

/// Gaussian blur with sigma = radius / 2, kernel truncated at 3 sigma.
fn gaussian_blur(frame: &Frame, radius: f64) -> Frame {
    let sigma = radius / 2.0;
    let half = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut kernel = Vec::with_capacity((2 * half + 1) as usize);
    for i in -half..=half {
        kernel.push((-(i as f64 * i as f64) / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    let w = frame.width as i64;
    let h = frame.height as i64;
    let ch = frame.pixels.channels();
    let src = frame.pixels.bytes();
    // horizontal pass in f64, clamp-to-edge
    let mut mid = vec![0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sx = (x + ki as i64 - half).clamp(0, w - 1);
                    acc += k * src[(y * w + sx) as usize * ch + c] as f64;
                }
                mid[(y * w + x) as usize * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sy = (y + ki as i64 - half).clamp(0, h - 1);
                    acc += k * mid[(sy * w + x) as usize * ch + c];
                }
                out[(y * w + x) as usize * ch + c] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let pixels = match frame.pixels {
        PixelData::Luma(_) => PixelData::Luma(out),
        PixelData::Rgb(_) => PixelData::Rgb(out),
    };
    Frame { pixels, ..frame.clone() }
}

/// Brightness (additive, scaled by 255), then contrast about 128, then a
/// luma-preserving saturation mix in RGB. Saturation is a no-op on luma
/// frames.
fn color_adjust(frame: &Frame, brightness: f64, contrast: f64, saturation: f64) -> Frame {
    let adjust = |v: u8| -> f64 {
        let v = v as f64 + brightness * 255.0;
        (v - 128.0) * contrast + 128.0
    };
    let clamp8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let pixels = match &frame.pixels {
        PixelData::Luma(b) => PixelData::Luma(b.iter().map(|&v| clamp8(adjust(v))).collect()),
        PixelData::Rgb(b) => {
            let mut out = Vec::with_capacity(b.len());
            for px in b.chunks_exact(3) {
                let r = adjust(px[0]);
                let g = adjust(px[1]);
                let bl = adjust(px[2]);
                let y = rgb_to_luma(clamp8(r), clamp8(g), clamp8(bl)) as f64;
                out.push(clamp8(y + saturation * (r - y)));
                out.push(clamp8(y + saturation * (g - y)));
                out.push(clamp8(y + saturation * (bl - y)));
            }
            PixelData::Rgb(out)
        }
    };
    Frame { pixels, ..frame.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_2x2() -> Frame {
        Frame::new_luma(1, 0, 2, 2, vec![10, 20, 30, 40]).unwrap()
    }

    #[test]
    fn hflip_box_on_full_hd_width() {
        let boxes = [BoxF::new(100.0, 200.0, 50.0, 80.0)];
        let flipped = hflip_boxes(1920, &boxes);
        assert_eq!(flipped[0], BoxF::new(1770.0, 200.0, 50.0, 80.0));
    }

    #[test]
    fn hflip_is_involution() {
        let f = frame_2x2();
        let boxes = [BoxF::new(0.0, 0.0, 1.0, 2.0)];
        let once = apply(&f, &boxes, AugmentationSpec::HFlip).unwrap();
        let twice = apply(&once.frame, &once.boxes, AugmentationSpec::HFlip).unwrap();
        assert_eq!(twice.frame, f);
        assert_eq!(twice.boxes, boxes.to_vec());
        assert_eq!(once.frame.pixels.bytes(), &[20, 10, 40, 30]);
    }

    #[test]
    fn rotate_zero_is_bit_identical() {
        let f = frame_2x2();
        let boxes = [BoxF::new(0.0, 0.0, 2.0, 1.0)];
        let s = apply(&f, &boxes, AugmentationSpec::Rotate { degrees: 0.0 }).unwrap();
        assert_eq!(s.frame, f);
        assert_eq!(s.boxes, boxes.to_vec());
    }

    #[test]
    fn rotate_expands_canvas() {
        let f = Frame::new_luma(1, 0, 4, 2, vec![50; 8]).unwrap();
        let s = apply(&f, &[], AugmentationSpec::Rotate { degrees: 90.0 }).unwrap();
        assert_eq!((s.frame.width, s.frame.height), (2, 4));
    }

    #[test]
    fn scale_boxes_are_linear() {
        let s = scale_boxes(&[BoxF::new(100.0, 200.0, 50.0, 80.0)], 0.5);
        assert_eq!(s[0], BoxF::new(50.0, 100.0, 25.0, 40.0));
    }

    #[test]
    fn scale_chain_restores_dimensions_and_boxes() {
        let f = Frame::new_luma(1, 0, 8, 6, (0..48).collect()).unwrap();
        let boxes = [BoxF::new(2.0, 1.0, 4.0, 3.0)];
        let s = apply_chain(
            &f,
            &boxes,
            &[
                AugmentationSpec::Scale { factor: 2.0 },
                AugmentationSpec::Scale { factor: 0.5 },
            ],
        )
        .unwrap();
        assert_eq!((s.frame.width, s.frame.height), (8, 6));
        assert_eq!(s.boxes, boxes.to_vec());
        assert_eq!(s.applied.len(), 2);
    }

    #[test]
    fn empty_chain_is_identity() {
        let f = frame_2x2();
        let s = apply_chain(&f, &[], &[]).unwrap();
        assert_eq!(s.frame, f);
    }

    #[test]
    fn chain_error_reports_index() {
        let f = frame_2x2();
        let err = apply_chain(
            &f,
            &[],
            &[AugmentationSpec::HFlip, AugmentationSpec::Scale { factor: -1.0 }],
        )
        .unwrap_err();
        assert!(matches!(err, AugmentError::Chain { index: 1, .. }));
    }

    #[test]
    fn crop_translates_and_drops_boxes() {
        let f = Frame::new_luma(1, 0, 10, 10, vec![0; 100]).unwrap();
        let boxes = [
            BoxF::new(4.0, 4.0, 4.0, 4.0),  // fully inside the crop
            BoxF::new(0.0, 0.0, 2.0, 2.0),  // fully outside
            BoxF::new(2.0, 2.0, 4.0, 4.0),  // 1/4 survives exactly: kept
        ];
        let s = apply(
            &f,
            &boxes,
            AugmentationSpec::Crop { left: 4, top: 4, width: 6, height: 6 },
        )
        .unwrap();
        assert_eq!((s.frame.width, s.frame.height), (6, 6));
        assert_eq!(s.boxes.len(), 2);
        assert_eq!(s.boxes[0], BoxF::new(0.0, 0.0, 4.0, 4.0));
        assert_eq!(s.boxes[1], BoxF::new(0.0, 0.0, 2.0, 2.0));
    }

    #[test]
    fn crop_fully_outside_is_error() {
        let f = frame_2x2();
        assert!(apply(
            &f,
            &[],
            AugmentationSpec::Crop { left: 5, top: 5, width: 2, height: 2 }
        )
        .is_err());
    }

    #[test]
    fn blur_zero_radius_is_identity() {
        let f = frame_2x2();
        let s = apply(&f, &[], AugmentationSpec::Blur { radius: 0.0 }).unwrap();
        assert_eq!(s.frame, f);
    }

    #[test]
    fn blur_preserves_constant_images() {
        let f = Frame::new_luma(1, 0, 5, 5, vec![77; 25]).unwrap();
        let s = apply(&f, &[], AugmentationSpec::Blur { radius: 3.0 }).unwrap();
        assert!(s.frame.pixels.bytes().iter().all(|&v| v == 77));
    }

    #[test]
    fn color_saturates_and_keeps_geometry() {
        let f = Frame::new_rgb(1, 0, 1, 1, vec![200, 100, 50]).unwrap();
        let boxes = [BoxF::new(0.0, 0.0, 1.0, 1.0)];
        let s = apply(
            &f,
            &boxes,
            AugmentationSpec::Color { brightness: 0.5, contrast: 1.0, saturation: 1.0 },
        )
        .unwrap();
        assert_eq!(s.boxes, boxes.to_vec());
        assert_eq!((s.frame.width, s.frame.height), (1, 1));
        // +0.5 brightness pushes the red channel to the ceiling
        assert_eq!(s.frame.pixels.bytes()[0], 255);
    }

    #[test]
    fn identity_color_op_is_identity() {
        let f = Frame::new_rgb(1, 0, 2, 1, vec![1, 2, 3, 250, 128, 0]).unwrap();
        let s = apply(
            &f,
            &[],
            AugmentationSpec::Color { brightness: 0.0, contrast: 1.0, saturation: 1.0 },
        )
        .unwrap();
        assert_eq!(s.frame, f);
    }

    #[test]
    fn rotated_boxes_match_corner_hull_oracle() {
        let f = Frame::new_luma(1, 0, 20, 10, vec![0; 200]).unwrap();
        let b = BoxF::new(3.0, 2.0, 5.0, 4.0);
        let degrees = 33.0;
        let s = apply(&f, &[b], AugmentationSpec::Rotate { degrees }).unwrap();
        let dst = rotated_canvas(20, 10, degrees);
        let mapped: Vec<(f64, f64)> = b
            .corners()
            .iter()
            .map(|&p| rotate_point(p, degrees, (20, 10), dst))
            .collect();
        let hull = BoxF::hull(&mapped);
        assert_eq!(s.boxes[0], hull);
    }
}
