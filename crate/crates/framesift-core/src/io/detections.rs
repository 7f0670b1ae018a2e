//! Challenge-format detection and ground-truth CSV.
//!
//! Rows are `video_id,frame_id,bb_left,bb_top,bb_width,bb_height,class_id`
//! with a trailing confidence column on prediction files. No header row,
//! LF line endings, frame ids 1-based on the wire by default.

use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount { row: usize, expected: usize, found: usize },
    #[error("row {row}: field `{field}` is not numeric: `{value}`")]
    NonNumeric { row: usize, field: &'static str, value: String },
    #[error("row {row}: confidence {0} outside [0,1]", .value)]
    ConfidenceRange { row: usize, value: f64 },
    #[error("row {row}: class_id must be >= 1, got {value}")]
    ClassId { row: usize, value: i64 },
    #[error("row {row}: bb_{dim} must be positive, got {value}")]
    BoxDim { row: usize, dim: &'static str, value: i64 },
    #[error("row {row}: bb_{dim} must be non-negative, got {value}")]
    BoxCorner { row: usize, dim: &'static str, value: i64 },
    #[error("row {row}: video_id must be >= 1, got {value}")]
    VideoId { row: usize, value: i64 },
    #[error("row {row}: frame_id must be non-negative, got {value}")]
    FrameId { row: usize, value: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Axis-aligned box in (left, top, width, height) pixel form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BBox {
    pub left: i64,
    pub top: i64,
    pub width: i64,
    pub height: i64,
}

impl BBox {
    pub fn new(left: i64, top: i64, width: i64, height: i64) -> Self {
        BBox { left, top, width, height }
    }

    pub fn area(&self) -> i64 {
        self.width * self.height
    }

    pub fn right(&self) -> i64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> i64 {
        self.top + self.height
    }
}

/// One row of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub video_id: u32,
    pub frame_id: u32,
    pub bbox: BBox,
    pub class_id: u32,
    pub confidence: f64,
}

/// One row of a ground-truth file (no confidence column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthRecord {
    pub video_id: u32,
    pub frame_id: u32,
    pub bbox: BBox,
    pub class_id: u32,
}

struct RawRow {
    video_id: u32,
    frame_id: u32,
    bbox: BBox,
    class_id: u32,
    confidence: Option<f64>,
}

fn parse_int(row: usize, field: &'static str, v: &str) -> Result<i64, CsvError> {
    v.trim().parse().map_err(|_| CsvError::NonNumeric {
        row,
        field,
        value: v.to_string(),
    })
}

fn parse_row(row: usize, line: &str, has_confidence: bool) -> Result<RawRow, CsvError> {
    let expected = if has_confidence { 8 } else { 7 };
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != expected {
        return Err(CsvError::ColumnCount {
            row,
            expected,
            found: cols.len(),
        });
    }
    let video_id = parse_int(row, "video_id", cols[0])?;
    let frame_id = parse_int(row, "frame_id", cols[1])?;
    if video_id < 1 {
        return Err(CsvError::VideoId { row, value: video_id });
    }
    if frame_id < 0 {
        return Err(CsvError::FrameId { row, value: frame_id });
    }
    let video_id = video_id as u32;
    let frame_id = frame_id as u32;
    let left = parse_int(row, "bb_left", cols[2])?;
    let top = parse_int(row, "bb_top", cols[3])?;
    let width = parse_int(row, "bb_width", cols[4])?;
    let height = parse_int(row, "bb_height", cols[5])?;
    let class_id = parse_int(row, "class_id", cols[6])?;
    if left < 0 {
        return Err(CsvError::BoxCorner { row, dim: "left", value: left });
    }
    if top < 0 {
        return Err(CsvError::BoxCorner { row, dim: "top", value: top });
    }
    if width <= 0 {
        return Err(CsvError::BoxDim { row, dim: "width", value: width });
    }
    if height <= 0 {
        return Err(CsvError::BoxDim { row, dim: "height", value: height });
    }
    if class_id < 1 {
        return Err(CsvError::ClassId { row, value: class_id });
    }
    let confidence = if has_confidence {
        let c: f64 = cols[7].trim().parse().map_err(|_| CsvError::NonNumeric {
            row,
            field: "confidence",
            value: cols[7].to_string(),
        })?;
        if !(0.0..=1.0).contains(&c) {
            return Err(CsvError::ConfidenceRange { row, value: c });
        }
        Some(c)
    } else {
        None
    };
    Ok(RawRow {
        video_id,
        frame_id,
        bbox: BBox::new(left, top, width, height),
        class_id: class_id as u32,
        confidence,
    })
}

fn rows<R: BufRead>(r: R, has_confidence: bool) -> Result<Vec<RawRow>, CsvError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        out.push(parse_row(i + 1, line, has_confidence)?);
    }
    Ok(out)
}

pub fn read_detections<R: BufRead>(r: R) -> Result<Vec<DetectionRecord>, CsvError> {
    Ok(rows(r, true)?
        .into_iter()
        .map(|r| DetectionRecord {
            video_id: r.video_id,
            frame_id: r.frame_id,
            bbox: r.bbox,
            class_id: r.class_id,
            confidence: r.confidence.unwrap(),
        })
        .collect())
}

pub fn read_ground_truth<R: BufRead>(r: R) -> Result<Vec<GroundTruthRecord>, CsvError> {
    Ok(rows(r, false)?
        .into_iter()
        .map(|r| GroundTruthRecord {
            video_id: r.video_id,
            frame_id: r.frame_id,
            bbox: r.bbox,
            class_id: r.class_id,
        })
        .collect())
}

/// Canonical serialization: confidence with 6 decimals, LF endings.
/// `write(read(x))` is idempotent after one canonicalization pass.
pub fn write_detections<W: Write>(mut w: W, records: &[DetectionRecord]) -> Result<(), CsvError> {
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6}",
            r.video_id,
            r.frame_id,
            r.bbox.left,
            r.bbox.top,
            r.bbox.width,
            r.bbox.height,
            r.class_id,
            r.confidence
        )?;
    }
    Ok(())
}

pub fn write_ground_truth<W: Write>(mut w: W, records: &[GroundTruthRecord]) -> Result<(), CsvError> {
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.video_id, r.frame_id, r.bbox.left, r.bbox.top, r.bbox.width, r.bbox.height, r.class_id
        )?;
    }
    Ok(())
}

pub fn read_detections_file(path: &Path) -> Result<Vec<DetectionRecord>, CsvError> {
    read_detections(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn read_ground_truth_file(path: &Path) -> Result<Vec<GroundTruthRecord>, CsvError> {
    read_ground_truth(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_detections_file(path: &Path, records: &[DetectionRecord]) -> Result<(), CsvError> {
    write_detections(std::io::BufWriter::new(std::fs::File::create(path)?), records)
}

pub fn write_ground_truth_file(path: &Path, records: &[GroundTruthRecord]) -> Result<(), CsvError> {
    write_ground_truth(std::io::BufWriter::new(std::fs::File::create(path)?), records)
}
