//! Binary PNM (P5 grayscale / P6 RGB) with maxval 255.
//!
//! Writes are canonical (`P5\n<w> <h>\n255\n` + payload) and round-trip
//! byte-identically.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::frame::{Frame, PixelData};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("not a binary PNM file: magic `{0}` (want P5 or P6)")]
    BadMagic(String),
    #[error("malformed PNM header field `{0}`")]
    BadHeaderField(String),
    #[error("unsupported maxval {0} (only 255)")]
    BadMaxval(u32),
    #[error("payload has {actual} bytes, expected {expected}")]
    ShortPayload { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_header_token<R: Read>(r: &mut R) -> Result<String, PnmError> {
    let mut tok = String::new();
    let mut in_comment = false;
    loop {
        let mut b = [0u8; 1];
        if r.read(&mut b)? == 0 {
            break;
        }
        let c = b[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    if tok.is_empty() {
        return Err(PnmError::BadHeaderField("<eof>".into()));
    }
    Ok(tok)
}

pub fn read_pnm<R: Read>(mut r: R, video_id: u32, frame_index: u32) -> Result<Frame, PnmError> {
    let magic = read_header_token(&mut r)?;
    let channels = match magic.as_str() {
        "P5" => 1usize,
        "P6" => 3usize,
        other => return Err(PnmError::BadMagic(other.to_string())),
    };
    let parse = |s: String| -> Result<u32, PnmError> {
        s.parse().map_err(|_| PnmError::BadHeaderField(s))
    };
    let width = parse(read_header_token(&mut r)?)?;
    let height = parse(read_header_token(&mut r)?)?;
    let maxval = parse(read_header_token(&mut r)?)?;
    if maxval != 255 {
        return Err(PnmError::BadMaxval(maxval));
    }
    let expected = width as usize * height as usize * channels;
    let mut payload = Vec::with_capacity(expected);
    r.read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(PnmError::ShortPayload {
            expected,
            actual: payload.len(),
        });
    }
    payload.truncate(expected);
    let frame = if channels == 1 {
        Frame::new_luma(video_id, frame_index, width, height, payload)
    } else {
        Frame::new_rgb(video_id, frame_index, width, height, payload)
    };
    frame.map_err(|_| PnmError::ShortPayload {
        expected,
        actual: 0,
    })
}

pub fn write_pnm<W: Write>(mut w: W, frame: &Frame) -> Result<(), PnmError> {
    let magic = match frame.pixels {
        PixelData::Luma(_) => "P5",
        PixelData::Rgb(_) => "P6",
    };
    write!(w, "{magic}\n{} {}\n255\n", frame.width, frame.height)?;
    w.write_all(frame.pixels.bytes())?;
    Ok(())
}

pub fn read_pnm_file(path: &Path, video_id: u32, frame_index: u32) -> Result<Frame, PnmError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_pnm(f, video_id, frame_index)
}

pub fn write_pnm_file(path: &Path, frame: &Frame) -> Result<(), PnmError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pnm(f, frame)
}
