//! YUV4MPEG2 reader/writer.
//!
//! Only the uncompressed C420 family is supported. Headers are canonicalized
//! on write to `YUV4MPEG2 W<w> H<h> F<num>:<den> [I..] [A..] C<cs>` and
//! per-frame parameters are dropped, which is the one documented deviation
//! from byte-identity on round trips.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::frame::{Frame, Rational, VideoSource};

#[derive(Debug, Error)]
pub enum Y4mError {
    #[error("not a YUV4MPEG2 stream: bad magic at byte 0")]
    BadMagic,
    #[error("missing {token} token in stream header")]
    MissingToken { token: char },
    #[error("malformed {token} token `{value}` in stream header")]
    BadToken { token: char, value: String },
    #[error("unsupported colorspace `{0}` (C420 family only)")]
    UnsupportedColorspace(String),
    #[error("expected FRAME marker at byte {offset}")]
    BadFrameMarker { offset: u64 },
    #[error("truncated frame payload at byte {offset}: wanted {wanted} bytes, got {got}")]
    Truncated { offset: u64, wanted: usize, got: usize },
    #[error("unterminated header line at byte {offset}")]
    UnterminatedHeader { offset: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// C420 chroma siting variants. All decode identically here (nearest
/// neighbour upsampling); the tag is preserved for round trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
    C420,
    C420Jpeg,
    C420Mpeg2,
    C420Paldv,
}

impl Colorspace {
    fn parse(s: &str) -> Result<Self, Y4mError> {
        match s {
            "420" => Ok(Colorspace::C420),
            "420jpeg" => Ok(Colorspace::C420Jpeg),
            "420mpeg2" => Ok(Colorspace::C420Mpeg2),
            "420paldv" => Ok(Colorspace::C420Paldv),
            other => Err(Y4mError::UnsupportedColorspace(format!("C{other}"))),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Colorspace::C420 => "420",
            Colorspace::C420Jpeg => "420jpeg",
            Colorspace::C420Mpeg2 => "420mpeg2",
            Colorspace::C420Paldv => "420paldv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: u32,
    pub height: u32,
    pub fps: Rational,
    pub interlace: Option<String>,
    pub aspect: Option<String>,
    pub colorspace: Colorspace,
}

impl Y4mHeader {
    pub fn progressive(width: u32, height: u32, fps: Rational) -> Self {
        Y4mHeader {
            width,
            height,
            fps,
            interlace: None,
            aspect: None,
            colorspace: Colorspace::C420,
        }
    }

    pub fn chroma_dims(&self) -> (u32, u32) {
        ((self.width + 1) / 2, (self.height + 1) / 2)
    }

    pub fn frame_payload_len(&self) -> usize {
        let (cw, ch) = self.chroma_dims();
        self.width as usize * self.height as usize + 2 * cw as usize * ch as usize
    }
}

/// One raw 4:2:0 frame, planes in stream order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mFrame {
    pub y: Vec<u8>,
    pub cb: Vec<u8>,
    pub cr: Vec<u8>,
}

impl Y4mFrame {
    /// Neutral-chroma frame from a luma plane.
    pub fn from_luma(header: &Y4mHeader, y: Vec<u8>) -> Self {
        let (cw, ch) = header.chroma_dims();
        let n = cw as usize * ch as usize;
        Y4mFrame {
            y,
            cb: vec![128; n],
            cr: vec![128; n],
        }
    }
}

pub struct Y4mReader<R: Read> {
    inner: R,
    header: Y4mHeader,
    offset: u64,
    frames_read: u32,
}

impl<R: Read> Y4mReader<R> {
    pub fn new(mut inner: R) -> Result<Self, Y4mError> {
        let mut offset = 0u64;
        let line = read_line(&mut inner, &mut offset)?;
        let mut parts = line.split(' ');
        if parts.next() != Some("YUV4MPEG2") {
            return Err(Y4mError::BadMagic);
        }
        let mut width = None;
        let mut height = None;
        let mut fps = None;
        let mut interlace = None;
        let mut aspect = None;
        let mut colorspace = Colorspace::C420;
        for tok in parts {
            let Some(key) = tok.chars().next() else { continue };
            let value = &tok[key.len_utf8()..];
            match key {
                'W' => width = Some(parse_dim('W', value)?),
                'H' => height = Some(parse_dim('H', value)?),
                'F' => fps = Some(parse_fps(value)?),
                'I' => interlace = Some(value.to_string()),
                'A' => aspect = Some(value.to_string()),
                'C' => colorspace = Colorspace::parse(value)?,
                // X comments and unknown tokens are skipped
                _ => {}
            }
        }
        let header = Y4mHeader {
            width: width.ok_or(Y4mError::MissingToken { token: 'W' })?,
            height: height.ok_or(Y4mError::MissingToken { token: 'H' })?,
            fps: fps.ok_or(Y4mError::MissingToken { token: 'F' })?,
            interlace,
            aspect,
            colorspace,
        };
        Ok(Y4mReader {
            inner,
            header,
            offset,
            frames_read: 0,
        })
    }

    pub fn header(&self) -> &Y4mHeader {
        &self.header
    }

    pub fn frames_read(&self) -> u32 {
        self.frames_read
    }

    /// Next raw frame, or None at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<Y4mFrame>, Y4mError> {
        let marker_offset = self.offset;
        let mut first = [0u8; 1];
        match self.inner.read(&mut first)? {
            0 => return Ok(None),
            _ => self.offset += 1,
        }
        // FRAME marker line, optional parameters up to LF
        let mut marker = vec![first[0]];
        loop {
            let mut b = [0u8; 1];
            if self.inner.read(&mut b)? == 0 {
                return Err(Y4mError::UnterminatedHeader { offset: self.offset });
            }
            self.offset += 1;
            if b[0] == b'\n' {
                break;
            }
            marker.push(b[0]);
        }
        if !marker.starts_with(b"FRAME") {
            return Err(Y4mError::BadFrameMarker { offset: marker_offset });
        }
        let wanted = self.header.frame_payload_len();
        let mut payload = vec![0u8; wanted];
        let mut got = 0;
        while got < wanted {
            let n = self.inner.read(&mut payload[got..])?;
            if n == 0 {
                return Err(Y4mError::Truncated {
                    offset: self.offset + got as u64,
                    wanted,
                    got,
                });
            }
            got += n;
        }
        self.offset += wanted as u64;
        self.frames_read += 1;
        let ylen = self.header.width as usize * self.header.height as usize;
        let (cw, ch) = self.header.chroma_dims();
        let clen = cw as usize * ch as usize;
        let cb = payload[ylen..ylen + clen].to_vec();
        let cr = payload[ylen + clen..].to_vec();
        payload.truncate(ylen);
        Ok(Some(Y4mFrame {
            y: payload,
            cb,
            cr,
        }))
    }
}

fn read_line<R: Read>(r: &mut R, offset: &mut u64) -> Result<String, Y4mError> {
    let mut buf = Vec::new();
    loop {
        let mut b = [0u8; 1];
        if r.read(&mut b)? == 0 {
            return Err(Y4mError::UnterminatedHeader { offset: *offset });
        }
        *offset += 1;
        if b[0] == b'\n' {
            break;
        }
        buf.push(b[0]);
        if buf.len() > 1024 {
            return Err(Y4mError::UnterminatedHeader { offset: *offset });
        }
    }
    String::from_utf8(buf).map_err(|_| Y4mError::BadMagic)
}

fn parse_dim(token: char, value: &str) -> Result<u32, Y4mError> {
    let v: u32 = value.parse().map_err(|_| Y4mError::BadToken {
        token,
        value: value.to_string(),
    })?;
    if v == 0 {
        return Err(Y4mError::BadToken {
            token,
            value: value.to_string(),
        });
    }
    Ok(v)
}

fn parse_fps(value: &str) -> Result<Rational, Y4mError> {
    let bad = || Y4mError::BadToken {
        token: 'F',
        value: value.to_string(),
    };
    let (num, den) = value.split_once(':').ok_or_else(bad)?;
    let num: u32 = num.parse().map_err(|_| bad())?;
    let den: u32 = den.parse().map_err(|_| bad())?;
    if num == 0 || den == 0 {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub struct Y4mWriter<W: Write> {
    inner: W,
    header: Y4mHeader,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut inner: W, header: Y4mHeader) -> Result<Self, Y4mError> {
        let mut line = format!(
            "YUV4MPEG2 W{} H{} F{}",
            header.width, header.height, header.fps
        );
        if let Some(i) = &header.interlace {
            line.push_str(&format!(" I{i}"));
        }
        if let Some(a) = &header.aspect {
            line.push_str(&format!(" A{a}"));
        }
        line.push_str(&format!(" C{}", header.colorspace.tag()));
        line.push('\n');
        inner.write_all(line.as_bytes())?;
        Ok(Y4mWriter { inner, header })
    }

    pub fn write_frame(&mut self, frame: &Y4mFrame) -> Result<(), Y4mError> {
        debug_assert_eq!(
            frame.y.len(),
            self.header.width as usize * self.header.height as usize
        );
        self.inner.write_all(b"FRAME\n")?;
        self.inner.write_all(&frame.y)?;
        self.inner.write_all(&frame.cb)?;
        self.inner.write_all(&frame.cr)?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

/// Fixed-point BT.601 limited-range YCbCr to RGB with nearest-neighbour
/// chroma upsampling.
pub fn y4m_frame_to_rgb(header: &Y4mHeader, raw: &Y4mFrame, video_id: u32, frame_index: u32) -> Frame {
    let w = header.width as usize;
    let h = header.height as usize;
    let (cw, _) = header.chroma_dims();
    let cw = cw as usize;
    let mut rgb = Vec::with_capacity(w * h * 3);
    for yy in 0..h {
        for xx in 0..w {
            let y = raw.y[yy * w + xx] as i32;
            let ci = (yy / 2) * cw + xx / 2;
            let cb = raw.cb[ci] as i32;
            let cr = raw.cr[ci] as i32;
            let c = y - 16;
            let d = cb - 128;
            let e = cr - 128;
            rgb.push(clip8((298 * c + 409 * e + 128) >> 8));
            rgb.push(clip8((298 * c - 100 * d - 208 * e + 128) >> 8));
            rgb.push(clip8((298 * c + 516 * d + 128) >> 8));
        }
    }
    Frame::new_rgb(video_id, frame_index, header.width, header.height, rgb)
        .expect("plane size follows from header")
}

pub fn y4m_frame_to_luma(header: &Y4mHeader, raw: &Y4mFrame, video_id: u32, frame_index: u32) -> Frame {
    Frame::new_luma(
        video_id,
        frame_index,
        header.width,
        header.height,
        raw.y.clone(),
    )
    .expect("plane size follows from header")
}

fn clip8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// Load a whole Y4M file as luma (or RGB) frames plus its source record.
pub fn read_y4m_file(
    path: &Path,
    video_id: u32,
    rgb: bool,
) -> Result<(VideoSource, Vec<Frame>), Y4mError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut reader = Y4mReader::new(file)?;
    let header = reader.header().clone();
    let mut frames = Vec::new();
    while let Some(raw) = reader.next_frame()? {
        let idx = frames.len() as u32;
        frames.push(if rgb {
            y4m_frame_to_rgb(&header, &raw, video_id, idx)
        } else {
            y4m_frame_to_luma(&header, &raw, video_id, idx)
        });
    }
    let source = VideoSource {
        video_id,
        path: path.to_path_buf(),
        fps: header.fps,
        frame_count: frames.len() as u32,
        width: header.width,
        height: header.height,
    };
    Ok((source, frames))
}

/// Header-only probe: parses the stream header and counts FRAME markers.
pub fn probe_y4m_file(path: &Path, video_id: u32) -> Result<VideoSource, Y4mError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut reader = Y4mReader::new(file)?;
    let header = reader.header().clone();
    let mut count = 0u32;
    while reader.next_frame()?.is_some() {
        count += 1;
    }
    Ok(VideoSource {
        video_id,
        path: path.to_path_buf(),
        fps: header.fps,
        frame_count: count,
        width: header.width,
        height: header.height,
    })
}

/// Write luma frames as a C420 stream with neutral chroma.
pub fn write_y4m_luma<W: Write>(
    out: W,
    fps: Rational,
    frames: &[Frame],
) -> Result<(), Y4mError> {
    let first = frames.first().expect("at least one frame");
    let header = Y4mHeader::progressive(first.width, first.height, fps);
    let mut writer = Y4mWriter::new(out, header.clone())?;
    for f in frames {
        let luma = f.to_luma();
        let y = match luma.pixels {
            crate::frame::PixelData::Luma(v) => v,
            _ => unreachable!(),
        };
        writer.write_frame(&Y4mFrame::from_luma(&header, y))?;
    }
    Ok(())
}
