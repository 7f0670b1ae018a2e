//! Static-background estimation: per-pixel median over a random subset of
//! frames drawn from a fixed-length window of the video.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::frame::{Frame, PixelData, VideoSource};
use crate::seed::{rng_from, stage_seed, video_seed};

#[derive(Debug, Error)]
pub enum BackgroundError {
    #[error("window needs at least 3 frames, video {video_id} has {available} in the window")]
    TooFewFrames { video_id: u32, available: u32 },
    #[error("explicit window start {start} + {window_frames} frames exceeds video length {frame_count}")]
    WindowOutOfBounds {
        start: u32,
        window_frames: u32,
        frame_count: u32,
    },
    #[error("video {video_id}: frames have mixed dimensions ({0}x{1} vs {2}x{3})", .dims.0, .dims.1, .dims.2, .dims.3)]
    MixedDimensions { video_id: u32, dims: (u32, u32, u32, u32) },
    #[error("video {video_id}: mixed luma/RGB frames")]
    MixedPixelFormats { video_id: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowStart {
    Random,
    Explicit(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundParams {
    pub window_seconds: f64,
    pub keep_fraction: f64,
    pub seed: u64,
    pub window_start: WindowStart,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        BackgroundParams {
            window_seconds: 10.0,
            keep_fraction: 0.6,
            seed: 0,
            window_start: WindowStart::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    pub background: Frame,
    pub params: BackgroundParams,
    /// Frame indices that fed the median, sorted ascending.
    pub source_frame_indices: Vec<u32>,
}

/// Per-pixel median of the retained frames.
///
/// The retained set is exactly ceil(keep_fraction x window_len) frames
/// sampled uniformly without replacement; even cardinalities take the
/// lower of the two central values, so every output byte occurs in some
/// input frame.
pub fn estimate_background(
    video: &VideoSource,
    frames: &[Frame],
    params: &BackgroundParams,
) -> Result<BackgroundModel, BackgroundError> {
    let vid = video.video_id;
    for f in frames {
        if (f.width, f.height) != (video.width, video.height) {
            return Err(BackgroundError::MixedDimensions {
                video_id: vid,
                dims: (video.width, video.height, f.width, f.height),
            });
        }
    }
    let channels = match frames.first().map(|f| f.pixels.channels()) {
        Some(c) => c,
        None => {
            return Err(BackgroundError::TooFewFrames {
                video_id: vid,
                available: 0,
            })
        }
    };
    if frames.iter().any(|f| f.pixels.channels() != channels) {
        return Err(BackgroundError::MixedPixelFormats { video_id: vid });
    }

    let frame_count = frames.len() as u32;
    let window_frames = ((params.window_seconds * video.fps.as_f64()).round() as u32)
        .clamp(1, frame_count.max(1))
        .min(frame_count);
    let seed = video_seed(params.seed, vid);
    let start = match params.window_start {
        WindowStart::Explicit(s) => {
            if s + window_frames > frame_count {
                return Err(BackgroundError::WindowOutOfBounds {
                    start: s,
                    window_frames,
                    frame_count,
                });
            }
            s
        }
        WindowStart::Random => {
            let max_start = frame_count - window_frames;
            if max_start == 0 {
                0
            } else {
                rng_from(stage_seed(seed, "window")).gen_range(0..=max_start)
            }
        }
    };
    if window_frames < 3 {
        return Err(BackgroundError::TooFewFrames {
            video_id: vid,
            available: window_frames,
        });
    }

    let retain = (params.keep_fraction * window_frames as f64).ceil() as usize;
    let retain = retain.clamp(1, window_frames as usize);
    let mut window: Vec<u32> = (start..start + window_frames).collect();
    let mut rng = rng_from(stage_seed(seed, "retain"));
    window.shuffle(&mut rng);
    let mut retained: Vec<u32> = window.into_iter().take(retain).collect();
    retained.sort_unstable();
    if retained.len() < 3 {
        return Err(BackgroundError::TooFewFrames {
            video_id: vid,
            available: retained.len() as u32,
        });
    }

    let planes: Vec<&[u8]> = retained
        .iter()
        .map(|&i| frames[i as usize].pixels.bytes())
        .collect();
    let plane_len = planes[0].len();
    let row_len = video.width as usize * channels;
    let mut out = vec![0u8; plane_len];
    // lower median index for both parities
    let mid = (planes.len() - 1) / 2;
    out.par_chunks_mut(row_len).enumerate().for_each(|(row, chunk)| {
        let base = row * row_len;
        let mut column = vec![0u8; planes.len()];
        for (i, byte) in chunk.iter_mut().enumerate() {
            for (k, p) in planes.iter().enumerate() {
                column[k] = p[base + i];
            }
            column.sort_unstable();
            *byte = column[mid];
        }
    });

    let pixels = if channels == 1 {
        PixelData::Luma(out)
    } else {
        PixelData::Rgb(out)
    };
    Ok(BackgroundModel {
        background: Frame {
            video_id: vid,
            frame_index: 0,
            width: video.width,
            height: video.height,
            pixels,
        },
        params: *params,
        source_frame_indices: retained,
    })
}

/// Batch estimation. Failures are collected per video; the batch never
/// aborts early, and per-video seeds make results order-independent.
pub fn estimate_all_backgrounds<'a, I>(
    videos: I,
    params: &BackgroundParams,
) -> (
    std::collections::BTreeMap<u32, BackgroundModel>,
    Vec<(u32, BackgroundError)>,
)
where
    I: IntoIterator<Item = (&'a VideoSource, &'a [Frame])>,
{
    let jobs: Vec<_> = videos.into_iter().collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(video, frames)| (video.video_id, estimate_background(video, frames, params)))
        .collect();
    let mut ok = std::collections::BTreeMap::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(m) => {
                ok.insert(id, m);
            }
            Err(e) => failed.push((id, e)),
        }
    }
    failed.sort_by_key(|(id, _)| *id);
    (ok, failed)
}
