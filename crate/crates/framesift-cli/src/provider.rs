//! Video discovery and in-memory frame access for the batch commands.
//!
//! A video directory is every `*.y4m` file in it, sorted by file name and
//! assigned 1-based video ids in that order, so ids are stable across runs
//! on the same corpus.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use framesift_core::io::pnm::read_pnm_file;
use framesift_core::io::y4m::read_y4m_file;
use framesift_core::{Frame, FrameProvider, VideoSource};

/// All `*.y4m` files in a directory, name-sorted, ids 1..=n.
pub fn discover_videos(dir: &Path) -> Result<Vec<(u32, PathBuf)>> {
    if !dir.is_dir() {
        bail!("video directory {} does not exist", dir.display());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "y4m"))
        .collect();
    if paths.is_empty() {
        bail!("no .y4m files in {}", dir.display());
    }
    paths.sort();
    Ok(paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as u32 + 1, p))
        .collect())
}

/// Fully decoded corpus plus optional backgrounds, used as the frame
/// source for dedup and materialization.
#[derive(Default)]
pub struct LoadedCorpus {
    pub sources: Vec<VideoSource>,
    frames: HashMap<(u32, u32), Frame>,
    per_video: BTreeMap<u32, Vec<u32>>,
    backgrounds: BTreeMap<u32, Frame>,
}

impl LoadedCorpus {
    pub fn load(dir: &Path, rgb: bool) -> Result<Self> {
        let mut corpus = LoadedCorpus::default();
        for (id, path) in discover_videos(dir)? {
            let (source, frames) = read_y4m_file(&path, id, rgb)
                .with_context(|| format!("decode {}", path.display()))?;
            if frames.is_empty() {
                bail!("{} contains no frames", path.display());
            }
            let mut indices = Vec::with_capacity(frames.len());
            for f in frames {
                indices.push(f.frame_index);
                corpus.frames.insert((id, f.frame_index), f);
            }
            corpus.per_video.insert(id, indices);
            corpus.sources.push(source);
        }
        Ok(corpus)
    }

    pub fn frames_of(&self, video_id: u32) -> Vec<Frame> {
        self.per_video
            .get(&video_id)
            .map(|indices| {
                indices
                    .iter()
                    .map(|&i| self.frames[&(video_id, i)].clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn set_background(&mut self, video_id: u32, frame: Frame) {
        self.backgrounds.insert(video_id, frame);
    }

    /// Load backgrounds written by the pipeline (`v{ID}.pgm` / `.ppm`).
    pub fn load_backgrounds(&mut self, dir: &Path) -> Result<usize> {
        if !dir.is_dir() {
            bail!("background directory {} does not exist", dir.display());
        }
        let mut loaded = 0;
        for source in &self.sources {
            for ext in ["pgm", "ppm"] {
                let path = dir.join(format!("v{:03}.{ext}", source.video_id));
                if path.is_file() {
                    let frame = read_pnm_file(&path, source.video_id, 0)
                        .with_context(|| format!("read {}", path.display()))?;
                    self.backgrounds.insert(source.video_id, frame);
                    loaded += 1;
                    break;
                }
            }
        }
        Ok(loaded)
    }
}

impl FrameProvider for LoadedCorpus {
    fn frame(&self, video_id: u32, frame_index: u32) -> Result<Frame, String> {
        self.frames
            .get(&(video_id, frame_index))
            .cloned()
            .ok_or_else(|| format!("no frame {frame_index} in video {video_id}"))
    }

    fn background(&self, video_id: u32) -> Result<Frame, String> {
        self.backgrounds
            .get(&video_id)
            .cloned()
            .ok_or_else(|| format!("no background loaded for video {video_id}"))
    }
}
