//! framesift-core: few-shot frame sampling for traffic-camera video.
//!
//! The pipeline stages, in the order the CLI runs them: estimate a static
//! background per video (temporal median), categorize each video as
//! day/night/fog from the background's luma histogram, allocate and select
//! frames per category, drop near-duplicates, inject backgrounds as
//! negative samples, split train/validation without sharing frame
//! sequences, and materialize augmented images. Detection files in the
//! challenge CSV format can be fused across test-time-augmentation views
//! and scored with mAP.

pub mod augment;
pub mod background;
pub mod error;
pub mod eval;
pub mod frame;
pub mod io;
pub mod materialize;
pub mod sampling;
pub mod scene;
pub mod seed;
pub mod tta;

pub use frame::{Frame, PixelData, Rational, VideoSource};

/// Source of decoded frames for stages that re-read pixels (dedup,
/// materialization). Implementations must be pure: the same key always
/// yields the same frame.
pub trait FrameProvider {
    fn frame(&self, video_id: u32, frame_index: u32) -> Result<Frame, String>;

    /// The estimated background for a video, used for negative samples.
    fn background(&self, video_id: u32) -> Result<Frame, String> {
        Err(format!("no background available for video {video_id}"))
    }
}

/// In-memory provider, mainly for tests and small batch runs.
pub mod test_support {
    use super::{Frame, FrameProvider};
    use std::collections::HashMap;

    #[derive(Debug, Default, Clone)]
    pub struct MapProvider {
        frames: HashMap<(u32, u32), Frame>,
        backgrounds: HashMap<u32, Frame>,
    }

    impl MapProvider {
        pub fn insert(&mut self, video_id: u32, frame_index: u32, frame: Frame) {
            self.frames.insert((video_id, frame_index), frame);
        }

        pub fn insert_background(&mut self, video_id: u32, frame: Frame) {
            self.backgrounds.insert(video_id, frame);
        }
    }

    impl FrameProvider for MapProvider {
        fn frame(&self, video_id: u32, frame_index: u32) -> Result<Frame, String> {
            self.frames
                .get(&(video_id, frame_index))
                .cloned()
                .ok_or_else(|| format!("no frame ({video_id}, {frame_index})"))
        }

        fn background(&self, video_id: u32) -> Result<Frame, String> {
            self.backgrounds
                .get(&video_id)
                .cloned()
                .ok_or_else(|| format!("no background for video {video_id}"))
        }
    }
}
