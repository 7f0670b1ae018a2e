//! Pipeline configuration: every stage parameter in one JSON document,
//! with flags overriding file values. Emitted reports echo the full
//! effective config so no default stays silent.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use framesift_core::io::manifest::SampleMode;
use framesift_core::materialize::AugmentPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundBlock {
    pub window_seconds: f64,
    pub keep_fraction: f64,
}

impl Default for BackgroundBlock {
    fn default() -> Self {
        BackgroundBlock { window_seconds: 10.0, keep_fraction: 0.6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierBlock {
    pub night_threshold: u8,
    pub fog_epsilon: f64,
}

impl Default for ClassifierBlock {
    fn default() -> Self {
        ClassifierBlock { night_threshold: 150, fog_epsilon: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingBlock {
    pub frames: u64,
    pub mode: SampleMode,
    pub dedup_threshold: u32,
    pub split_ratio: f64,
    /// augmented copies of each background injected as extra negatives
    pub negative_variants: u32,
}

impl Default for SamplingBlock {
    fn default() -> Self {
        SamplingBlock {
            frames: 100,
            mode: SampleMode::Balanced,
            dedup_threshold: 5,
            split_ratio: 0.7,
            negative_variants: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TtaBlock {
    pub iou: f64,
}

impl Default for TtaBlock {
    fn default() -> Self {
        TtaBlock { iou: 0.55 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalBlock {
    pub iou: f64,
    pub coco_range: bool,
}

impl Default for EvalBlock {
    fn default() -> Self {
        EvalBlock { iou: 0.5, coco_range: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub background: BackgroundBlock,
    pub classifier: ClassifierBlock,
    pub sampling: SamplingBlock,
    pub augment: AugmentPolicy,
    pub variants_per_frame: u32,
    pub tta: TtaBlock,
    pub eval: EvalBlock,
    /// wire frame ids are internal indices plus this base (detection CSVs
    /// are 1-based)
    pub frame_id_base: u32,
    /// decode frames as RGB instead of luma
    pub rgb: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            background: BackgroundBlock::default(),
            classifier: ClassifierBlock::default(),
            sampling: SamplingBlock::default(),
            augment: AugmentPolicy::default(),
            variants_per_frame: 2,
            tta: TtaBlock::default(),
            eval: EvalBlock::default(),
            frame_id_base: 1,
            rgb: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        let config: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            anyhow::anyhow!(
                "config schema violation at /{}: {}",
                e.path().to_string().replace('.', "/"),
                e.inner()
            )
        })?;
        config.check()?;
        Ok(config)
    }

    /// Range checks beyond what the schema can express.
    pub fn check(&self) -> Result<()> {
        let b = &self.background;
        if b.window_seconds <= 0.0 {
            bail!("background/window_seconds must be positive, got {}", b.window_seconds);
        }
        if !(0.0 < b.keep_fraction && b.keep_fraction <= 1.0) {
            bail!("background/keep_fraction must be in (0, 1], got {}", b.keep_fraction);
        }
        if self.classifier.fog_epsilon < 0.0 {
            bail!("classifier/fog_epsilon must be non-negative");
        }
        let s = &self.sampling;
        if s.frames == 0 {
            bail!("sampling/frames must be >= 1");
        }
        if !(0.0 < s.split_ratio && s.split_ratio < 1.0) {
            bail!("sampling/split_ratio must be in (0, 1), got {}", s.split_ratio);
        }
        if s.dedup_threshold > 64 {
            bail!("sampling/dedup_threshold is a 64-bit Hamming distance, got {}", s.dedup_threshold);
        }
        if !(0.0..=1.0).contains(&self.tta.iou) || !(0.0..=1.0).contains(&self.eval.iou) {
            bail!("tta/iou and eval/iou must be in [0, 1]");
        }
        Ok(())
    }

    pub fn to_pretty_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config always serializes");
        s.push('\n');
        s
    }
}

pub fn parse_mode(s: &str) -> Result<SampleMode, String> {
    match s {
        "paper" => Ok(SampleMode::Paper),
        "balanced" => Ok(SampleMode::Balanced),
        other => Err(format!("mode must be `paper` or `balanced`, got `{other}`")),
    }
}
