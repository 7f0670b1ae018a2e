//! Day/night/fog categorization of a video from its estimated background.
//!
//! The rule chain: if the most frequent luma value is darker than the night
//! threshold the scene is night; otherwise a near-symmetric luma histogram
//! (|skewness| below epsilon) means fog, and anything else is day.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot build a histogram of an empty image")]
    EmptyImage,
    #[error("degenerate histogram: all pixels share value {0}, skewness undefined")]
    DegenerateHistogram(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneCategory {
    Night,
    Fog,
    Day,
}

impl std::fmt::Display for SceneCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SceneCategory::Night => "night",
            SceneCategory::Fog => "fog",
            SceneCategory::Day => "day",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SceneCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "night" => Ok(SceneCategory::Night),
            "fog" | "foggy" => Ok(SceneCategory::Fog),
            "day" => Ok(SceneCategory::Day),
            other => Err(format!("unknown scene category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    /// Argmax luma below this value classifies as night.
    pub night_threshold: u8,
    /// |skewness| below this value classifies a bright scene as fog.
    pub fog_skewness_epsilon: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            night_threshold: 150,
            fog_skewness_epsilon: 0.25,
        }
    }
}

/// 256-bin luma frequency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelHistogram {
    pub bins: [u64; 256],
    pub total: u64,
}

impl PixelHistogram {
    /// Smallest luma value attaining the maximum bin count.
    pub fn argmax_value(&self) -> u8 {
        let mut best = 0usize;
        for v in 1..256 {
            if self.bins[v] > self.bins[best] {
                best = v;
            }
        }
        best as u8
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self
            .bins
            .iter()
            .enumerate()
            .map(|(v, &c)| v as f64 * c as f64)
            .sum();
        sum / self.total as f64
    }
}

pub fn luma_histogram(image: &Frame) -> Result<PixelHistogram, SceneError> {
    if image.pixel_count() == 0 {
        return Err(SceneError::EmptyImage);
    }
    let luma = image.to_luma();
    let mut bins = [0u64; 256];
    for &v in luma.pixels.bytes() {
        bins[v as usize] += 1;
    }
    Ok(PixelHistogram {
        bins,
        total: image.pixel_count() as u64,
    })
}

/// Fisher-Pearson moment skewness g1 = m3 / m2^(3/2) over pixel values
/// weighted by bin counts (population moments, no bias correction).
pub fn histogram_skewness(h: &PixelHistogram) -> Result<f64, SceneError> {
    let n = h.total as f64;
    let mean = h.mean();
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for (v, &c) in h.bins.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let d = v as f64 - mean;
        m2 += c as f64 * d * d;
        m3 += c as f64 * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        return Err(SceneError::DegenerateHistogram(mean as u8));
    }
    Ok(m3 / m2.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneDiagnostics {
    pub argmax_value: u8,
    /// None when the histogram is degenerate (zero variance).
    pub skewness: Option<f64>,
}

pub fn classify_scene(
    background: &Frame,
    params: &ClassifierParams,
) -> Result<(SceneCategory, SceneDiagnostics), SceneError> {
    let hist = luma_histogram(background)?;
    let argmax = hist.argmax_value();
    if argmax < params.night_threshold {
        let skewness = histogram_skewness(&hist).ok();
        return Ok((
            SceneCategory::Night,
            SceneDiagnostics {
                argmax_value: argmax,
                skewness,
            },
        ));
    }
    match histogram_skewness(&hist) {
        Ok(skew) => {
            let category = if skew.abs() < params.fog_skewness_epsilon {
                SceneCategory::Fog
            } else {
                SceneCategory::Day
            };
            Ok((
                category,
                SceneDiagnostics {
                    argmax_value: argmax,
                    skewness: Some(skew),
                },
            ))
        }
        // all pixels equal and bright: day by the argmax rule alone
        Err(SceneError::DegenerateHistogram(_)) => Ok((
            SceneCategory::Day,
            SceneDiagnostics {
                argmax_value: argmax,
                skewness: None,
            },
        )),
        Err(e) => Err(e),
    }
}

/// One row of the categorization report CSV:
/// `video_id,category,argmax,skewness`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRow {
    pub video_id: u32,
    pub category: SceneCategory,
    pub argmax_value: u8,
    pub skewness: Option<f64>,
}

impl CategoryRow {
    pub fn to_csv_line(&self) -> String {
        match self.skewness {
            Some(s) => format!("{},{},{},{:.6}", self.video_id, self.category, self.argmax_value, s),
            None => format!("{},{},{},", self.video_id, self.category, self.argmax_value),
        }
    }
}

/// Estimate a background per video and classify it. Per-video failures are
/// collected; the batch continues.
pub fn categorize_videos<'a, I>(
    videos: I,
    background_params: &crate::background::BackgroundParams,
    classifier_params: &ClassifierParams,
) -> (Vec<CategoryRow>, Vec<(u32, String)>)
where
    I: IntoIterator<Item = (&'a crate::frame::VideoSource, &'a [Frame])>,
{
    let (models, failures) = crate::background::estimate_all_backgrounds(videos, background_params);
    let mut rows = Vec::new();
    let mut failed: Vec<(u32, String)> = failures
        .into_iter()
        .map(|(id, e)| (id, e.to_string()))
        .collect();
    for (id, model) in &models {
        match classify_scene(&model.background, classifier_params) {
            Ok((category, diag)) => rows.push(CategoryRow {
                video_id: *id,
                category,
                argmax_value: diag.argmax_value,
                skewness: diag.skewness,
            }),
            Err(e) => failed.push((*id, e.to_string())),
        }
    }
    rows.sort_by_key(|r| r.video_id);
    failed.sort_by_key(|(id, _)| *id);
    (rows, failed)
}
