//! Category-balanced frame selection, near-duplicate removal, negative
//! injection, and the sequence-disjoint train/validation split.

pub mod audit;
pub mod dedup;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::augment::AugmentationSpec;
use crate::io::manifest::{ManifestEntry, SampleManifest, SampleMode, Split};
use crate::scene::SceneCategory;
use crate::seed::{rng_from, stage_seed, video_seed};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("requested frame count must be >= 1")]
    ZeroRequest,
    #[error("no category has any frames")]
    NoFrames,
    #[error("cannot split an empty manifest")]
    EmptyManifest,
}

/// Per-category totals feeding the sample-rate computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryStats {
    pub category: SceneCategory,
    pub n_videos: u32,
    pub total_frames: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub requested_frames: u64,
    pub mode: SampleMode,
    pub rates: BTreeMap<SceneCategory, f64>,
    pub quotas: BTreeMap<SceneCategory, u64>,
    /// true when the request exceeded the available frames and rates were
    /// clamped to 1
    pub clamped: bool,
}

/// Paper mode applies one global rate (requested / total over all
/// categories); balanced mode gives every category an equal quota so
/// underrepresented categories are sampled at higher rates.
pub fn compute_sample_plan(
    requested: u64,
    stats: &[CategoryStats],
    mode: SampleMode,
) -> Result<SamplePlan, SamplingError> {
    if requested == 0 {
        return Err(SamplingError::ZeroRequest);
    }
    let grand_total: u64 = stats.iter().map(|s| s.total_frames).sum();
    if grand_total == 0 {
        return Err(SamplingError::NoFrames);
    }
    let mut rates = BTreeMap::new();
    let mut quotas = BTreeMap::new();
    let mut clamped = false;
    match mode {
        SampleMode::Paper => {
            let mut rate = requested as f64 / grand_total as f64;
            if rate > 1.0 {
                rate = 1.0;
                clamped = true;
            }
            for s in stats {
                rates.insert(s.category, rate);
                quotas.insert(s.category, (rate * s.total_frames as f64).ceil() as u64);
            }
        }
        SampleMode::Balanced => {
            let q = (requested as f64 / stats.len() as f64).ceil() as u64;
            for s in stats {
                let rate = if s.total_frames == 0 {
                    0.0
                } else {
                    let r = q as f64 / s.total_frames as f64;
                    if r > 1.0 {
                        clamped = true;
                        1.0
                    } else {
                        r
                    }
                };
                rates.insert(s.category, rate);
                quotas.insert(s.category, q.min(s.total_frames));
            }
        }
    }
    Ok(SamplePlan {
        requested_frames: requested,
        mode,
        rates,
        quotas,
        clamped,
    })
}

/// What selection needs to know about one video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoSampleInfo {
    pub video_id: u32,
    pub frame_count: u32,
    pub category: SceneCategory,
}

/// Uniform-stride selection with a seeded random phase per video.
/// stride = round(1/rate); phase is drawn in [0, stride).
pub fn select_frames(plan: &SamplePlan, videos: &[VideoSampleInfo], seed: u64) -> SampleManifest {
    let mut manifest = SampleManifest::new(seed, plan.mode);
    let mut sorted: Vec<&VideoSampleInfo> = videos.iter().collect();
    sorted.sort_by_key(|v| v.video_id);
    for v in sorted {
        let rate = *plan.rates.get(&v.category).unwrap_or(&0.0);
        if rate <= 0.0 || v.frame_count == 0 {
            continue;
        }
        let stride = ((1.0 / rate).round() as u32).max(1);
        let phase = if stride == 1 {
            0
        } else {
            rng_from(stage_seed(video_seed(seed, v.video_id), "select")).gen_range(0..stride)
        };
        let mut idx = phase;
        while idx < v.frame_count {
            manifest.entries.push(ManifestEntry {
                video_id: v.video_id,
                frame_index: idx,
                category: Some(v.category),
                split: Split::None,
                is_negative: false,
                provenance: "algorithm2".to_string(),
            });
            idx += stride;
        }
    }
    manifest
}

/// Negative-sample provenance markers, parsed back during materialization.
pub const NEGATIVE_BASE_PROVENANCE: &str = "background";
pub const NEGATIVE_AUG_PREFIX: &str = "background-aug:";

/// Add each video's estimated background (and seeded photometric/flip
/// variants of it) as training negatives. Negative entries use
/// frame_index as a variant counter, 0 = the plain background.
pub fn inject_negatives(
    manifest: &mut SampleManifest,
    video_ids: &[u32],
    available_backgrounds: &BTreeMap<u32, SceneCategory>,
    augment_count: u32,
    seed: u64,
) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut ids: Vec<u32> = video_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    for vid in ids {
        let Some(&category) = available_backgrounds.get(&vid) else {
            warnings.push(format!("video {vid}: no background estimated, negatives skipped"));
            continue;
        };
        manifest.entries.push(ManifestEntry {
            video_id: vid,
            frame_index: 0,
            category: Some(category),
            split: Split::Train,
            is_negative: true,
            provenance: NEGATIVE_BASE_PROVENANCE.to_string(),
        });
        let mut rng = rng_from(stage_seed(video_seed(seed, vid), "negatives"));
        for variant in 1..=augment_count {
            let spec = match variant % 3 {
                1 => AugmentationSpec::HFlip,
                2 => AugmentationSpec::Blur { radius: rng.gen_range(1.0..4.0) },
                _ => AugmentationSpec::Color {
                    brightness: rng.gen_range(-0.2..0.2),
                    contrast: rng.gen_range(0.8..1.2),
                    saturation: rng.gen_range(0.5..1.5),
                },
            };
            let json = serde_json::to_string(&spec).expect("spec serializes");
            manifest.entries.push(ManifestEntry {
                video_id: vid,
                frame_index: variant,
                category: Some(category),
                split: Split::Train,
                is_negative: true,
                provenance: format!("{NEGATIVE_AUG_PREFIX}{json}"),
            });
        }
    }
    warnings
}

/// A maximal set of consecutively selected frames from one video: the unit
/// kept whole when splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub video_id: u32,
    /// indices into the manifest entry list
    pub entry_indices: Vec<usize>,
}

/// Group a manifest's non-negative entries into runs. The per-video stride
/// is inferred as the minimum gap between consecutive selected indices; a
/// larger gap (a dedup removal or a phase boundary) starts a new run.
pub fn infer_runs(manifest: &SampleManifest) -> Vec<Run> {
    let mut per_video: BTreeMap<u32, Vec<(u32, usize)>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        if !e.is_negative {
            per_video.entry(e.video_id).or_default().push((e.frame_index, i));
        }
    }
    let mut runs = Vec::new();
    for (video_id, mut frames) in per_video {
        frames.sort_unstable();
        let stride = frames
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .min()
            .unwrap_or(1)
            .max(1);
        let mut current: Vec<usize> = Vec::new();
        let mut prev: Option<u32> = None;
        for (idx, entry_i) in frames {
            if let Some(p) = prev {
                if idx - p > stride {
                    runs.push(Run { video_id, entry_indices: std::mem::take(&mut current) });
                }
            }
            current.push(entry_i);
            prev = Some(idx);
        }
        if !current.is_empty() {
            runs.push(Run { video_id, entry_indices: current });
        }
    }
    runs
}

#[derive(Debug, Clone, Default)]
pub struct SplitReport {
    pub n_runs: usize,
    pub train_frames: usize,
    pub val_frames: usize,
    pub warnings: Vec<String>,
}

/// Assign whole runs to train until the train frame count reaches
/// ratio x total; the rest go to validation. Negative entries always stay
/// in train.
pub fn split_manifest(
    manifest: &mut SampleManifest,
    ratio: f64,
    seed: u64,
) -> Result<SplitReport, SamplingError> {
    if manifest.entries.is_empty() {
        return Err(SamplingError::EmptyManifest);
    }
    let mut runs = infer_runs(manifest);
    let total: usize = runs.iter().map(|r| r.entry_indices.len()).sum();
    let mut report = SplitReport { n_runs: runs.len(), ..Default::default() };
    let target = ratio * total as f64;
    let mut rng = rng_from(stage_seed(seed, "split"));
    runs.shuffle(&mut rng);
    let largest = runs.iter().map(|r| r.entry_indices.len()).max().unwrap_or(0);
    if largest as f64 > target {
        report.warnings.push(format!(
            "largest run ({largest} frames) exceeds the train target ({target:.1}); ratio {ratio} unattainable"
        ));
    }
    let mut train = 0usize;
    for run in &runs {
        let split = if (train as f64) < target { Split::Train } else { Split::Val };
        for &i in &run.entry_indices {
            manifest.entries[i].split = split;
        }
        if split == Split::Train {
            train += run.entry_indices.len();
        }
    }
    report.train_frames = train;
    report.val_frames = total - train;
    for e in &mut manifest.entries {
        if e.is_negative {
            e.split = Split::Train;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(category: SceneCategory, n_videos: u32, total: u64) -> CategoryStats {
        CategoryStats { category, n_videos, total_frames: total }
    }

    #[test]
    fn paper_mode_single_global_rate() {
        // 10 videos x 20 s x 10 fps = 2000 frames, request 400 -> rate 0.2
        let plan = compute_sample_plan(
            400,
            &[stats(SceneCategory::Day, 10, 2000)],
            SampleMode::Paper,
        )
        .unwrap();
        assert!((plan.rates[&SceneCategory::Day] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn balanced_mode_equal_quotas() {
        let plan = compute_sample_plan(
            300,
            &[
                stats(SceneCategory::Day, 20, 2000),
                stats(SceneCategory::Night, 10, 1000),
                stats(SceneCategory::Fog, 1, 100),
            ],
            SampleMode::Balanced,
        )
        .unwrap();
        assert_eq!(plan.quotas[&SceneCategory::Day], 100);
        assert_eq!(plan.quotas[&SceneCategory::Night], 100);
        assert_eq!(plan.quotas[&SceneCategory::Fog], 100);
        assert!((plan.rates[&SceneCategory::Day] - 0.05).abs() < 1e-12);
        assert!((plan.rates[&SceneCategory::Night] - 0.1).abs() < 1e-12);
        assert_eq!(plan.rates[&SceneCategory::Fog], 1.0);
        assert!(!plan.clamped, "an exact quota is not a clamp");
    }

    #[test]
    fn oversized_request_clamps_to_one() {
        let plan =
            compute_sample_plan(500, &[stats(SceneCategory::Day, 1, 100)], SampleMode::Paper)
                .unwrap();
        assert_eq!(plan.rates[&SceneCategory::Day], 1.0);
        assert!(plan.clamped);
    }

    fn one_video_plan(rate: f64) -> SamplePlan {
        let mut rates = BTreeMap::new();
        rates.insert(SceneCategory::Day, rate);
        SamplePlan {
            requested_frames: 1,
            mode: SampleMode::Balanced,
            rates,
            quotas: BTreeMap::new(),
            clamped: false,
        }
    }

    #[test]
    fn stride_selection_counts() {
        let videos = [VideoSampleInfo { video_id: 1, frame_count: 200, category: SceneCategory::Day }];
        let m = select_frames(&one_video_plan(0.2), &videos, 7);
        assert_eq!(m.entries.len(), 40);
        let strides: Vec<u32> = m
            .entries
            .windows(2)
            .map(|w| w[1].frame_index - w[0].frame_index)
            .collect();
        assert!(strides.iter().all(|&s| s == 5));
        assert!(m.entries[0].frame_index < 5);
    }

    #[test]
    fn rate_one_selects_everything() {
        let videos = [VideoSampleInfo { video_id: 1, frame_count: 17, category: SceneCategory::Day }];
        let m = select_frames(&one_video_plan(1.0), &videos, 0);
        assert_eq!(m.entries.len(), 17);
    }

    #[test]
    fn selection_is_deterministic_per_seed() {
        let videos = [
            VideoSampleInfo { video_id: 1, frame_count: 100, category: SceneCategory::Day },
            VideoSampleInfo { video_id: 2, frame_count: 100, category: SceneCategory::Day },
        ];
        let a = select_frames(&one_video_plan(0.1), &videos, 42);
        let b = select_frames(&one_video_plan(0.1), &videos, 42);
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        let c = select_frames(&one_video_plan(0.1), &videos, 43);
        assert_ne!(a.to_canonical_json(), c.to_canonical_json());
    }

    #[test]
    fn selection_order_independent_of_input_order() {
        let mut videos = vec![
            VideoSampleInfo { video_id: 2, frame_count: 50, category: SceneCategory::Day },
            VideoSampleInfo { video_id: 1, frame_count: 50, category: SceneCategory::Day },
        ];
        let a = select_frames(&one_video_plan(0.25), &videos, 5);
        videos.reverse();
        let b = select_frames(&one_video_plan(0.25), &videos, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn negatives_count_and_split() {
        let mut m = SampleManifest::new(0, SampleMode::Balanced);
        let mut cats = BTreeMap::new();
        for v in 1..=3 {
            cats.insert(v, SceneCategory::Day);
        }
        let warnings = inject_negatives(&mut m, &[1, 2, 3], &cats, 2, 0);
        assert!(warnings.is_empty());
        assert_eq!(m.entries.len(), 9, "3 backgrounds x (1 + 2 variants)");
        assert!(m.entries.iter().all(|e| e.is_negative && e.split == Split::Train));
        m.validate().unwrap();
    }

    #[test]
    fn negatives_zero_variants() {
        let mut m = SampleManifest::new(0, SampleMode::Balanced);
        let mut cats = BTreeMap::new();
        cats.insert(1, SceneCategory::Night);
        inject_negatives(&mut m, &[1], &cats, 0, 0);
        assert_eq!(m.entries.len(), 1);
    }

    #[test]
    fn missing_background_warns() {
        let mut m = SampleManifest::new(0, SampleMode::Balanced);
        let warnings = inject_negatives(&mut m, &[9], &BTreeMap::new(), 1, 0);
        assert_eq!(warnings.len(), 1);
        assert!(m.entries.is_empty());
    }

    fn manifest_with_runs(runs: &[(u32, u32, u32, u32)]) -> SampleManifest {
        // (video_id, start, stride, count)
        let mut m = SampleManifest::new(0, SampleMode::Balanced);
        for &(v, start, stride, count) in runs {
            for k in 0..count {
                m.entries.push(ManifestEntry {
                    video_id: v,
                    frame_index: start + k * stride,
                    category: Some(SceneCategory::Day),
                    split: Split::None,
                    is_negative: false,
                    provenance: String::new(),
                });
            }
        }
        m
    }

    #[test]
    fn divisible_split_is_exact() {
        // 10 runs of 10 frames in 10 separate videos
        let runs: Vec<(u32, u32, u32, u32)> = (1..=10).map(|v| (v, 0, 1, 10)).collect();
        let mut m = manifest_with_runs(&runs);
        let report = split_manifest(&mut m, 0.7, 11).unwrap();
        assert_eq!(report.train_frames, 70);
        assert_eq!(report.val_frames, 30);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn single_giant_run_goes_to_train_with_warning() {
        let mut m = manifest_with_runs(&[(1, 0, 1, 100)]);
        let report = split_manifest(&mut m, 0.7, 0).unwrap();
        assert_eq!(report.train_frames, 100);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let runs: Vec<(u32, u32, u32, u32)> = (1..=9).map(|v| (v, 0, 2, 7)).collect();
        let mut a = manifest_with_runs(&runs);
        let mut b = manifest_with_runs(&runs);
        split_manifest(&mut a, 0.7, 99).unwrap();
        split_manifest(&mut b, 0.7, 99).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
    }

    #[test]
    fn runs_break_at_dedup_gaps() {
        // stride 5 with one removed selection in the middle
        let mut m = manifest_with_runs(&[(1, 0, 5, 10)]);
        m.entries.remove(4);
        let runs = infer_runs(&m);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].entry_indices.len(), 4);
        assert_eq!(runs[1].entry_indices.len(), 5);
    }

    #[test]
    fn no_run_spans_both_splits() {
        let runs: Vec<(u32, u32, u32, u32)> =
            (1..=7).map(|v| (v, v * 3, 3, 4 + v % 5)).collect();
        let mut m = manifest_with_runs(&runs);
        split_manifest(&mut m, 0.7, 3).unwrap();
        for run in infer_runs(&m) {
            let first = m.entries[run.entry_indices[0]].split;
            assert!(run.entry_indices.iter().all(|&i| m.entries[i].split == first));
        }
    }
}
