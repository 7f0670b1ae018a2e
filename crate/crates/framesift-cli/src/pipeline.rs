//! The end-to-end run: background -> categorize -> sample -> dedup ->
//! negatives -> split -> augment, all artifacts under one run directory
//! with a summary JSON that fully determines reproduction.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use framesift_core::background::{estimate_all_backgrounds, BackgroundParams, WindowStart};
use framesift_core::io::detections::{read_ground_truth_file, GroundTruthRecord};
use framesift_core::io::manifest::{write_manifest_file, TOOL_VERSION};
use framesift_core::io::pnm::write_pnm_file;
use framesift_core::materialize::materialize;
use framesift_core::sampling::dedup::{filter_duplicates, DuplicateFilterParams};
use framesift_core::sampling::{
    compute_sample_plan, inject_negatives, select_frames, split_manifest, CategoryStats,
    VideoSampleInfo,
};
use framesift_core::scene::{classify_scene, CategoryRow, ClassifierParams, SceneCategory};

use crate::config::PipelineConfig;
use crate::provider::LoadedCorpus;

#[derive(Debug, Default, Serialize)]
pub struct StageCounts {
    pub videos: usize,
    pub total_frames: u64,
    pub backgrounds: usize,
    /// videos per scene category
    pub categories: BTreeMap<String, usize>,
    pub sampled: usize,
    pub duplicates_removed: usize,
    pub after_dedup: usize,
    pub negatives: usize,
    pub train_frames: usize,
    pub val_frames: usize,
    pub runs: usize,
    pub images_written: usize,
    pub images_skipped: usize,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub counts: StageCounts,
    pub completed_stages: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ResumeToken {
    completed_stages: Vec<String>,
    failed_stage: String,
    error: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

pub fn run_pipeline(
    videos_dir: &Path,
    gt_path: Option<&Path>,
    run_dir: &Path,
    config: &PipelineConfig,
) -> Result<PathBuf> {
    config.check()?;
    // validate every input before the first write so a bad invocation
    // leaves no partial run directory behind
    crate::provider::discover_videos(videos_dir)?;
    let gt: Vec<GroundTruthRecord> = match gt_path {
        Some(p) => {
            if !p.is_file() {
                bail!("ground-truth file {} does not exist", p.display());
            }
            read_ground_truth_file(p).with_context(|| format!("parse {}", p.display()))?
        }
        None => Vec::new(),
    };
    std::fs::create_dir_all(run_dir)
        .with_context(|| format!("create run directory {}", run_dir.display()))?;

    let mut completed: Vec<String> = Vec::new();
    let mut counts = StageCounts::default();
    let mut warnings: Vec<String> = Vec::new();

    let result = (|| -> Result<()> {
        // decode
        let stage = "decode";
        let mut corpus = LoadedCorpus::load(videos_dir, config.rgb)?;
        counts.videos = corpus.sources.len();
        counts.total_frames = corpus.sources.iter().map(|s| s.frame_count as u64).sum();
        completed.push(stage.into());

        // background
        let bg_params = BackgroundParams {
            window_seconds: config.background.window_seconds,
            keep_fraction: config.background.keep_fraction,
            seed: config.seed,
            window_start: WindowStart::Random,
        };
        let frame_sets: Vec<(u32, Vec<framesift_core::Frame>)> = corpus
            .sources
            .iter()
            .map(|s| (s.video_id, corpus.frames_of(s.video_id)))
            .collect();
        let pairs: Vec<_> = corpus
            .sources
            .iter()
            .zip(frame_sets.iter())
            .map(|(s, (_, f))| (s, f.as_slice()))
            .collect();
        let (models, failures) = estimate_all_backgrounds(pairs, &bg_params);
        for (id, e) in &failures {
            warnings.push(format!("background: video {id}: {e}"));
        }
        let bg_dir = run_dir.join("backgrounds");
        std::fs::create_dir_all(&bg_dir)?;
        for (id, model) in &models {
            let ext = if config.rgb { "ppm" } else { "pgm" };
            write_pnm_file(&bg_dir.join(format!("v{id:03}.{ext}")), &model.background)
                .with_context(|| format!("write background for video {id}"))?;
            corpus.set_background(*id, model.background.clone());
        }
        counts.backgrounds = models.len();
        completed.push("background".into());

        // categorize
        let classifier = ClassifierParams {
            night_threshold: config.classifier.night_threshold,
            fog_skewness_epsilon: config.classifier.fog_epsilon,
        };
        let mut rows: Vec<CategoryRow> = Vec::new();
        let mut category_of: BTreeMap<u32, SceneCategory> = BTreeMap::new();
        for (id, model) in &models {
            match classify_scene(&model.background, &classifier) {
                Ok((category, diag)) => {
                    category_of.insert(*id, category);
                    rows.push(CategoryRow {
                        video_id: *id,
                        category,
                        argmax_value: diag.argmax_value,
                        skewness: diag.skewness,
                    });
                }
                Err(e) => warnings.push(format!("categorize: video {id}: {e}")),
            }
        }
        let mut csv = String::new();
        for row in &rows {
            csv.push_str(&row.to_csv_line());
            csv.push('\n');
        }
        std::fs::write(run_dir.join("categories.csv"), csv)?;
        for row in &rows {
            *counts.categories.entry(row.category.to_string()).or_insert(0) += 1;
        }
        completed.push("categorize".into());

        // sample
        let mut per_category: BTreeMap<SceneCategory, (u32, u64)> = BTreeMap::new();
        let mut infos: Vec<VideoSampleInfo> = Vec::new();
        for s in &corpus.sources {
            let Some(&category) = category_of.get(&s.video_id) else {
                continue;
            };
            let e = per_category.entry(category).or_insert((0, 0));
            e.0 += 1;
            e.1 += s.frame_count as u64;
            infos.push(VideoSampleInfo {
                video_id: s.video_id,
                frame_count: s.frame_count,
                category,
            });
        }
        let stats: Vec<CategoryStats> = per_category
            .iter()
            .map(|(&category, &(n_videos, total_frames))| CategoryStats {
                category,
                n_videos,
                total_frames,
            })
            .collect();
        let plan = compute_sample_plan(config.sampling.frames, &stats, config.sampling.mode)?;
        let mut manifest = select_frames(&plan, &infos, config.seed);
        counts.sampled = manifest.entries.len();
        write_manifest_file(&run_dir.join("manifest-sampled.json"), &manifest)?;
        completed.push("sample".into());

        // dedup
        let dedup_params = DuplicateFilterParams {
            hash_size: 8,
            hamming_threshold: config.sampling.dedup_threshold,
        };
        let (deduped, report) = filter_duplicates(&manifest, &corpus, &dedup_params);
        counts.duplicates_removed = report.removed.len();
        warnings.extend(report.warnings.iter().map(|w| format!("dedup: {w}")));
        manifest = deduped;
        counts.after_dedup = manifest.entries.len();
        completed.push("dedup".into());

        // negatives
        let video_ids: Vec<u32> = corpus.sources.iter().map(|s| s.video_id).collect();
        let negative_warnings = inject_negatives(
            &mut manifest,
            &video_ids,
            &category_of,
            config.sampling.negative_variants,
            config.seed,
        );
        warnings.extend(negative_warnings.iter().map(|w| format!("negatives: {w}")));
        counts.negatives = manifest.entries.iter().filter(|e| e.is_negative).count();
        completed.push("negatives".into());

        // split
        let split = split_manifest(&mut manifest, config.sampling.split_ratio, config.seed)?;
        counts.runs = split.n_runs;
        counts.train_frames = split.train_frames;
        counts.val_frames = split.val_frames;
        warnings.extend(split.warnings.iter().map(|w| format!("split: {w}")));
        write_manifest_file(&run_dir.join("manifest.json"), &manifest)?;
        completed.push("split".into());

        // augment
        let images = run_dir.join("images");
        let report = materialize(
            &manifest,
            &gt,
            &config.augment,
            config.variants_per_frame,
            &images,
            config.seed,
            &corpus,
            config.frame_id_base,
        )?;
        counts.images_written = report.images_written;
        counts.images_skipped = report.skipped.len();
        warnings.extend(report.skipped.iter().map(|w| format!("augment: {w}")));
        completed.push("augment".into());
        Ok(())
    })();

    match result {
        Ok(()) => {
            let summary = RunSummary {
                tool_version: TOOL_VERSION.to_string(),
                seed: config.seed,
                config: *config,
                counts,
                completed_stages: completed,
                warnings,
            };
            let path = run_dir.join("run-summary.json");
            write_json(&path, &summary)?;
            Ok(path)
        }
        Err(e) => {
            // earlier-stage artifacts stay put; the token says where to
            // pick the run back up
            let failed = match completed.last().map(|s| s.as_str()) {
                None => "decode",
                Some("decode") => "background",
                Some("background") => "categorize",
                Some("categorize") => "sample",
                Some("sample") => "dedup",
                Some("dedup") => "negatives",
                Some("negatives") => "split",
                _ => "augment",
            };
            let token = ResumeToken {
                completed_stages: completed,
                failed_stage: failed.to_string(),
                error: e.to_string(),
            };
            let _ = write_json(&run_dir.join("resume.json"), &token);
            Err(e.context(format!("pipeline failed at stage `{failed}`")))
        }
    }
}
