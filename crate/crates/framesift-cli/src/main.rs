//! `framesift`: batch frame sampling, augmentation, and detection scoring
//! for fixed-camera traffic video, one subcommand per pipeline stage.

mod config;
mod pipeline;
mod provider;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use framesift_core::background::{estimate_background, BackgroundParams, WindowStart};
use framesift_core::eval::{coco_thresholds, evaluate};
use framesift_core::io::detections::{
    read_detections_file, read_ground_truth_file, write_detections_file, DetectionRecord,
};
use framesift_core::io::manifest::{read_manifest_file, write_manifest_file, TOOL_VERSION};
use framesift_core::io::pnm::write_pnm_file;
use framesift_core::io::y4m::{probe_y4m_file, read_y4m_file};
use framesift_core::materialize::{materialize, AugmentPolicy};
use framesift_core::sampling::audit::{audit_annotations, write_gap_report};
use framesift_core::sampling::dedup::{filter_duplicates, DuplicateFilterParams};
use framesift_core::sampling::{
    compute_sample_plan, select_frames, split_manifest, CategoryStats, VideoSampleInfo,
    NEGATIVE_AUG_PREFIX, NEGATIVE_BASE_PROVENANCE,
};
use framesift_core::scene::{classify_scene, CategoryRow, ClassifierParams, SceneCategory};
use framesift_core::tta::{fuse, unmap_detections, validate_frame_universe, ViewTransform};

use config::{parse_mode, PipelineConfig};
use provider::{discover_videos, LoadedCorpus};

#[derive(Parser)]
#[command(name = "framesift", version, about, disable_version_flag = true)]
struct Cli {
    /// worker thread cap for all stages (env FRAMESIFT_JOBS as fallback);
    /// results are byte-identical for any value
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a video's static background and write it as PNM
    Background {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        window_seconds: f64,
        #[arg(long, default_value_t = 0.6)]
        keep_fraction: f64,
        /// decode as RGB (writes PPM) instead of luma (PGM)
        #[arg(long)]
        rgb: bool,
    },
    /// Classify each video in a directory as day, night, or fog
    Categorize {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 150)]
        night_threshold: u8,
        #[arg(long, default_value_t = 0.25)]
        fog_epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        window_seconds: f64,
        #[arg(long, default_value_t = 0.6)]
        keep_fraction: f64,
    },
    /// Select frames per category into a manifest
    Sample {
        #[arg(long)]
        videos: PathBuf,
        /// categorization CSV produced by `categorize`
        #[arg(long)]
        categories: PathBuf,
        #[arg(long)]
        frames: u64,
        #[arg(long, value_parser = parse_mode, default_value = "balanced")]
        mode: framesift_core::io::manifest::SampleMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drop near-duplicate frames from a manifest
    Dedup {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Hamming distance on 64-bit average hashes
        #[arg(long, default_value_t = 5)]
        threshold: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign whole frame runs to train/val
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report single-frame annotation gaps in a ground-truth file
    Audit {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Materialize manifest frames plus augmented variants as PNM + CSV
    Augment {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        /// `default6` or a JSON policy file
        #[arg(long, default_value = "default6")]
        policy: String,
        #[arg(long, default_value_t = 2)]
        variants_per_frame: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// directory of `v{ID}.pgm` backgrounds for negative entries
        #[arg(long)]
        backgrounds: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        frame_id_base: u32,
        #[arg(long)]
        rgb: bool,
    },
    /// Fuse per-view detection files back into one averaged set
    #[command(name = "tta-fuse")]
    TtaFuse {
        /// `file[:view:param]` where view is identity, hflip:<width>, or
        /// scale:<factor>; repeat once per view
        #[arg(long, required = true)]
        pred: Vec<String>,
        #[arg(long, default_value_t = 0.55)]
        iou: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score detections against ground truth (mAP)
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// evaluate at 0.50:0.05:0.95 and report the mean
        #[arg(long)]
        coco_range: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end into a run directory
    Pipeline {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// JSON config; flags below override file values
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<framesift_core::io::manifest::SampleMode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        variants_per_frame: Option<u32>,
    },
    /// Print the tool version (matches the manifest `tool_version` field)
    Version,
    /// Parse and range-check a pipeline config, echoing the effective values
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Show the provenance chain of one manifest entry
    Explain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        video: u32,
        #[arg(long)]
        frame: u32,
        /// look up the negative (background) entry instead
        #[arg(long)]
        negative: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let jobs = cli.jobs.or_else(|| {
        std::env::var("FRAMESIFT_JOBS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = jobs {
        // all parallel stages use per-item seeds, so any pool size gives
        // identical bytes
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn background_params(seed: u64, window_seconds: f64, keep_fraction: f64) -> BackgroundParams {
    BackgroundParams {
        window_seconds,
        keep_fraction,
        seed,
        window_start: WindowStart::Random,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Background { video, out, seed, window_seconds, keep_fraction, rgb } => {
            let (source, frames) =
                read_y4m_file(&video, 1, rgb).with_context(|| format!("decode {}", video.display()))?;
            let model = estimate_background(
                &source,
                &frames,
                &background_params(seed, window_seconds, keep_fraction),
            )?;
            write_pnm_file(&out, &model.background)?;
            println!(
                "background from {} frames (of {}) -> {}",
                model.source_frame_indices.len(),
                source.frame_count,
                out.display()
            );
        }

        Command::Categorize {
            videos,
            out,
            night_threshold,
            fog_epsilon,
            seed,
            window_seconds,
            keep_fraction,
        } => {
            let corpus = LoadedCorpus::load(&videos, false)?;
            let params = background_params(seed, window_seconds, keep_fraction);
            let classifier = ClassifierParams {
                night_threshold,
                fog_skewness_epsilon: fog_epsilon,
            };
            let mut csv = String::new();
            let mut errors = 0;
            for source in &corpus.sources {
                let frames = corpus.frames_of(source.video_id);
                let row = estimate_background(source, &frames, &params)
                    .map_err(|e| e.to_string())
                    .and_then(|model| {
                        classify_scene(&model.background, &classifier).map_err(|e| e.to_string())
                    });
                match row {
                    Ok((category, diag)) => {
                        let row = CategoryRow {
                            video_id: source.video_id,
                            category,
                            argmax_value: diag.argmax_value,
                            skewness: diag.skewness,
                        };
                        csv.push_str(&row.to_csv_line());
                        csv.push('\n');
                    }
                    Err(e) => {
                        errors += 1;
                        eprintln!("video {} ({}): {e}", source.video_id, source.path.display());
                    }
                }
            }
            std::fs::write(&out, csv)?;
            println!("{} videos categorized -> {}", corpus.sources.len() - errors, out.display());
            if errors > 0 {
                bail!("{errors} videos could not be categorized");
            }
        }

        Command::Sample { videos, categories, frames, mode, seed, out } => {
            let category_of = read_categories(&categories)?;
            let mut infos = Vec::new();
            let mut per_category: BTreeMap<SceneCategory, (u32, u64)> = BTreeMap::new();
            for (id, path) in discover_videos(&videos)? {
                let Some(&category) = category_of.get(&id) else {
                    eprintln!("video {id} missing from {}, skipped", categories.display());
                    continue;
                };
                let source = probe_y4m_file(&path, id)
                    .with_context(|| format!("probe {}", path.display()))?;
                let e = per_category.entry(category).or_insert((0, 0));
                e.0 += 1;
                e.1 += source.frame_count as u64;
                infos.push(VideoSampleInfo {
                    video_id: id,
                    frame_count: source.frame_count,
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
            let plan = compute_sample_plan(frames, &stats, mode)?;
            if plan.clamped {
                eprintln!("note: request exceeds available frames in some category; rate clamped to 1");
            }
            let manifest = select_frames(&plan, &infos, seed);
            write_manifest_file(&out, &manifest)?;
            println!("{} frames selected -> {}", manifest.entries.len(), out.display());
        }

        Command::Dedup { videos, manifest, threshold, out } => {
            let corpus = LoadedCorpus::load(&videos, false)?;
            let input = read_manifest_file(&manifest)?;
            let params = DuplicateFilterParams { hash_size: 8, hamming_threshold: threshold };
            let (filtered, report) = filter_duplicates(&input, &corpus, &params);
            for w in &report.warnings {
                eprintln!("{w}");
            }
            write_manifest_file(&out, &filtered)?;
            println!(
                "{} duplicates removed, {} entries kept -> {}",
                report.removed.len(),
                filtered.entries.len(),
                out.display()
            );
        }

        Command::Split { manifest, ratio, seed, out } => {
            let mut m = read_manifest_file(&manifest)?;
            let report = split_manifest(&mut m, ratio, seed)?;
            for w in &report.warnings {
                eprintln!("{w}");
            }
            write_manifest_file(&out, &m)?;
            println!(
                "{} runs: {} train / {} val -> {}",
                report.n_runs,
                report.train_frames,
                report.val_frames,
                out.display()
            );
        }

        Command::Audit { gt, out } => {
            let records = read_ground_truth_file(&gt)?;
            let gaps = audit_annotations(&records);
            let file = std::fs::File::create(&out)?;
            write_gap_report(std::io::BufWriter::new(file), &gaps)?;
            println!("{} suspected gaps -> {}", gaps.len(), out.display());
        }

        Command::Augment {
            videos,
            manifest,
            gt,
            policy,
            variants_per_frame,
            seed,
            out,
            backgrounds,
            frame_id_base,
            rgb,
        } => {
            let mut corpus = LoadedCorpus::load(&videos, rgb)?;
            if let Some(dir) = &backgrounds {
                let n = corpus.load_backgrounds(dir)?;
                println!("{n} backgrounds loaded from {}", dir.display());
            }
            let m = read_manifest_file(&manifest)?;
            let gt_records = match &gt {
                Some(p) => read_ground_truth_file(p)?,
                None => Vec::new(),
            };
            let policy = load_policy(&policy)?;
            let report = materialize(
                &m,
                &gt_records,
                &policy,
                variants_per_frame,
                &out,
                seed,
                &corpus,
                frame_id_base,
            )?;
            for s in &report.skipped {
                eprintln!("skipped: {s}");
            }
            println!("{} images written -> {}", report.images_written, out.display());
        }

        Command::TtaFuse { pred, iou, out } => {
            let mut per_view = Vec::new();
            for spec in &pred {
                let (path, view) = parse_pred_spec(spec)?;
                let records = read_detections_file(&path)
                    .with_context(|| format!("parse {}", path.display()))?;
                let (unmapped, report) = unmap_detections(&records, view, None)?;
                if report.dropped > 0 {
                    eprintln!("{}: {} boxes dropped during unmapping", path.display(), report.dropped);
                }
                per_view.push(unmapped);
            }
            validate_frame_universe(&per_view)?;
            let fused = fuse(&per_view, iou)?;
            let records: Vec<DetectionRecord> = fused.into_iter().map(|f| f.record).collect();
            write_detections_file(&out, &records)?;
            println!("{} fused detections -> {}", records.len(), out.display());
        }

        Command::Eval { gt, pred, iou, coco_range, out } => {
            let gt_records = read_ground_truth_file(&gt)?;
            let detections = read_detections_file(&pred)?;
            let thresholds = if coco_range { coco_thresholds() } else { vec![iou] };
            let report = evaluate(&gt_records, &detections, &thresholds)?;
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            std::fs::write(&out, bytes)?;
            match (report.map_50, report.map_50_95) {
                (Some(m50), Some(range)) => {
                    println!("mAP@0.5 = {m50:.4}, mAP@[0.5:0.95] = {range:.4} -> {}", out.display())
                }
                _ => {
                    let r = &report.per_threshold[0];
                    println!("mAP@{} = {:.4} -> {}", r.iou_threshold, r.map, out.display())
                }
            }
        }

        Command::Pipeline {
            videos,
            gt,
            out,
            config,
            frames,
            mode,
            seed,
            ratio,
            variants_per_frame,
        } => {
            let mut cfg = match &config {
                Some(p) => PipelineConfig::load(p)?,
                None => PipelineConfig::default(),
            };
            if let Some(v) = frames {
                cfg.sampling.frames = v;
            }
            if let Some(v) = mode {
                cfg.sampling.mode = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = ratio {
                cfg.sampling.split_ratio = v;
            }
            if let Some(v) = variants_per_frame {
                cfg.variants_per_frame = v;
            }
            let summary = pipeline::run_pipeline(&videos, gt.as_deref(), &out, &cfg)?;
            println!("pipeline complete -> {}", summary.display());
        }

        Command::Version => {
            println!("framesift {TOOL_VERSION}");
        }

        Command::ValidateConfig { config } => {
            let cfg = PipelineConfig::load(&config)?;
            print!("{}", cfg.to_pretty_json());
        }

        Command::Explain { manifest, video, frame, negative } => {
            let m = read_manifest_file(&manifest)?;
            let entry = m
                .entries
                .iter()
                .find(|e| {
                    e.video_id == video && e.frame_index == frame && e.is_negative == negative
                })
                .with_context(|| {
                    format!(
                        "no {} entry for video {video}, frame {frame} in {}",
                        if negative { "negative" } else { "positive" },
                        manifest.display()
                    )
                })?;
            println!("video:      {}", entry.video_id);
            println!("frame:      {}", entry.frame_index);
            println!(
                "category:   {}",
                entry.category.map_or("unknown".to_string(), |c| c.to_string())
            );
            println!("split:      {:?}", entry.split);
            println!("selected by manifest seed {} ({:?} mode, tool {})", m.seed, m.mode, m.tool_version);
            if entry.is_negative {
                if entry.provenance == NEGATIVE_BASE_PROVENANCE {
                    println!("provenance: estimated background injected as a negative sample");
                } else if let Some(json) = entry.provenance.strip_prefix(NEGATIVE_AUG_PREFIX) {
                    println!("provenance: augmented background negative, spec {json}");
                } else {
                    println!("provenance: {}", entry.provenance);
                }
            } else {
                println!("provenance: {}", entry.provenance);
            }
        }
    }
    Ok(())
}

/// Parse the categorize report (`video_id,category,argmax,skewness`).
fn read_categories(path: &Path) -> Result<BTreeMap<u32, SceneCategory>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (id, category) = (fields.next(), fields.next());
        let parsed = id
            .and_then(|v| v.trim().parse::<u32>().ok())
            .zip(category.and_then(|c| c.trim().parse::<SceneCategory>().ok()));
        match parsed {
            Some((id, category)) => {
                out.insert(id, category);
            }
            None => bail!("{}: line {}: expected `video_id,category,...`", path.display(), lineno + 1),
        }
    }
    Ok(out)
}

fn load_policy(spec: &str) -> Result<AugmentPolicy> {
    if spec == "default6" {
        return Ok(AugmentPolicy::default());
    }
    let bytes = std::fs::read(spec).with_context(|| format!("cannot read policy {spec}"))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        anyhow::anyhow!("policy schema violation at /{}: {}", e.path(), e.inner())
    })
}

/// `file[:view:param]` -> path + view transform.
fn parse_pred_spec(spec: &str) -> Result<(PathBuf, ViewTransform)> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [path] | [path, "identity"] | [path, "id"] => {
            Ok((PathBuf::from(path), ViewTransform::Identity))
        }
        [path, "hflip", width] => {
            let width = width
                .parse()
                .map_err(|_| anyhow::anyhow!("hflip width must be an integer in `{spec}`"))?;
            Ok((PathBuf::from(path), ViewTransform::HFlip { width }))
        }
        [path, "scale", factor] => {
            let factor: f64 = factor
                .parse()
                .map_err(|_| anyhow::anyhow!("scale factor must be a number in `{spec}`"))?;
            if factor <= 0.0 {
                bail!("scale factor must be positive in `{spec}`");
            }
            Ok((PathBuf::from(path), ViewTransform::Scale { factor }))
        }
        _ => bail!("bad --pred `{spec}`; expected file[:identity|:hflip:<width>|:scale:<factor>]"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pred_spec_forms() {
        assert_eq!(parse_pred_spec("a.csv").unwrap().1, ViewTransform::Identity);
        assert_eq!(parse_pred_spec("a.csv:identity").unwrap().1, ViewTransform::Identity);
        assert_eq!(
            parse_pred_spec("a.csv:hflip:1920").unwrap().1,
            ViewTransform::HFlip { width: 1920 }
        );
        assert_eq!(
            parse_pred_spec("a.csv:scale:0.8").unwrap().1,
            ViewTransform::Scale { factor: 0.8 }
        );
        assert!(parse_pred_spec("a.csv:rotate:30").is_err());
        assert!(parse_pred_spec("a.csv:scale:-1").is_err());
    }

    #[test]
    fn categories_csv_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("categories.csv");
        std::fs::write(&path, "1,day,200,0.500000\n2,night,30,\n3,fog,180,0.010000\n").unwrap();
        let map = read_categories(&path).unwrap();
        assert_eq!(map[&1], SceneCategory::Day);
        assert_eq!(map[&2], SceneCategory::Night);
        assert_eq!(map[&3], SceneCategory::Fog);
    }

    #[test]
    fn bad_categories_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("categories.csv");
        std::fs::write(&path, "1,sunny,0,\n").unwrap();
        assert!(read_categories(&path).is_err());
    }
}
