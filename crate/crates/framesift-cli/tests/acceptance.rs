//! End-to-end acceptance for the CLI: a three-video toy corpus (one per
//! scene category, 600 frames total) through the full pipeline, with every
//! per-stage count checked against hand computation, plus reproducibility
//! and clean-failure behavior.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use framesift_core::io::y4m::write_y4m_luma;
use framesift_core::{Frame, Rational};

const W: u32 = 64;
const H: u32 = 48;

fn framesift() -> Command {
    Command::new(env!("CARGO_BIN_EXE_framesift"))
}

/// Static per-category backdrop plus a 16x12 occluder block that cycles
/// through four columns, so frame content is periodic with period 4.
fn toy_frame(video: u32, idx: u32, backdrop: &dyn Fn(u32) -> u8, block_value: u8) -> Frame {
    let mut px: Vec<u8> = (0..W * H).map(backdrop).collect();
    let col = (idx % 4) * 16;
    for y in 16..28 {
        for x in col..col + 16 {
            px[(y * W + x) as usize] = block_value;
        }
    }
    Frame::new_luma(video, idx, W, H, px).unwrap()
}

/// One 20 s video at 10 fps per category: night (dark backdrop, white
/// block), day (bright concentrated backdrop, black block), fog (bright
/// symmetric backdrop, black block).
fn write_toy_corpus(dir: &Path) {
    let night = |i: u32| 20 + (i % 60) as u8;
    let day = |i: u32| {
        if i % 10 == 0 {
            150 + ((i / 10) % 31) as u8
        } else {
            220
        }
    };
    let fog = |i: u32| 150 + (i % 106) as u8;
    let videos: [(&str, &dyn Fn(u32) -> u8, u8); 3] = [
        ("a_night.y4m", &night, 255),
        ("b_day.y4m", &day, 0),
        ("c_fog.y4m", &fog, 0),
    ];
    for (vid, (name, backdrop, block)) in videos.iter().enumerate() {
        let frames: Vec<Frame> = (0..200)
            .map(|t| toy_frame(vid as u32 + 1, t, backdrop, *block))
            .collect();
        let file = std::fs::File::create(dir.join(name)).unwrap();
        write_y4m_luma(std::io::BufWriter::new(file), Rational::new(10, 1), &frames).unwrap();
    }
}

fn write_config(path: &Path) {
    let config = r#"{
  "seed": 7,
  "sampling": {
    "frames": 60,
    "mode": "balanced",
    "dedup_threshold": 5,
    "split_ratio": 0.7,
    "negative_variants": 2
  },
  "variants_per_frame": 2
}
"#;
    std::fs::write(path, config).unwrap();
}

fn run_pipeline(videos: &Path, run_dir: &Path, config: &Path) {
    let output = framesift()
        .args(["pipeline", "--videos"])
        .arg(videos)
        .arg("--out")
        .arg(run_dir)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "pipeline failed:\n{}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn criterion_10_end_to_end_toy_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let videos = tmp.path().join("videos");
    std::fs::create_dir(&videos).unwrap();
    write_toy_corpus(&videos);
    let config = tmp.path().join("config.json");
    write_config(&config);

    let run_dir = tmp.path().join("run1");
    let started = Instant::now();
    run_pipeline(&videos, &run_dir, &config);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "pipeline took {elapsed:?}");

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("run-summary.json")).unwrap()).unwrap();
    let counts = &summary["counts"];

    // hand computation:
    //   3 videos x 200 frames; one background each, one per category
    assert_eq!(counts["videos"], 3);
    assert_eq!(counts["total_frames"], 600);
    assert_eq!(counts["backgrounds"], 3);
    assert_eq!(counts["categories"]["night"], 1);
    assert_eq!(counts["categories"]["day"], 1);
    assert_eq!(counts["categories"]["fog"], 1);
    //   balanced quota ceil(60/3) = 20 per category; rate 20/200 = 0.1,
    //   stride 10, so exactly 20 frames per video regardless of phase
    assert_eq!(counts["sampled"], 60);
    //   frame content repeats with period 4 and selections are 10 apart,
    //   so each video's 20 selections alternate between two byte-identical
    //   contents: 2 clusters per video survive, 18 removed
    assert_eq!(counts["duplicates_removed"], 54);
    assert_eq!(counts["after_dedup"], 6);
    //   3 backgrounds x (1 base + 2 augmented variants)
    assert_eq!(counts["negatives"], 9);
    //   per video the 2 kept frames are 10 apart = one run; 3 runs of 2,
    //   target 0.7 x 6 = 4.2, greedy fill puts all three in train
    assert_eq!(counts["runs"], 3);
    assert_eq!(counts["train_frames"], 6);
    assert_eq!(counts["val_frames"], 0);
    //   (6 positives + 9 negatives) x (original + 2 variants)
    assert_eq!(counts["images_written"], 45);
    assert_eq!(counts["images_skipped"], 0);
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["completed_stages"].as_array().unwrap().len(), 8);

    // every artifact the stages promise exists
    for name in ["backgrounds", "categories.csv", "manifest-sampled.json", "manifest.json", "images"] {
        assert!(run_dir.join(name).exists(), "{name} missing");
    }
    // 45 images, each with a companion ground-truth CSV
    let image_files = std::fs::read_dir(run_dir.join("images")).unwrap().count();
    assert_eq!(image_files, 90);

    // all three categories are represented in the final manifest
    let manifest = std::fs::read_to_string(run_dir.join("manifest.json")).unwrap();
    for cat in ["\"night\"", "\"day\"", "\"fog\""] {
        assert!(manifest.contains(cat), "{cat} absent from manifest");
    }

    // same config + seed reproduces the run byte for byte
    let run2 = tmp.path().join("run2");
    run_pipeline(&videos, &run2, &config);
    assert_eq!(tree_bytes(&run_dir), tree_bytes(&run2));

    println!(
        "PASS criterion 10: toy pipeline counts match hand computation, byte-identical re-run, {:?}",
        elapsed
    );
}

#[test]
fn missing_input_directory_fails_before_any_write() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let output = framesift()
        .args(["pipeline", "--videos"])
        .arg(tmp.path().join("nope"))
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(!run_dir.exists(), "run directory must not be created");
}

#[test]
fn version_matches_manifest_tool_version() {
    let output = framesift().arg("version").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(
        stdout.trim(),
        format!("framesift {}", framesift_core::io::manifest::TOOL_VERSION)
    );
}

#[test]
fn explain_describes_a_negative_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let videos = tmp.path().join("videos");
    std::fs::create_dir(&videos).unwrap();
    write_toy_corpus(&videos);
    let config = tmp.path().join("config.json");
    write_config(&config);
    let run_dir = tmp.path().join("run");
    run_pipeline(&videos, &run_dir, &config);

    let output = framesift()
        .arg("explain")
        .arg("--manifest")
        .arg(run_dir.join("manifest.json"))
        .args(["--video", "1", "--frame", "0", "--negative"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("background"), "{stdout}");

    // unknown entry id is an error
    let output = framesift()
        .arg("explain")
        .arg("--manifest")
        .arg(run_dir.join("manifest.json"))
        .args(["--video", "9", "--frame", "0"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn validate_config_reports_json_pointer_on_schema_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"sampling": {"frames": "many"}}"#).unwrap();
    let output = framesift()
        .arg("validate-config")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("/sampling/frames"), "{stderr}");
}
