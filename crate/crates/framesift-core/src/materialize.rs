//! Expand a manifest into image files plus per-image ground-truth files,
//! emitting seeded augmented variants alongside each original.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::augment::{apply_with_survival, AugmentationSpec, BoxF};
use crate::frame::{Frame, PixelData};
use crate::io::detections::GroundTruthRecord;
use crate::io::manifest::SampleManifest;
use crate::io::pnm::write_pnm_file;
use crate::sampling::{NEGATIVE_AUG_PREFIX, NEGATIVE_BASE_PROVENANCE};
use crate::seed::{rng_from, splitmix64, stage_seed, video_seed};
use crate::FrameProvider;

#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("output directory {0}: {1}")]
    OutputDir(PathBuf, std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// Parameter ranges for the six-op augmentation family. These are
/// configuration defaults, recorded in every run report.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentPolicy {
    pub rotation_degrees: (f64, f64),
    pub scale_range: (f64, f64),
    /// crop retains this fraction of the frame area
    pub crop_area_range: (f64, f64),
    pub blur_radius_range: (f64, f64),
    pub brightness_range: (f64, f64),
    pub contrast_range: (f64, f64),
    pub saturation_range: (f64, f64),
    /// a box survives a crop if this fraction of its area remains
    pub crop_survival: f64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            rotation_degrees: (-15.0, 15.0),
            scale_range: (0.5, 1.5),
            crop_area_range: (0.6, 0.9),
            blur_radius_range: (1.0, 4.0),
            brightness_range: (-0.2, 0.2),
            contrast_range: (0.8, 1.2),
            saturation_range: (0.5, 1.5),
            crop_survival: 0.25,
        }
    }
}

impl AugmentPolicy {
    /// Draw the spec for variant `slot`: the default6 policy cycles
    /// hflip, rotate, scale, crop, blur, color.
    pub fn draw_spec<R: Rng>(&self, slot: usize, frame_dims: (u32, u32), rng: &mut R) -> AugmentationSpec {
        match slot % 6 {
            0 => AugmentationSpec::HFlip,
            1 => AugmentationSpec::Rotate {
                degrees: rng.gen_range(self.rotation_degrees.0..=self.rotation_degrees.1),
            },
            2 => AugmentationSpec::Scale {
                factor: rng.gen_range(self.scale_range.0..=self.scale_range.1),
            },
            3 => {
                let (w, h) = frame_dims;
                let side = rng.gen_range(self.crop_area_range.0..=self.crop_area_range.1).sqrt();
                let cw = ((w as f64 * side).round() as u32).clamp(1, w);
                let chh = ((h as f64 * side).round() as u32).clamp(1, h);
                let left = rng.gen_range(0..=(w - cw)) as i64;
                let top = rng.gen_range(0..=(h - chh)) as i64;
                AugmentationSpec::Crop { left, top, width: cw, height: chh }
            }
            4 => AugmentationSpec::Blur {
                radius: rng.gen_range(self.blur_radius_range.0..=self.blur_radius_range.1),
            },
            _ => AugmentationSpec::Color {
                brightness: rng.gen_range(self.brightness_range.0..=self.brightness_range.1),
                contrast: rng.gen_range(self.contrast_range.0..=self.contrast_range.1),
                saturation: rng.gen_range(self.saturation_range.0..=self.saturation_range.1),
            },
        }
    }

    /// Photometric/flip subset used for negative samples.
    pub fn draw_geometry_preserving<R: Rng>(&self, slot: usize, rng: &mut R) -> AugmentationSpec {
        match slot % 3 {
            0 => AugmentationSpec::HFlip,
            1 => AugmentationSpec::Blur {
                radius: rng.gen_range(self.blur_radius_range.0..=self.blur_radius_range.1),
            },
            _ => AugmentationSpec::Color {
                brightness: rng.gen_range(self.brightness_range.0..=self.brightness_range.1),
                contrast: rng.gen_range(self.contrast_range.0..=self.contrast_range.1),
                saturation: rng.gen_range(self.saturation_range.0..=self.saturation_range.1),
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MaterializeReport {
    pub images_written: usize,
    pub skipped: Vec<String>,
}

fn entry_seed(master: u64, video_id: u32, frame_index: u32, is_negative: bool) -> u64 {
    let base = stage_seed(video_seed(master, video_id), "materialize");
    base ^ splitmix64(frame_index as u64 | ((is_negative as u64) << 40))
}

fn image_path(out_dir: &Path, video_id: u32, frame_index: u32, negative: bool, variant: Option<u32>, rgb: bool) -> PathBuf {
    let kind = if negative { "neg" } else { "f" };
    let stem = match variant {
        None => format!("v{video_id:03}_{kind}{frame_index:06}_orig"),
        Some(k) => format!("v{video_id:03}_{kind}{frame_index:06}_aug{k}"),
    };
    out_dir.join(format!("{stem}.{}", if rgb { "ppm" } else { "pgm" }))
}

fn write_image_and_gt(
    path: &PathBuf,
    frame: &Frame,
    boxes: &[BoxF],
    video_id: u32,
    wire_frame_id: u32,
    class_ids: &[u32],
) -> Result<(), MaterializeError> {
    write_pnm_file(path, frame).map_err(|e| MaterializeError::Write {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let mut records = Vec::new();
    for (b, &class_id) in boxes.iter().zip(class_ids) {
        // clip to the output frame; discard boxes that rounded away
        let x0 = b.left.max(0.0);
        let y0 = b.top.max(0.0);
        let x1 = (b.left + b.width).min(frame.width as f64);
        let y1 = (b.top + b.height).min(frame.height as f64);
        if x1 <= x0 || y1 <= y0 {
            continue;
        }
        let bb = BoxF::new(x0, y0, x1 - x0, y1 - y0).to_bbox();
        records.push(GroundTruthRecord {
            video_id,
            frame_id: wire_frame_id,
            bbox: bb,
            class_id,
        });
    }
    let gt_path = path.with_extension("csv");
    crate::io::detections::write_ground_truth_file(&gt_path, &records).map_err(|e| {
        MaterializeError::Write { path: gt_path, message: e.to_string() }
    })?;
    Ok(())
}

/// Emit every manifest entry as an image plus `variants_per_frame` seeded
/// augmentations, each with a companion ground-truth file.
#[allow(clippy::too_many_arguments)]
pub fn materialize<P: FrameProvider>(
    manifest: &SampleManifest,
    gt: &[GroundTruthRecord],
    policy: &AugmentPolicy,
    variants_per_frame: u32,
    out_dir: &Path,
    seed: u64,
    provider: &P,
    frame_id_base: u32,
) -> Result<MaterializeReport, MaterializeError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| MaterializeError::OutputDir(out_dir.to_path_buf(), e))?;
    let mut by_frame: BTreeMap<(u32, u32), Vec<&GroundTruthRecord>> = BTreeMap::new();
    for g in gt {
        by_frame.entry((g.video_id, g.frame_id)).or_default().push(g);
    }
    let mut report = MaterializeReport::default();
    let mut entries: Vec<_> = manifest.entries.iter().collect();
    entries.sort_by_key(|e| (e.video_id, e.is_negative, e.frame_index));
    for e in entries {
        let loaded = if e.is_negative {
            provider.background(e.video_id).and_then(|bg| {
                if let Some(json) = e.provenance.strip_prefix(NEGATIVE_AUG_PREFIX) {
                    let spec: AugmentationSpec = serde_json::from_str(json)
                        .map_err(|err| format!("bad negative provenance: {err}"))?;
                    apply_with_survival(&bg, &[], spec, policy.crop_survival)
                        .map(|s| s.frame)
                        .map_err(|err| err.to_string())
                } else if e.provenance == NEGATIVE_BASE_PROVENANCE || e.provenance.is_empty() {
                    Ok(bg)
                } else {
                    Ok(bg)
                }
            })
        } else {
            provider.frame(e.video_id, e.frame_index)
        };
        let frame = match loaded {
            Ok(f) => f,
            Err(err) => {
                report.skipped.push(format!(
                    "video {} frame {} (negative={}): {err}",
                    e.video_id, e.frame_index, e.is_negative
                ));
                continue;
            }
        };
        let rgb = matches!(frame.pixels, PixelData::Rgb(_));
        let wire_frame_id = e.frame_index + frame_id_base;
        let (boxes, class_ids): (Vec<BoxF>, Vec<u32>) = if e.is_negative {
            (Vec::new(), Vec::new())
        } else {
            by_frame
                .get(&(e.video_id, wire_frame_id))
                .map(|rows| {
                    rows.iter()
                        .map(|g| (BoxF::from(g.bbox), g.class_id))
                        .unzip()
                })
                .unwrap_or_default()
        };

        let path = image_path(out_dir, e.video_id, e.frame_index, e.is_negative, None, rgb);
        write_image_and_gt(&path, &frame, &boxes, e.video_id, wire_frame_id, &class_ids)?;
        report.images_written += 1;

        let mut rng = rng_from(entry_seed(seed, e.video_id, e.frame_index, e.is_negative));
        for k in 0..variants_per_frame {
            let spec = if e.is_negative {
                policy.draw_geometry_preserving(k as usize, &mut rng)
            } else {
                policy.draw_spec(k as usize, (frame.width, frame.height), &mut rng)
            };
            match apply_with_survival(&frame, &boxes, spec, policy.crop_survival) {
                Ok(sample) => {
                    let surviving_classes: Vec<u32> =
                        sample.box_sources.iter().map(|&i| class_ids[i]).collect();
                    let vpath =
                        image_path(out_dir, e.video_id, e.frame_index, e.is_negative, Some(k + 1), rgb);
                    write_image_and_gt(
                        &vpath,
                        &sample.frame,
                        &sample.boxes,
                        e.video_id,
                        wire_frame_id,
                        &surviving_classes,
                    )?;
                    report.images_written += 1;
                }
                Err(err) => report.skipped.push(format!(
                    "video {} frame {} variant {k}: {err}",
                    e.video_id, e.frame_index
                )),
            }
        }
    }
    Ok(report)
}
