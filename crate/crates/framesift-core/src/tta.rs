//! Inference-side test-time augmentation: unmap detections made on
//! transformed views back to original coordinates and average them into
//! fused detections.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::augment::BoxF;
use crate::eval::iou;
use crate::io::detections::{BBox, DetectionRecord};

#[derive(Debug, Error)]
pub enum TtaError {
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("views disagree on the frame universe: {0}")]
    InconsistentFrames(String),
}

/// Invertible view geometry. Crop/rotation views are not supported for
/// fusion; they would need per-region bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewTransform {
    Identity,
    HFlip { width: u32 },
    Scale { factor: f64 },
}

impl ViewTransform {
    /// Map a box from view coordinates back to original coordinates.
    pub fn unmap_box(&self, b: &BoxF) -> Result<BoxF, TtaError> {
        match *self {
            ViewTransform::Identity => Ok(*b),
            ViewTransform::HFlip { width } => Ok(BoxF::new(
                width as f64 - b.left - b.width,
                b.top,
                b.width,
                b.height,
            )),
            ViewTransform::Scale { factor } => {
                if factor <= 0.0 {
                    return Err(TtaError::NonPositiveScale(factor));
                }
                Ok(BoxF::new(
                    b.left / factor,
                    b.top / factor,
                    b.width / factor,
                    b.height / factor,
                ))
            }
        }
    }

    /// Map a box from original coordinates into the view (the forward
    /// direction a detector saw).
    pub fn map_box(&self, b: &BoxF) -> BoxF {
        match *self {
            ViewTransform::Identity => *b,
            ViewTransform::HFlip { width } => {
                BoxF::new(width as f64 - b.left - b.width, b.top, b.width, b.height)
            }
            ViewTransform::Scale { factor } => {
                BoxF::new(b.left * factor, b.top * factor, b.width * factor, b.height * factor)
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct UnmapReport {
    pub clipped: usize,
    pub dropped: usize,
}

/// Apply the inverse view transform to every record. Boxes landing
/// partially outside the original frame are clipped; fully outside are
/// dropped and counted.
pub fn unmap_detections(
    records: &[DetectionRecord],
    view: ViewTransform,
    frame_size: Option<(u32, u32)>,
) -> Result<(Vec<DetectionRecord>, UnmapReport), TtaError> {
    let mut report = UnmapReport::default();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let unmapped = view.unmap_box(&BoxF::from(r.bbox))?;
        let boxed = match frame_size {
            None => unmapped,
            Some((w, h)) => {
                let x0 = unmapped.left.max(0.0);
                let y0 = unmapped.top.max(0.0);
                let x1 = (unmapped.left + unmapped.width).min(w as f64);
                let y1 = (unmapped.top + unmapped.height).min(h as f64);
                if x1 <= x0 || y1 <= y0 {
                    report.dropped += 1;
                    continue;
                }
                let clipped = BoxF::new(x0, y0, x1 - x0, y1 - y0);
                if clipped != unmapped {
                    report.clipped += 1;
                }
                clipped
            }
        };
        out.push(DetectionRecord {
            bbox: boxed.to_bbox(),
            ..r.clone()
        });
    }
    Ok((out, report))
}

/// Views must cover the same videos; a prediction file for the wrong
/// video set is almost certainly a mismatched input.
pub fn validate_frame_universe(per_view: &[Vec<DetectionRecord>]) -> Result<(), TtaError> {
    let sets: Vec<std::collections::BTreeSet<u32>> = per_view
        .iter()
        .map(|v| v.iter().map(|r| r.video_id).collect())
        .collect();
    let union: std::collections::BTreeSet<u32> = sets.iter().flatten().copied().collect();
    let mut offenders = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        if !s.is_empty() && s != &union {
            let missing: Vec<String> = union.difference(s).map(|v| v.to_string()).collect();
            offenders.push(format!("view {i} lacks videos {}", missing.join(",")));
        }
    }
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(TtaError::InconsistentFrames(offenders.join("; ")))
    }
}

/// A fused detection plus how many views contributed a member box.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedDetection {
    pub record: DetectionRecord,
    pub member_count: usize,
}

/// Greedy confidence-ordered clustering per (video, frame, class), then
/// coordinate averaging. Fused confidence divides by the number of views,
/// so a box missing from some views is down-weighted.
pub fn fuse(
    per_view: &[Vec<DetectionRecord>],
    iou_cluster_threshold: f64,
) -> Result<Vec<FusedDetection>, TtaError> {
    let n_views = per_view.len().max(1);
    let mut grouped: BTreeMap<(u32, u32, u32), Vec<&DetectionRecord>> = BTreeMap::new();
    for view in per_view {
        for r in view {
            grouped.entry((r.video_id, r.frame_id, r.class_id)).or_default().push(r);
        }
    }
    let mut fused = Vec::new();
    for ((video_id, frame_id, class_id), mut records) in grouped {
        records.sort_by(|x, y| {
            y.confidence
                .partial_cmp(&x.confidence)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| x.bbox.cmp(&y.bbox))
        });
        struct Cluster {
            sum: [f64; 4],
            conf_sum: f64,
            members: usize,
        }
        impl Cluster {
            fn mean_box(&self) -> BBox {
                BoxF::new(
                    self.sum[0] / self.members as f64,
                    self.sum[1] / self.members as f64,
                    self.sum[2] / self.members as f64,
                    self.sum[3] / self.members as f64,
                )
                .to_bbox()
            }
        }
        let mut clusters: Vec<Cluster> = Vec::new();
        for r in records {
            let joined = clusters.iter_mut().find(|c| {
                iou(&c.mean_box(), &r.bbox) >= iou_cluster_threshold
            });
            match joined {
                Some(c) => {
                    c.sum[0] += r.bbox.left as f64;
                    c.sum[1] += r.bbox.top as f64;
                    c.sum[2] += r.bbox.width as f64;
                    c.sum[3] += r.bbox.height as f64;
                    c.conf_sum += r.confidence;
                    c.members += 1;
                }
                None => clusters.push(Cluster {
                    sum: [
                        r.bbox.left as f64,
                        r.bbox.top as f64,
                        r.bbox.width as f64,
                        r.bbox.height as f64,
                    ],
                    conf_sum: r.confidence,
                    members: 1,
                }),
            }
        }
        for c in clusters {
            fused.push(FusedDetection {
                record: DetectionRecord {
                    video_id,
                    frame_id,
                    bbox: c.mean_box(),
                    class_id,
                    confidence: c.conf_sum / n_views as f64,
                },
                member_count: c.members,
            });
        }
    }
    fused.sort_by(|a, b| {
        (a.record.video_id, a.record.frame_id, a.record.class_id)
            .cmp(&(b.record.video_id, b.record.frame_id, b.record.class_id))
            .then_with(|| {
                b.record
                    .confidence
                    .partial_cmp(&a.record.confidence)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.record.bbox.cmp(&b.record.bbox))
    });
    Ok(fused)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: u32, b: (i64, i64, i64, i64), conf: f64) -> DetectionRecord {
        DetectionRecord {
            video_id: 1,
            frame_id: frame,
            bbox: BBox::new(b.0, b.1, b.2, b.3),
            class_id: 1,
            confidence: conf,
        }
    }

    #[test]
    fn hflip_unmap_inverts_the_augmentation_example() {
        let view = ViewTransform::HFlip { width: 1920 };
        let (out, _) = unmap_detections(&[det(1, (1770, 200, 50, 80), 0.9)], view, None).unwrap();
        assert_eq!(out[0].bbox, BBox::new(100, 200, 50, 80));
    }

    #[test]
    fn scale_unmap_inverts() {
        let view = ViewTransform::Scale { factor: 0.5 };
        let (out, _) = unmap_detections(&[det(1, (50, 100, 25, 40), 0.9)], view, None).unwrap();
        assert_eq!(out[0].bbox, BBox::new(100, 200, 50, 80));
    }

    #[test]
    fn identity_is_a_no_op() {
        let input = vec![det(1, (5, 6, 7, 8), 0.5)];
        let (out, report) = unmap_detections(&input, ViewTransform::Identity, None).unwrap();
        assert_eq!(out, input);
        assert_eq!(report.dropped, 0);
    }

    #[test]
    fn unmap_map_round_trips_on_integer_friendly_factors() {
        for view in [
            ViewTransform::Identity,
            ViewTransform::HFlip { width: 1920 },
            ViewTransform::Scale { factor: 2.0 },
            ViewTransform::Scale { factor: 0.25 },
        ] {
            let b = BoxF::new(96.0, 200.0, 48.0, 80.0);
            let round = view.unmap_box(&view.map_box(&b)).unwrap();
            assert_eq!(round, b, "view {view:?}");
        }
    }

    #[test]
    fn outside_boxes_clip_or_drop() {
        let view = ViewTransform::Scale { factor: 0.5 };
        // unmaps to (2000, 0, 100, 20): outside a 1920-wide frame
        let (out, report) =
            unmap_detections(&[det(1, (1000, 0, 50, 10), 0.9)], view, Some((1920, 1080))).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.dropped, 1);
    }

    #[test]
    fn single_view_fusion_is_identity() {
        let records = vec![det(1, (10, 10, 20, 20), 0.8), det(2, (0, 0, 5, 5), 0.4)];
        let fused = fuse(&[records.clone()], 0.55).unwrap();
        assert_eq!(fused.len(), 2);
        for f in &fused {
            assert_eq!(f.member_count, 1);
        }
        assert_eq!(fused[0].record, records[0]);
        assert_eq!(fused[1].record, records[1]);
    }

    #[test]
    fn identical_box_in_all_views_fuses_to_itself() {
        let rec = det(1, (10, 10, 20, 20), 0.9);
        let fused = fuse(&[vec![rec.clone()], vec![rec.clone()], vec![rec.clone()]], 0.55).unwrap();
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].member_count, 3);
        assert_eq!(fused[0].record.bbox, rec.bbox);
        assert!((fused[0].record.confidence - 0.9).abs() < 1e-12);
    }

    #[test]
    fn missing_views_down_weight_confidence() {
        let fused = fuse(&[vec![det(1, (10, 10, 20, 20), 0.9)], vec![], vec![]], 0.55).unwrap();
        assert_eq!(fused.len(), 1);
        assert!((fused[0].record.confidence - 0.3).abs() < 1e-12);
    }

    #[test]
    fn fusion_is_permutation_invariant() {
        let a = vec![det(1, (10, 10, 20, 20), 0.9), det(1, (100, 10, 20, 20), 0.7)];
        let b = vec![det(1, (11, 10, 20, 20), 0.8)];
        let f1 = fuse(&[a.clone(), b.clone()], 0.55).unwrap();
        let f2 = fuse(&[b, a], 0.55).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn fused_confidence_never_exceeds_max_member() {
        let a = vec![det(1, (10, 10, 20, 20), 0.9)];
        let b = vec![det(1, (10, 10, 20, 20), 0.5)];
        let fused = fuse(&[a, b], 0.55).unwrap();
        assert!(fused[0].record.confidence <= 0.9 + 1e-12);
    }
}
