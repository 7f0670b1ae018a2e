//! Ground-truth gap detection: flag frames where an object is annotated
//! just before and just after but not in between.

use std::collections::BTreeMap;
use std::io::Write;

use crate::eval::iou;
use crate::io::detections::{BBox, GroundTruthRecord};

/// Minimum overlap for linking boxes across frames and for accepting an
/// existing annotation as covering the interpolated position.
pub const LINK_IOU: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapRow {
    pub video_id: u32,
    pub frame_id: u32,
    pub class_id: u32,
    pub interpolated_box: BBox,
}

/// Coordinate-wise midpoint of two boxes (linear interpolation at the
/// missing frame).
fn interpolate(a: &BBox, b: &BBox) -> BBox {
    BBox::new(
        (a.left + b.left) / 2,
        (a.top + b.top) / 2,
        ((a.width + b.width) / 2).max(1),
        ((a.height + b.height) / 2).max(1),
    )
}

/// For every (video, class) and every frame t with same-class boxes at
/// t-1 and t+1: greedily link boxes across the gap by descending IoU, and
/// flag t when no box there overlaps the linked pair's interpolation.
pub fn audit_annotations(gt: &[GroundTruthRecord]) -> Vec<GapRow> {
    let mut by_group: BTreeMap<(u32, u32), BTreeMap<u32, Vec<BBox>>> = BTreeMap::new();
    for g in gt {
        by_group
            .entry((g.video_id, g.class_id))
            .or_default()
            .entry(g.frame_id)
            .or_default()
            .push(g.bbox);
    }
    let mut gaps = Vec::new();
    for ((video_id, class_id), frames) in &by_group {
        for (&t, _) in frames.iter() {
            let (Some(before), Some(after)) = (frames.get(&t.wrapping_sub(2)), frames.get(&t)) else {
                continue;
            };
            // t is the "after" frame; the candidate missing frame sits
            // between it and t-2
            let missing = t - 1;
            // greedy one-to-one linking by descending IoU
            let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
            for (i, a) in before.iter().enumerate() {
                for (j, b) in after.iter().enumerate() {
                    let overlap = iou(a, b);
                    if overlap >= LINK_IOU {
                        pairs.push((i, j, overlap));
                    }
                }
            }
            pairs.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap_or(std::cmp::Ordering::Equal));
            let mut used_a = vec![false; before.len()];
            let mut used_b = vec![false; after.len()];
            for (i, j, _) in pairs {
                if used_a[i] || used_b[j] {
                    continue;
                }
                used_a[i] = true;
                used_b[j] = true;
                let interp = interpolate(&before[i], &after[j]);
                let covered = frames
                    .get(&missing)
                    .map(|boxes| boxes.iter().any(|b| iou(b, &interp) >= LINK_IOU))
                    .unwrap_or(false);
                if !covered {
                    gaps.push(GapRow {
                        video_id: *video_id,
                        frame_id: missing,
                        class_id: *class_id,
                        interpolated_box: interp,
                    });
                }
            }
        }
    }
    gaps.sort_by_key(|g| (g.video_id, g.frame_id, g.class_id, g.interpolated_box));
    gaps
}

/// Report rows: `video_id,frame_id,class_id,left,top,width,height`.
pub fn write_gap_report<W: Write>(mut w: W, gaps: &[GapRow]) -> std::io::Result<()> {
    for g in gaps {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            g.video_id,
            g.frame_id,
            g.class_id,
            g.interpolated_box.left,
            g.interpolated_box.top,
            g.interpolated_box.width,
            g.interpolated_box.height
        )?;
    }
    Ok(())
}
