//! Detection scoring: IoU matching, per-class average precision, and the
//! mAP@0.5 / mAP@[0.5:0.95] aggregates.
//!
//! Matching is the standard greedy single-match rule: detections ranked by
//! confidence, each consuming the unmatched ground-truth box of highest
//! overlap when that overlap clears the threshold. AP uses all-point
//! interpolation. Classes without ground truth are excluded from the mean.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::io::detections::{BBox, DetectionRecord, GroundTruthRecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no evaluable classes: every class has zero ground-truth boxes")]
    NoEvaluableClasses,
}

/// Intersection over union. Integer intersection/union areas, one final
/// f64 division, so equal inputs always give bit-equal outputs.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.left.max(b.left)).max(0);
    let iy = (a.bottom().min(b.bottom()) - a.top.max(b.top)).max(0);
    let inter = ix * iy;
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Deterministic ranking: confidence descending, ties by box lexicographic
/// order then (video, frame).
pub fn rank_detections(detections: &mut [DetectionRecord]) {
    detections.sort_by(|x, y| {
        y.confidence
            .partial_cmp(&x.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.bbox.cmp(&y.bbox))
            .then_with(|| (x.video_id, x.frame_id).cmp(&(y.video_id, y.frame_id)))
    });
}

/// Per-detection outcome for one class at one IoU threshold, in rank order.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// true = TP (with the matched GT's index into the class GT list)
    pub outcomes: Vec<(bool, Option<usize>)>,
    pub n_gt: usize,
}

/// Greedy matching of one class's detections against its ground truth.
pub fn match_class(
    gt: &[GroundTruthRecord],
    detections: &[DetectionRecord],
    iou_threshold: f64,
    class_id: u32,
) -> MatchResult {
    let class_gt: Vec<(usize, &GroundTruthRecord)> = gt
        .iter()
        .enumerate()
        .filter(|(_, g)| g.class_id == class_id)
        .collect();
    let mut ranked: Vec<DetectionRecord> = detections
        .iter()
        .filter(|d| d.class_id == class_id)
        .cloned()
        .collect();
    rank_detections(&mut ranked);

    // GT indices by (video, frame) for same-frame matching
    let mut by_frame: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (slot, (_, g)) in class_gt.iter().enumerate() {
        by_frame.entry((g.video_id, g.frame_id)).or_default().push(slot);
    }
    let mut taken = vec![false; class_gt.len()];
    let mut outcomes = Vec::with_capacity(ranked.len());
    for det in &ranked {
        let mut best: Option<(usize, f64)> = None;
        if let Some(slots) = by_frame.get(&(det.video_id, det.frame_id)) {
            for &slot in slots {
                if taken[slot] {
                    continue;
                }
                let overlap = iou(&det.bbox, &class_gt[slot].1.bbox);
                if overlap >= iou_threshold {
                    // strictly-greater keeps the earliest GT on exact ties
                    if best.map_or(true, |(_, b)| overlap > b) {
                        best = Some((slot, overlap));
                    }
                }
            }
        }
        match best {
            Some((slot, _)) => {
                taken[slot] = true;
                outcomes.push((true, Some(class_gt[slot].0)));
            }
            None => outcomes.push((false, None)),
        }
    }
    MatchResult {
        outcomes,
        n_gt: class_gt.len(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct APResult {
    pub class_id: u32,
    pub ap: f64,
    /// (recall, precision) after each ranked detection.
    pub curve: Vec<(f64, f64)>,
    pub n_gt: usize,
    pub n_tp: usize,
    pub n_fp: usize,
}

/// All-point interpolated AP: sum over recall steps of the maximum
/// precision at that recall or beyond.
pub fn average_precision(class_id: u32, matches: &MatchResult) -> Option<APResult> {
    if matches.n_gt == 0 {
        return None;
    }
    let n_gt = matches.n_gt as f64;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve = Vec::with_capacity(matches.outcomes.len());
    for &(is_tp, _) in &matches.outcomes {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / n_gt;
        curve.push((recall, precision));
    }
    // sweep right-to-left carrying the running max precision
    let mut ap = 0.0f64;
    let mut max_p = 0.0f64;
    let mut prev_recall = curve.iter().map(|&(r, _)| r).fold(0.0, f64::max);
    for &(recall, precision) in curve.iter().rev() {
        max_p = max_p.max(precision);
        ap += (prev_recall - recall) * max_p;
        prev_recall = recall;
    }
    // the first recall step up from zero
    if let Some(&(first_recall, _)) = curve.first() {
        let max_from_start = curve.iter().map(|&(_, p)| p).fold(0.0, f64::max);
        ap += first_recall * max_from_start;
    }
    Some(APResult {
        class_id,
        ap,
        curve,
        n_gt: matches.n_gt,
        n_tp: tp,
        n_fp: fp,
    })
}

/// Mean over the defined per-class APs.
pub fn mean_average_precision(aps: &[f64]) -> Result<f64, EvalError> {
    if aps.is_empty() {
        return Err(EvalError::NoEvaluableClasses);
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub iou_threshold: f64,
    pub per_class: Vec<APResult>,
    pub map: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// "all-point" interpolation, recorded so reports are self-describing.
    pub interpolation: &'static str,
    pub thresholds: Vec<f64>,
    pub n_gt: usize,
    pub n_detections: usize,
    pub per_threshold: Vec<ThresholdReport>,
    pub map_50: Option<f64>,
    pub map_50_95: Option<f64>,
}

/// COCO-style threshold range 0.50, 0.55, .. 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

pub fn evaluate(
    gt: &[GroundTruthRecord],
    detections: &[DetectionRecord],
    thresholds: &[f64],
) -> Result<EvalReport, EvalError> {
    let mut class_ids: Vec<u32> = gt
        .iter()
        .map(|g| g.class_id)
        .chain(detections.iter().map(|d| d.class_id))
        .collect();
    class_ids.sort_unstable();
    class_ids.dedup();

    let mut per_threshold = Vec::new();
    for &t in thresholds {
        let mut per_class = Vec::new();
        for &c in &class_ids {
            let matches = match_class(gt, detections, t, c);
            if let Some(ap) = average_precision(c, &matches) {
                per_class.push(ap);
            }
        }
        let map = mean_average_precision(&per_class.iter().map(|a| a.ap).collect::<Vec<_>>())?;
        per_threshold.push(ThresholdReport {
            iou_threshold: t,
            per_class,
            map,
        });
    }
    let map_at = |t: f64| {
        per_threshold
            .iter()
            .find(|r| (r.iou_threshold - t).abs() < 1e-9)
            .map(|r| r.map)
    };
    let map_50 = map_at(0.5);
    let map_50_95 = if thresholds.len() == 10 {
        Some(per_threshold.iter().map(|r| r.map).sum::<f64>() / 10.0)
    } else {
        None
    };
    Ok(EvalReport {
        interpolation: "all-point",
        thresholds: thresholds.to_vec(),
        n_gt: gt.len(),
        n_detections: detections.len(),
        per_threshold,
        map_50,
        map_50_95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(video: u32, frame: u32, b: (i64, i64, i64, i64), class: u32) -> GroundTruthRecord {
        GroundTruthRecord {
            video_id: video,
            frame_id: frame,
            bbox: BBox::new(b.0, b.1, b.2, b.3),
            class_id: class,
        }
    }

    fn det(video: u32, frame: u32, b: (i64, i64, i64, i64), class: u32, conf: f64) -> DetectionRecord {
        DetectionRecord {
            video_id: video,
            frame_id: frame,
            bbox: BBox::new(b.0, b.1, b.2, b.3),
            class_id: class,
            confidence: conf,
        }
    }

    #[test]
    fn iou_basics() {
        let a = BBox::new(0, 0, 10, 10);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(20, 20, 5, 5)), 0.0);
        let b = BBox::new(5, 0, 10, 10);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_match_is_tp() {
        let g = vec![gt(1, 1, (0, 0, 10, 10), 1)];
        let d = vec![det(1, 1, (0, 0, 10, 10), 1, 0.9)];
        let m = match_class(&g, &d, 0.5, 1);
        assert_eq!(m.outcomes, vec![(true, Some(0))]);
    }

    #[test]
    fn single_match_rule() {
        let g = vec![gt(1, 1, (0, 0, 10, 10), 1)];
        let d = vec![
            det(1, 1, (0, 0, 10, 10), 1, 0.9),
            det(1, 1, (1, 0, 10, 10), 1, 0.8),
        ];
        let m = match_class(&g, &d, 0.5, 1);
        assert_eq!(m.outcomes[0].0, true);
        assert_eq!(m.outcomes[1].0, false, "second detection on same GT is FP");
    }

    #[test]
    fn detection_without_gt_frame_is_fp() {
        let g = vec![gt(1, 1, (0, 0, 10, 10), 1)];
        let d = vec![det(1, 2, (0, 0, 10, 10), 1, 0.9)];
        let m = match_class(&g, &d, 0.5, 1);
        assert_eq!(m.outcomes[0].0, false);
    }

    #[test]
    fn ap_single_tp_is_one() {
        let m = MatchResult { outcomes: vec![(true, Some(0))], n_gt: 1 };
        assert_eq!(average_precision(1, &m).unwrap().ap, 1.0);
    }

    #[test]
    fn ap_no_detections_is_zero() {
        let m = MatchResult { outcomes: vec![], n_gt: 3 };
        assert_eq!(average_precision(1, &m).unwrap().ap, 0.0);
    }

    #[test]
    fn ap_tp_fp_tp_hand_case() {
        // 2 GT, ranked [TP, FP, TP]: AP = 0.5*1 + 0.5*(2/3) = 5/6
        let m = MatchResult {
            outcomes: vec![(true, Some(0)), (false, None), (true, Some(1))],
            n_gt: 2,
        };
        let ap = average_precision(1, &m).unwrap().ap;
        assert!((ap - 5.0 / 6.0).abs() < 1e-12, "ap={ap}");
    }

    #[test]
    fn ap_undefined_without_gt() {
        let m = MatchResult { outcomes: vec![(false, None)], n_gt: 0 };
        assert!(average_precision(1, &m).is_none());
    }

    #[test]
    fn map_is_arithmetic_mean() {
        assert_eq!(mean_average_precision(&[0.8, 0.6]).unwrap(), 0.7);
        assert_eq!(mean_average_precision(&[0.4]).unwrap(), 0.4);
        assert_eq!(mean_average_precision(&[1.0; 7]).unwrap(), 1.0);
        assert!(mean_average_precision(&[]).is_err());
    }

    #[test]
    fn identical_predictions_score_one() {
        let g: Vec<_> = (0..4).map(|i| gt(1, i + 1, (i as i64 * 20, 0, 10, 10), 1 + i % 2)).collect();
        let d: Vec<_> = g
            .iter()
            .map(|g| det(g.video_id, g.frame_id, (g.bbox.left, g.bbox.top, g.bbox.width, g.bbox.height), g.class_id, 1.0))
            .collect();
        let r = evaluate(&g, &d, &coco_thresholds()).unwrap();
        assert_eq!(r.map_50, Some(1.0));
        assert_eq!(r.map_50_95, Some(1.0));
    }

    #[test]
    fn empty_predictions_score_zero() {
        let g = vec![gt(1, 1, (0, 0, 10, 10), 1)];
        let r = evaluate(&g, &[], &[0.5]).unwrap();
        assert_eq!(r.map_50, Some(0.0));
    }

    #[test]
    fn confidence_rescaling_preserves_ap() {
        let g = vec![gt(1, 1, (0, 0, 10, 10), 1), gt(1, 2, (0, 0, 10, 10), 1)];
        let d = vec![
            det(1, 1, (0, 0, 10, 10), 1, 0.9),
            det(1, 2, (50, 50, 10, 10), 1, 0.8),
            det(1, 2, (0, 0, 10, 10), 1, 0.7),
        ];
        let squashed: Vec<_> = d
            .iter()
            .map(|r| DetectionRecord { confidence: r.confidence * r.confidence, ..r.clone() })
            .collect();
        let a = evaluate(&g, &d, &[0.5]).unwrap().map_50.unwrap();
        let b = evaluate(&g, &squashed, &[0.5]).unwrap().map_50.unwrap();
        assert_eq!(a, b);
    }
}
