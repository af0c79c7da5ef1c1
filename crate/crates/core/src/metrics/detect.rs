//! Box-level detection scoring: IoU, precision/recall curves, and AP.

use serde::{Deserialize, Serialize};

/// One predicted box with a confidence score. Boxes are `[x0, y0, x1, y1]`
/// with exclusive maxima, matching the dataset manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: [f64; 4],
    pub confidence: f64,
}

/// One point on a precision/recall curve, in detection order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
}

/// Intersection over union of two `[x0, y0, x1, y1]` boxes. Degenerate boxes
/// have zero area; two of them overlap nothing.
pub fn box_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area = |r: &[f64; 4]| (r[2] - r[0]).max(0.0) * (r[3] - r[1]).max(0.0);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// Sweeps detections by descending confidence (stable on ties) and greedily
/// matches each to the still-unmatched ground-truth box with the highest
/// IoU at or above `iou_threshold`, lower index winning exact ties. Emits one
/// precision/recall point per detection; recall is 0 when there is no ground
/// truth.
pub fn pr_curve(
    detections: &[Detection],
    ground_truth: &[[f64; 4]],
    iou_threshold: f64,
) -> Vec<PrPoint> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence
            .partial_cmp(&detections[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut matched = vec![false; ground_truth.len()];
    let mut curve = Vec::with_capacity(detections.len());
    let mut tp = 0usize;
    for (rank, &di) in order.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in ground_truth.iter().enumerate() {
            if matched[gi] {
                continue;
            }
            let iou = box_iou(&detections[di].bbox, gt);
            if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            matched[gi] = true;
            tp += 1;
        }
        let seen = rank + 1;
        curve.push(PrPoint {
            precision: tp as f64 / seen as f64,
            recall: if ground_truth.is_empty() {
                0.0
            } else {
                tp as f64 / ground_truth.len() as f64
            },
        });
    }
    curve
}

/// Area under a precision/recall curve as the raw sum of
/// `(recall_n - recall_{n-1}) * precision_n`, with no interpolation and no
/// precision envelope.
pub fn ap(curve: &[PrPoint]) -> f64 {
    let mut total = 0.0;
    let mut prev_recall = 0.0;
    for p in curve {
        total += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    total
}
