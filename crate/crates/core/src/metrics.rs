//! Detection, classification, and tracking metrics: precision/recall/F1,
//! IoU-matched average precision, and identity-switch counting.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::taxonomy::ClassLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// `P = tp/(tp+fp)`, `R = tp/(tp+fn)`, `F1 = 2PR/(P+R)`; empty denominators
/// yield 0 so sweeps stay total.
pub fn precision_recall_f1(c: &ConfusionCounts) -> (f64, f64, f64) {
    let tp = c.true_positives as f64;
    let fp = c.false_positives as f64;
    let fn_ = c.false_negatives as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredBox {
    pub bbox: BoundingBox,
    pub label: ClassLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtBox {
    pub bbox: BoundingBox,
    pub label: ClassLabel,
}

/// One prediction's fate after matching, in descending-confidence order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFlag {
    /// Index into the original prediction list.
    pub prediction: usize,
    pub confidence: f64,
    pub label: ClassLabel,
    pub is_tp: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMatches {
    pub counts: ConfusionCounts,
    pub ranked: Vec<RankedFlag>,
}

/// Greedy matching within one image: predictions in descending confidence,
/// each taking the unmatched same-label ground truth with the highest IoU at
/// or above the threshold. Leftover predictions are false positives,
/// leftover ground truths false negatives. No ground truth is ever assigned
/// twice.
pub fn match_detections(
    preds: &[PredBox],
    gts: &[GtBox],
    iou_threshold: f64,
) -> Result<DetectionMatches> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidArgument(
            "iou threshold must lie in [0, 1]".into(),
        ));
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .expect("confidences are finite")
            .then(a.cmp(&b))
    });
    let mut gt_taken = vec![false; gts.len()];
    let mut ranked = Vec::with_capacity(preds.len());
    let mut counts = ConfusionCounts::default();
    for p in order {
        let pred = &preds[p];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_taken[g] || gt.label != pred.label {
                continue;
            }
            let overlap = iou(&pred.bbox, &gt.bbox);
            if overlap < iou_threshold {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, current)) => overlap > current,
            };
            if better {
                best = Some((g, overlap));
            }
        }
        let is_tp = match best {
            Some((g, _)) => {
                gt_taken[g] = true;
                counts.true_positives += 1;
                true
            }
            None => {
                counts.false_positives += 1;
                false
            }
        };
        ranked.push(RankedFlag {
            prediction: p,
            confidence: pred.confidence,
            label: pred.label.clone(),
            is_tp,
        });
    }
    counts.false_negatives = gt_taken.iter().filter(|&&taken| !taken).count() as u64;
    Ok(DetectionMatches { counts, ranked })
}

/// All-point interpolated area under the precision-recall curve for one
/// label. `flags` must be ranked by descending confidence; `gt_count` is the
/// number of ground truths for the label. Undefined (None) without ground
/// truths.
pub fn average_precision(flags: &[bool], gt_count: u64) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    if flags.is_empty() {
        return Some(0.0);
    }
    // Precision and recall after each rank.
    let mut precisions = Vec::with_capacity(flags.len());
    let mut recalls = Vec::with_capacity(flags.len());
    let mut tp = 0u64;
    for (rank, &is_tp) in flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
        recalls.push(tp as f64 / gt_count as f64);
    }
    // Interpolate: precision at recall r is the best precision achieved at
    // any recall >= r.
    let mut running_max = 0.0f64;
    let mut interpolated = vec![0.0; flags.len()];
    for i in (0..flags.len()).rev() {
        running_max = running_max.max(precisions[i]);
        interpolated[i] = running_max;
    }
    let mut area = 0.0;
    let mut previous_recall = 0.0;
    for i in 0..flags.len() {
        if recalls[i] > previous_recall {
            area += (recalls[i] - previous_recall) * interpolated[i];
            previous_recall = recalls[i];
        }
    }
    Some(area)
}

/// Accumulates matches across a dataset and reports micro P/R/F1 plus
/// per-label AP and their mean.
#[derive(Debug, Default)]
pub struct DatasetEval {
    counts: ConfusionCounts,
    per_label: BTreeMap<ClassLabel, LabelAccumulator>,
}

#[derive(Debug, Default)]
struct LabelAccumulator {
    flags: Vec<(f64, bool)>,
    gt_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_ap: f64,
    pub per_label_ap: BTreeMap<ClassLabel, f64>,
    pub counts: ConfusionCounts,
}

impl DatasetEval {
    pub fn add_image(&mut self, preds: &[PredBox], gts: &[GtBox], iou_threshold: f64) -> Result<()> {
        let matches = match_detections(preds, gts, iou_threshold)?;
        self.counts.true_positives += matches.counts.true_positives;
        self.counts.false_positives += matches.counts.false_positives;
        self.counts.false_negatives += matches.counts.false_negatives;
        for flag in matches.ranked {
            self.per_label
                .entry(flag.label.clone())
                .or_default()
                .flags
                .push((flag.confidence, flag.is_tp));
        }
        for gt in gts {
            self.per_label.entry(gt.label.clone()).or_default().gt_count += 1;
        }
        Ok(())
    }

    pub fn counts(&self) -> ConfusionCounts {
        self.counts
    }

    /// Per-label AP; labels without any ground truth are excluded.
    pub fn per_label_ap(&self) -> BTreeMap<ClassLabel, f64> {
        self.per_label
            .iter()
            .filter_map(|(label, acc)| {
                let mut flags = acc.flags.clone();
                flags.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("confidences are finite"));
                let ranked: Vec<bool> = flags.iter().map(|&(_, tp)| tp).collect();
                average_precision(&ranked, acc.gt_count).map(|ap| (label.clone(), ap))
            })
            .collect()
    }

    pub fn summary(&self) -> EvalSummary {
        let (precision, recall, f1) = precision_recall_f1(&self.counts);
        let per_label_ap = self.per_label_ap();
        let mean_ap = if per_label_ap.is_empty() {
            0.0
        } else {
            per_label_ap.values().sum::<f64>() / per_label_ap.len() as f64
        };
        EvalSummary {
            precision,
            recall,
            f1,
            mean_ap,
            per_label_ap,
            counts: self.counts,
        }
    }
}

/// Counts frames where the track id bound to a ground-truth identity differs
/// from that identity's previous binding. Inputs are frame-aligned: for each
/// frame, `gt_identities[f][i]` and `track_ids[f][i]` describe the same
/// detection.
pub fn id_switches(gt_identities: &[Vec<u64>], track_ids: &[Vec<u64>]) -> Result<u64> {
    if gt_identities.len() != track_ids.len() {
        return Err(Error::InvalidArgument(format!(
            "misaligned sequences: {} gt frames vs {} predicted frames",
            gt_identities.len(),
            track_ids.len()
        )));
    }
    let mut bindings: BTreeMap<u64, u64> = BTreeMap::new();
    let mut switches = 0;
    for (f, (gts, preds)) in gt_identities.iter().zip(track_ids).enumerate() {
        if gts.len() != preds.len() {
            return Err(Error::InvalidArgument(format!(
                "misaligned detections at frame {f}: {} vs {}",
                gts.len(),
                preds.len()
            )));
        }
        for (&identity, &track) in gts.iter().zip(preds) {
            match bindings.insert(identity, track) {
                Some(previous) if previous != track => switches += 1,
                _ => {}
            }
        }
    }
    Ok(switches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> ClassLabel {
        ClassLabel::new(s).unwrap()
    }

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn pred(bbox: BoundingBox, l: &str, conf: f64) -> PredBox {
        PredBox {
            bbox,
            label: label(l),
            confidence: conf,
        }
    }

    fn gt(bbox: BoundingBox, l: &str) -> GtBox {
        GtBox {
            bbox,
            label: label(l),
        }
    }

    #[test]
    fn prf_examples() {
        let (p, r, f) = precision_recall_f1(&ConfusionCounts {
            true_positives: 10,
            false_positives: 0,
            false_negatives: 0,
        });
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));
        let (p, r, f) = precision_recall_f1(&ConfusionCounts {
            true_positives: 3,
            false_positives: 1,
            false_negatives: 3,
        });
        assert!((p - 0.75).abs() < 1e-12);
        assert!((r - 0.5).abs() < 1e-12);
        assert!((f - 0.6).abs() < 1e-12);
        let (p, r, f) = precision_recall_f1(&ConfusionCounts {
            true_positives: 0,
            false_positives: 5,
            false_negatives: 5,
        });
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn prf_scale_invariance_and_harmonic_mean() {
        for scale in [1u64, 2, 7, 100] {
            let base = ConfusionCounts {
                true_positives: 3,
                false_positives: 2,
                false_negatives: 4,
            };
            let scaled = ConfusionCounts {
                true_positives: base.true_positives * scale,
                false_positives: base.false_positives * scale,
                false_negatives: base.false_negatives * scale,
            };
            assert_eq!(precision_recall_f1(&base), precision_recall_f1(&scaled));
        }
        // F1 equals P and R when they coincide.
        let (p, r, f) = precision_recall_f1(&ConfusionCounts {
            true_positives: 2,
            false_positives: 2,
            false_negatives: 2,
        });
        assert_eq!(p, r);
        assert!((f - p).abs() < 1e-12);
    }

    #[test]
    fn exact_match_is_tp() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let out = match_detections(&[pred(b, "a", 0.9)], &[gt(b, "a")], 0.5).unwrap();
        assert_eq!(out.counts.true_positives, 1);
        assert_eq!(out.counts.false_positives, 0);
        assert_eq!(out.counts.false_negatives, 0);
    }

    #[test]
    fn unmatched_prediction_is_fp() {
        let out = match_detections(&[pred(bb(0.0, 0.0, 1.0, 1.0), "a", 0.9)], &[], 0.5).unwrap();
        assert_eq!(out.counts.false_positives, 1);
    }

    #[test]
    fn label_mismatch_never_matches() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let out = match_detections(&[pred(b, "a", 0.9)], &[gt(b, "b")], 0.5).unwrap();
        assert_eq!(out.counts.true_positives, 0);
        assert_eq!(out.counts.false_positives, 1);
        assert_eq!(out.counts.false_negatives, 1);
    }

    /// Brute force over every injective prediction-to-gt assignment,
    /// maximizing TP count and preferring flags on higher-confidence
    /// predictions among maxima.
    fn oracle_flags(preds: &[PredBox], gts: &[GtBox], thr: f64) -> Vec<bool> {
        let mut order: Vec<usize> = (0..preds.len()).collect();
        order.sort_by(|&a, &b| preds[b].confidence.partial_cmp(&preds[a].confidence).unwrap());
        let feasible = |p: usize, g: usize| {
            preds[p].label == gts[g].label && iou(&preds[p].bbox, &gts[g].bbox) >= thr
        };
        let mut best: Option<Vec<bool>> = None;
        let mut assignment = vec![usize::MAX; preds.len()];
        fn recurse(
            rank: usize,
            order: &[usize],
            feasible: &dyn Fn(usize, usize) -> bool,
            gt_used: &mut Vec<bool>,
            assignment: &mut Vec<usize>,
            best: &mut Option<Vec<bool>>,
        ) {
            if rank == order.len() {
                let flags: Vec<bool> = order
                    .iter()
                    .map(|&p| assignment[p] != usize::MAX)
                    .collect();
                let better = match best {
                    None => true,
                    Some(current) => {
                        let tp_new = flags.iter().filter(|&&f| f).count();
                        let tp_old = current.iter().filter(|&&f| f).count();
                        tp_new > tp_old || (tp_new == tp_old && flags > *current)
                    }
                };
                if better {
                    *best = Some(flags);
                }
                return;
            }
            let p = order[rank];
            for g in 0..gt_used.len() {
                if !gt_used[g] && feasible(p, g) {
                    gt_used[g] = true;
                    assignment[p] = g;
                    recurse(rank + 1, order, feasible, gt_used, assignment, best);
                    assignment[p] = usize::MAX;
                    gt_used[g] = false;
                }
            }
            recurse_skip(rank, order, feasible, gt_used, assignment, best);
        }
        fn recurse_skip(
            rank: usize,
            order: &[usize],
            feasible: &dyn Fn(usize, usize) -> bool,
            gt_used: &mut Vec<bool>,
            assignment: &mut Vec<usize>,
            best: &mut Option<Vec<bool>>,
        ) {
            // Leave this prediction unmatched.
            recurse(rank + 1, order, feasible, gt_used, assignment, best);
        }
        let mut gt_used = vec![false; gts.len()];
        recurse(0, &order, &feasible, &mut gt_used, &mut assignment, &mut best);
        best.unwrap_or_default()
    }

    #[test]
    fn greedy_order_decides_the_fp_and_matches_exhaustive_oracle() {
        // The middle-confidence prediction overlaps both gts; confidence
        // order decides which prediction ends up unmatched.
        let gts = vec![gt(bb(0.0, 0.0, 10.0, 10.0), "a"), gt(bb(20.0, 0.0, 30.0, 10.0), "a")];
        let preds = vec![
            pred(bb(0.0, 0.0, 10.0, 10.0), "a", 0.95),
            pred(bb(1.0, 0.0, 11.0, 10.0), "a", 0.90),
            pred(bb(20.0, 0.0, 30.0, 10.0), "a", 0.85),
        ];
        let out = match_detections(&preds, &gts, 0.5).unwrap();
        let got: Vec<bool> = out.ranked.iter().map(|f| f.is_tp).collect();
        let want = oracle_flags(&preds, &gts, 0.5);
        assert_eq!(got, want);
        assert_eq!(got, vec![true, false, true]);
        assert_eq!(out.counts.true_positives, 2);
        assert_eq!(out.counts.false_positives, 1);
        assert_eq!(out.counts.false_negatives, 0);
    }

    #[test]
    fn ap_trivial_cases() {
        assert_eq!(average_precision(&[true, true], 2), Some(1.0));
        assert_eq!(average_precision(&[false, false], 2), Some(0.0));
        assert_eq!(average_precision(&[], 0), None);
    }

    /// Rank-by-rank summation: walk distinct recall levels and take the best
    /// precision at or beyond each, scanning all ranks every time.
    fn ap_oracle(flags: &[bool], gt_count: u64) -> f64 {
        let n = flags.len();
        let point = |rank: usize| {
            let tp = flags[..=rank].iter().filter(|&&f| f).count() as f64;
            (tp / (rank + 1) as f64, tp / gt_count as f64)
        };
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for rank in 0..n {
            let (_, recall) = point(rank);
            if recall <= prev_recall {
                continue;
            }
            let mut best_precision = 0.0f64;
            for later in 0..n {
                let (p, r) = point(later);
                if r >= recall {
                    best_precision = best_precision.max(p);
                }
            }
            area += (recall - prev_recall) * best_precision;
            prev_recall = recall;
        }
        area
    }

    #[test]
    fn ap_hand_value_matches_oracle() {
        let flags = [true, false, true, false];
        let ap = average_precision(&flags, 2).unwrap();
        assert!((ap - 0.8333).abs() < 1e-4, "{ap}");
        assert!((ap - ap_oracle(&flags, 2)).abs() < 1e-12);
    }

    #[test]
    fn ap_monotone_when_trailing_fp_removed() {
        let flags = [true, false, true, false, false];
        let full = average_precision(&flags, 3).unwrap();
        let trimmed = average_precision(&flags[..4], 3).unwrap();
        assert!(trimmed >= full);
    }

    #[test]
    fn ap_random_inputs_match_oracle() {
        let mut state = 0x1234_5678u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 33
        };
        for _ in 0..200 {
            let n = (next() % 12 + 1) as usize;
            let flags: Vec<bool> = (0..n).map(|_| next() % 2 == 0).collect();
            let tp = flags.iter().filter(|&&f| f).count() as u64;
            let gt_count = tp + next() % 4 + 1;
            let got = average_precision(&flags, gt_count).unwrap();
            let want = ap_oracle(&flags, gt_count);
            assert!((got - want).abs() < 1e-12, "{flags:?} {gt_count}: {got} vs {want}");
        }
    }

    #[test]
    fn id_switch_examples() {
        // Constant binding.
        let gt = vec![vec![1, 2], vec![1, 2], vec![1, 2]];
        let pred = vec![vec![10, 20], vec![10, 20], vec![10, 20]];
        assert_eq!(id_switches(&gt, &pred).unwrap(), 0);
        // One mid-sequence change.
        let pred = vec![vec![10, 20], vec![10, 20], vec![30, 20]];
        assert_eq!(id_switches(&gt, &pred).unwrap(), 1);
        // Misaligned input errors.
        assert!(id_switches(&gt, &pred[..2]).is_err());
        let bad = vec![vec![10], vec![10, 20], vec![30, 20]];
        assert!(id_switches(&gt, &bad).is_err());
    }

    #[test]
    fn gt_never_double_assigned() {
        let g = vec![gt(bb(0.0, 0.0, 10.0, 10.0), "a")];
        let preds = vec![
            pred(bb(0.0, 0.0, 10.0, 10.0), "a", 0.9),
            pred(bb(0.5, 0.0, 10.5, 10.0), "a", 0.8),
        ];
        let out = match_detections(&preds, &g, 0.5).unwrap();
        assert_eq!(out.counts.true_positives, 1);
        assert_eq!(out.counts.false_positives, 1);
    }
}
