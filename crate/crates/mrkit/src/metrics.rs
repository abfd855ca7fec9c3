//! Benchmark evaluation: moment-retrieval recall and average precision,
//! mean IoU, and highlight-detection mAP / HIT@1.
//!
//! All metrics depend only on score rankings, so any strictly monotone
//! transform of prediction scores leaves them unchanged. Queries are paired
//! by id and aggregated in sorted-id order, which makes every metric exactly
//! invariant under permutations of the input lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::spans::{iou, Span};

/// One query's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub qid: String,
    pub windows: Vec<Span>,
    pub grades: Option<Vec<u8>>,
}

/// One span prediction with its ranking score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredWindow {
    pub span: Span,
    pub score: f64,
}

/// One query's predictions: spans ranked by descending score, plus optional
/// per-clip saliency scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub qid: String,
    pub windows: Vec<ScoredWindow>,
    pub saliency: Option<Vec<f64>>,
}

impl Prediction {
    /// Restores the descending-score invariant (stable for ties).
    pub fn sort_windows(&mut self) {
        self.windows
            .sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    }
}

fn paired<'a>(
    gts: &'a [GroundTruth],
    preds: &'a [Prediction],
) -> Vec<(&'a GroundTruth, Option<&'a Prediction>)> {
    let by_qid: BTreeMap<&str, &Prediction> =
        preds.iter().map(|p| (p.qid.as_str(), p)).collect();
    let mut sorted: Vec<&GroundTruth> = gts.iter().collect();
    sorted.sort_by(|a, b| a.qid.cmp(&b.qid));
    sorted
        .into_iter()
        .map(|gt| (gt, by_qid.get(gt.qid.as_str()).copied()))
        .collect()
}

fn best_iou(span: Span, windows: &[Span]) -> f64 {
    windows
        .iter()
        .map(|&w| iou(span, w))
        .fold(0.0, f64::max)
}

/// Fraction of queries whose top-ranked span reaches the IoU threshold
/// against at least one ground-truth window. Queries without predictions
/// count as misses.
pub fn recall_at_1(gts: &[GroundTruth], preds: &[Prediction], iou_threshold: f64) -> f64 {
    let pairs = paired(gts, preds);
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs
        .iter()
        .filter(|(gt, pred)| {
            pred.and_then(|p| p.windows.first())
                .map(|top| best_iou(top.span, &gt.windows) >= iou_threshold)
                .unwrap_or(false)
        })
        .count();
    hits as f64 / pairs.len() as f64
}

/// Detection average precision for one query at one IoU threshold.
///
/// Predictions are taken in ranked order and greedily matched to the
/// still-unmatched ground-truth window of highest IoU at or above the
/// threshold. The result is the exact area under the precision-recall step
/// curve, computed as the sum of precisions at true positives divided by
/// the number of ground truths.
pub fn average_precision(
    gt_windows: &[Span],
    ranked: &[ScoredWindow],
    iou_threshold: f64,
) -> f64 {
    if gt_windows.is_empty() {
        return 0.0;
    }
    let mut matched = vec![false; gt_windows.len()];
    let mut true_positives = 0usize;
    let mut precision_sum = 0.0;
    for (rank, pred) in ranked.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (g, &window) in gt_windows.iter().enumerate() {
            if matched[g] {
                continue;
            }
            let overlap = iou(pred.span, window);
            if overlap >= iou_threshold {
                let better = match best {
                    None => true,
                    Some((_, b)) => overlap > b,
                };
                if better {
                    best = Some((g, overlap));
                }
            }
        }
        if let Some((g, _)) = best {
            matched[g] = true;
            true_positives += 1;
            precision_sum += true_positives as f64 / (rank + 1) as f64;
        }
    }
    precision_sum / gt_windows.len() as f64
}

/// Mean over queries of per-query AP at one IoU threshold.
pub fn mean_average_precision(
    gts: &[GroundTruth],
    preds: &[Prediction],
    iou_threshold: f64,
) -> f64 {
    let pairs = paired(gts, preds);
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|(gt, pred)| {
            let empty: &[ScoredWindow] = &[];
            let ranked = pred.map(|p| p.windows.as_slice()).unwrap_or(empty);
            average_precision(&gt.windows, ranked, iou_threshold)
        })
        .sum();
    total / pairs.len() as f64
}

/// The standard threshold sweep 0.5, 0.55, ..., 0.95.
pub fn default_map_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Mean of [`mean_average_precision`] over a threshold sweep.
pub fn map_avg(gts: &[GroundTruth], preds: &[Prediction], thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    let total: f64 = thresholds
        .iter()
        .map(|&t| mean_average_precision(gts, preds, t))
        .sum();
    total / thresholds.len() as f64
}

/// Mean over queries of the IoU between the top-ranked span and its
/// best-overlapping ground-truth window.
pub fn mean_iou(gts: &[GroundTruth], preds: &[Prediction]) -> f64 {
    let pairs = paired(gts, preds);
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|(gt, pred)| {
            pred.and_then(|p| p.windows.first())
                .map(|top| best_iou(top.span, &gt.windows))
                .unwrap_or(0.0)
        })
        .sum();
    total / pairs.len() as f64
}

/// Highlight-detection result over a set of videos; videos without a single
/// positive clip are skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighlightResult {
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Ranks clips by predicted saliency (ties to the earlier clip index).
fn rank_clips(saliency: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..saliency.len()).collect();
    order.sort_by(|&a, &b| saliency[b].partial_cmp(&saliency[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Mean over videos of the average precision of the saliency-ranked clip
/// list, with clips graded at or above `positive_grade_threshold` as
/// positives.
pub fn hd_map(
    gts: &[GroundTruth],
    preds: &[Prediction],
    positive_grade_threshold: u8,
) -> HighlightResult {
    per_video_metric(gts, preds, positive_grade_threshold, |grades, saliency, thr| {
        let order = rank_clips(saliency);
        let total_pos = grades.iter().filter(|&&g| g >= thr).count();
        let mut tp = 0usize;
        let mut precision_sum = 0.0;
        for (rank, &clip) in order.iter().enumerate() {
            if grades[clip] >= thr {
                tp += 1;
                precision_sum += tp as f64 / (rank + 1) as f64;
            }
        }
        precision_sum / total_pos as f64
    })
}

/// Fraction of videos whose single top-scored clip is a positive.
pub fn hit_at_1(
    gts: &[GroundTruth],
    preds: &[Prediction],
    positive_grade_threshold: u8,
) -> HighlightResult {
    per_video_metric(gts, preds, positive_grade_threshold, |grades, saliency, thr| {
        let top = rank_clips(saliency)[0];
        if grades[top] >= thr {
            1.0
        } else {
            0.0
        }
    })
}

fn per_video_metric(
    gts: &[GroundTruth],
    preds: &[Prediction],
    threshold: u8,
    metric: impl Fn(&[u8], &[f64], u8) -> f64,
) -> HighlightResult {
    let mut total = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (gt, pred) in paired(gts, preds) {
        let grades = match &gt.grades {
            Some(g) if !g.is_empty() => g,
            _ => {
                skipped += 1;
                continue;
            }
        };
        if !grades.iter().any(|&g| g >= threshold) {
            skipped += 1;
            continue;
        }
        let saliency = match pred.and_then(|p| p.saliency.as_ref()) {
            Some(s) if s.len() == grades.len() => s,
            _ => {
                skipped += 1;
                continue;
            }
        };
        total += metric(grades, saliency, threshold);
        evaluated += 1;
    }
    HighlightResult {
        value: if evaluated == 0 {
            0.0
        } else {
            total / evaluated as f64
        },
        evaluated,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn span(s: f64, e: f64) -> Span {
        Span::new(s, e).unwrap()
    }

    fn gt(qid: &str, windows: &[(f64, f64)]) -> GroundTruth {
        GroundTruth {
            qid: qid.into(),
            windows: windows.iter().map(|&(s, e)| span(s, e)).collect(),
            grades: None,
        }
    }

    fn pred(qid: &str, windows: &[(f64, f64, f64)]) -> Prediction {
        Prediction {
            qid: qid.into(),
            windows: windows
                .iter()
                .map(|&(s, e, score)| ScoredWindow {
                    span: span(s, e),
                    score,
                })
                .collect(),
            saliency: None,
        }
    }

    mod recall {
        use super::*;

        #[test]
        fn exact_top_prediction_hits() {
            let gts = [gt("a", &[(0.0, 4.0)])];
            let preds = [pred("a", &[(0.0, 4.0, 0.9)])];
            assert_eq!(recall_at_1(&gts, &preds, 0.7), 1.0);
        }

        #[test]
        fn threshold_cuts_partial_overlap() {
            // IoU 0.6 between [0,6] and [0,10].
            let gts = [gt("a", &[(0.0, 10.0)])];
            let preds = [pred("a", &[(0.0, 6.0, 0.9)])];
            assert_eq!(recall_at_1(&gts, &preds, 0.5), 1.0);
            assert_eq!(recall_at_1(&gts, &preds, 0.7), 0.0);
        }

        #[test]
        fn averages_over_queries_and_counts_missing_as_miss() {
            let gts = [gt("a", &[(0.0, 4.0)]), gt("b", &[(0.0, 4.0)])];
            let preds = [pred("a", &[(0.0, 4.0, 0.9)])];
            assert_eq!(recall_at_1(&gts, &preds, 0.5), 0.5);
        }

        #[test]
        fn monotone_nonincreasing_in_threshold() {
            let gts = [gt("a", &[(0.0, 10.0)]), gt("b", &[(2.0, 8.0)])];
            let preds = [
                pred("a", &[(1.0, 9.0, 0.9)]),
                pred("b", &[(2.0, 6.0, 0.8)]),
            ];
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let thr = i as f64 / 20.0;
                let r = recall_at_1(&gts, &preds, thr);
                assert!(r <= prev);
                prev = r;
            }
        }
    }

    mod ap {
        use super::*;

        fn sw(s: f64, e: f64, score: f64) -> ScoredWindow {
            ScoredWindow {
                span: span(s, e),
                score,
            }
        }

        #[test]
        fn single_correct_prediction() {
            let ap = average_precision(&[span(0.0, 4.0)], &[sw(0.0, 4.0, 0.9)], 0.5);
            assert_eq!(ap, 1.0);
        }

        #[test]
        fn threshold_straddle() {
            // IoU 0.6 against the ground truth.
            let gt_w = [span(0.0, 10.0)];
            let ranked = [sw(0.0, 6.0, 0.9)];
            assert_eq!(average_precision(&gt_w, &ranked, 0.5), 1.0);
            assert_eq!(average_precision(&gt_w, &ranked, 0.75), 0.0);
        }

        #[test]
        fn hit_miss_hit_gives_five_sixths() {
            let gt_w = [span(0.0, 4.0), span(10.0, 14.0)];
            let ranked = [
                sw(0.0, 4.0, 0.9),
                sw(20.0, 24.0, 0.8),
                sw(10.0, 14.0, 0.7),
            ];
            let ap = average_precision(&gt_w, &ranked, 0.5);
            assert_abs_diff_eq!(ap, 5.0 / 6.0, epsilon = 1e-12);
        }

        #[test]
        fn duplicate_predictions_count_once() {
            let gt_w = [span(0.0, 4.0)];
            let ranked = [sw(0.0, 4.0, 0.9), sw(0.0, 4.0, 0.8)];
            assert_eq!(average_precision(&gt_w, &ranked, 0.5), 1.0);
        }
    }

    mod miou {
        use super::*;

        #[test]
        fn perfect_and_disjoint() {
            let gts = [gt("a", &[(0.0, 4.0)])];
            assert_eq!(mean_iou(&gts, &[pred("a", &[(0.0, 4.0, 1.0)])]), 1.0);
            assert_eq!(mean_iou(&gts, &[pred("a", &[(6.0, 8.0, 1.0)])]), 0.0);
        }

        #[test]
        fn partial_overlap_fixture() {
            let gts = [gt("a", &[(0.0, 4.0)])];
            let preds = [pred("a", &[(2.0, 6.0, 1.0)])];
            assert_abs_diff_eq!(mean_iou(&gts, &preds), 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    mod highlight {
        use super::*;

        fn hd_gt(qid: &str, grades: &[u8]) -> GroundTruth {
            GroundTruth {
                qid: qid.into(),
                windows: vec![],
                grades: Some(grades.to_vec()),
            }
        }

        fn hd_pred(qid: &str, saliency: &[f64]) -> Prediction {
            Prediction {
                qid: qid.into(),
                windows: vec![],
                saliency: Some(saliency.to_vec()),
            }
        }

        #[test]
        fn perfect_ordering_scores_one() {
            let gts = [hd_gt("a", &[4, 2, 0, 1])];
            let preds = [hd_pred("a", &[0.9, 0.5, 0.1, 0.3])];
            let result = hd_map(&gts, &preds, 4);
            assert_eq!(result.value, 1.0);
            assert_eq!(result.evaluated, 1);
        }

        #[test]
        fn reversed_single_positive() {
            let gts = [hd_gt("a", &[4, 0, 0, 0])];
            let preds = [hd_pred("a", &[0.1, 0.2, 0.3, 0.4])];
            let result = hd_map(&gts, &preds, 4);
            assert_abs_diff_eq!(result.value, 0.25, epsilon = 1e-12);
        }

        #[test]
        fn all_positive_is_order_free() {
            let gts = [hd_gt("a", &[4, 4, 4])];
            let preds = [hd_pred("a", &[0.1, 0.9, 0.5])];
            assert_eq!(hd_map(&gts, &preds, 4).value, 1.0);
        }

        #[test]
        fn videos_without_positives_are_skipped() {
            let gts = [hd_gt("a", &[4, 0]), hd_gt("b", &[2, 1])];
            let preds = [hd_pred("a", &[0.9, 0.1]), hd_pred("b", &[0.9, 0.1])];
            let result = hd_map(&gts, &preds, 4);
            assert_eq!(result.evaluated, 1);
            assert_eq!(result.skipped, 1);
            assert_eq!(result.value, 1.0);
        }

        #[test]
        fn hit_at_one_cases() {
            let gts = [hd_gt("a", &[4, 0]), hd_gt("b", &[0, 4])];
            let hit = [hd_pred("a", &[0.9, 0.1]), hd_pred("b", &[0.9, 0.1])];
            let result = hit_at_1(&gts, &hit, 4);
            assert_eq!(result.value, 0.5);
            // Ties break toward the earlier clip.
            let tied = [hd_pred("a", &[0.5, 0.5]), hd_pred("b", &[0.5, 0.5])];
            let result = hit_at_1(&gts, &tied, 4);
            assert_eq!(result.value, 0.5);
        }
    }

    #[test]
    fn metrics_ignore_monotone_score_transforms() {
        let gts = [
            gt("a", &[(0.0, 4.0), (8.0, 12.0)]),
            gt("b", &[(2.0, 6.0)]),
        ];
        let base = [
            pred("a", &[(0.0, 4.0, 0.9), (7.0, 12.0, 0.5), (1.0, 3.0, 0.2)]),
            pred("b", &[(2.0, 5.0, 0.7), (0.0, 6.0, 0.4)]),
        ];
        let transformed: Vec<Prediction> = base
            .iter()
            .map(|p| Prediction {
                qid: p.qid.clone(),
                windows: p
                    .windows
                    .iter()
                    .map(|w| ScoredWindow {
                        span: w.span,
                        score: (3.0 * w.score + 1.0).tanh(),
                    })
                    .collect(),
                saliency: None,
            })
            .collect();
        for thr in [0.3, 0.5, 0.7] {
            assert_eq!(
                recall_at_1(&gts, &base, thr),
                recall_at_1(&gts, &transformed, thr)
            );
            assert_eq!(
                mean_average_precision(&gts, &base, thr),
                mean_average_precision(&gts, &transformed, thr)
            );
        }
        assert_eq!(mean_iou(&gts, &base), mean_iou(&gts, &transformed));
    }

    #[test]
    fn metrics_invariant_under_query_permutation() {
        let gts = [
            gt("a", &[(0.0, 4.0)]),
            gt("b", &[(2.0, 6.0)]),
            gt("c", &[(1.0, 3.0)]),
        ];
        let preds = [
            pred("a", &[(0.0, 4.0, 0.9)]),
            pred("b", &[(3.0, 6.0, 0.8)]),
            pred("c", &[(5.0, 7.0, 0.7)]),
        ];
        let gts_perm = [gts[2].clone(), gts[0].clone(), gts[1].clone()];
        let preds_perm = [preds[1].clone(), preds[2].clone(), preds[0].clone()];
        for thr in [0.5, 0.7] {
            assert_eq!(
                recall_at_1(&gts, &preds, thr),
                recall_at_1(&gts_perm, &preds_perm, thr)
            );
            assert_eq!(
                mean_average_precision(&gts, &preds, thr),
                mean_average_precision(&gts_perm, &preds_perm, thr)
            );
        }
        assert_eq!(mean_iou(&gts, &preds), mean_iou(&gts_perm, &preds_perm));
    }
}
