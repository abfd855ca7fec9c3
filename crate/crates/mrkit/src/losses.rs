//! Forward (value-only) computation of the training objectives: highlight
//! ranking/contrastive/BCE losses, the one-to-one and anchor-head span
//! losses, auxiliary alignment terms, and the weighted total.
//!
//! No gradients are computed anywhere; the values exist for regression tests
//! and fixture analysis. Probabilities are clamped to
//! `[PROB_EPS, 1 - PROB_EPS]` before every logarithm, so all losses are
//! finite and nonnegative on valid inputs.

use serde::{Deserialize, Serialize};

use crate::detector::{Detection, PROB_EPS};
use crate::error::{Error, Result};
use crate::numerics::{dot, row_norm, sigmoid_scalar};
use crate::saliency::SaliencyVector;
use crate::spans::{centerness, giou, Span};

/// Highest grade on the 0-4 saliency scale.
pub const MAX_GRADE: u8 = 4;

/// Balancing weights for every loss term.
///
/// `l1`/`giou`/`ce`/`centerness` weight the span-regression terms, `iou`
/// weights the predicted-IoU cross entropy of the one-to-one head, and
/// `detr`/`atss`/`hl`/`aux` weight the four groups in the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub l1: f64,
    pub giou: f64,
    pub ce: f64,
    pub centerness: f64,
    pub iou: f64,
    pub detr: f64,
    pub atss: f64,
    pub hl: f64,
    pub aux: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            l1: 10.0,
            giou: 1.0,
            ce: 5.0,
            centerness: 1.0,
            iou: 1.0,
            detr: 1.0,
            atss: 1.0,
            hl: 1.0,
            aux: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l1", self.l1),
            ("giou", self.giou),
            ("ce", self.ce),
            ("centerness", self.centerness),
            ("iou", self.iou),
            ("detr", self.detr),
            ("atss", self.atss),
            ("hl", self.hl),
            ("aux", self.aux),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "LossWeights",
                    format!("{name} must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Per-clip integer grades for a positive video, plus a flag marking the
/// sample as a negative text-video pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaliencySupervision {
    pub grades: Vec<u8>,
    pub negative_pair: bool,
}

impl SaliencySupervision {
    pub fn new(grades: Vec<u8>, negative_pair: bool) -> Result<Self> {
        if let Some(g) = grades.iter().find(|&&g| g > MAX_GRADE) {
            return Err(Error::invalid(
                "SaliencySupervision",
                format!("grades run 0..={MAX_GRADE}, got {g}"),
            ));
        }
        Ok(SaliencySupervision {
            grades,
            negative_pair,
        })
    }

    fn check_len(&self, scores: &SaliencyVector, op: &'static str) -> Result<()> {
        if self.grades.len() != scores.len() {
            return Err(Error::shape(
                op,
                format!("{} grades vs {} scores", self.grades.len(), scores.len()),
            ));
        }
        Ok(())
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Binary cross entropy with a (possibly soft) target in `[0, 1]`.
fn bce(prob: f64, target: f64) -> f64 {
    let p = clamp_prob(prob);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Outcome of a ranking loss; `pairs == 0` flags that no comparable pair
/// existed and the value defaulted to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLoss {
    pub value: f64,
    pub pairs: usize,
}

impl RankingLoss {
    pub fn is_degenerate(&self) -> bool {
        self.pairs == 0
    }
}

/// Margin ranking loss over all cross-grade pairs: the mean hinge
/// `max(0, margin + s_low - s_high)` where the first clip has the strictly
/// higher grade. Deterministic (no pair sampling).
pub fn margin_ranking_loss(
    scores: &SaliencyVector,
    sup: &SaliencySupervision,
    margin: f64,
) -> Result<RankingLoss> {
    sup.check_len(scores, "margin_ranking_loss")?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, &gi) in sup.grades.iter().enumerate() {
        for (j, &gj) in sup.grades.iter().enumerate() {
            if gi > gj {
                total += (margin + scores.get(j) - scores.get(i)).max(0.0);
                pairs += 1;
            }
        }
    }
    Ok(RankingLoss {
        value: if pairs == 0 { 0.0 } else { total / pairs as f64 },
        pairs,
    })
}

/// Rank-contrastive loss: for every grade level `g >= 1`, clips graded at or
/// above `g` are positives and the term is
/// `-log(sum_pos exp(s / t) / sum_all exp(s / t))`; levels without positives
/// are skipped and the remaining terms averaged.
pub fn rank_contrastive_loss(
    scores: &SaliencyVector,
    sup: &SaliencySupervision,
    temperature: f64,
) -> Result<f64> {
    sup.check_len(scores, "rank_contrastive_loss")?;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid(
            "rank_contrastive_loss",
            format!("temperature must be positive, got {temperature}"),
        ));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let scaled: Vec<f64> = scores.scores().iter().map(|s| s / temperature).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    let mut total = 0.0;
    let mut levels = 0usize;
    for level in 1..=MAX_GRADE {
        let numer: f64 = exps
            .iter()
            .zip(&sup.grades)
            .filter(|(_, &g)| g >= level)
            .map(|(e, _)| e)
            .sum();
        if numer == 0.0 {
            continue;
        }
        total -= (numer / denom).ln();
        levels += 1;
    }
    Ok(if levels == 0 { 0.0 } else { total / levels as f64 })
}

/// Binary cross-entropy saliency terms: `(positive, negative)`.
///
/// For a positive pair the first value is the mean BCE of `sigmoid(score)`
/// against `grade >= 1` and the second is zero; for a negative pair all
/// clips carry target zero and contribute to the second value instead.
pub fn saliency_bce(scores: &SaliencyVector, sup: &SaliencySupervision) -> Result<(f64, f64)> {
    sup.check_len(scores, "saliency_bce")?;
    if scores.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = scores.len() as f64;
    if sup.negative_pair {
        let neg = scores
            .scores()
            .iter()
            .map(|&s| bce(sigmoid_scalar(s), 0.0))
            .sum::<f64>()
            / n;
        Ok((0.0, neg))
    } else {
        let pos = scores
            .scores()
            .iter()
            .zip(&sup.grades)
            .map(|(&s, &g)| bce(sigmoid_scalar(s), if g >= 1 { 1.0 } else { 0.0 }))
            .sum::<f64>()
            / n;
        Ok((pos, 0.0))
    }
}

/// Total highlight-detection loss: margin ranking + rank contrastive + both
/// BCE terms.
pub fn highlight_loss(
    scores: &SaliencyVector,
    sup: &SaliencySupervision,
    margin: f64,
    temperature: f64,
) -> Result<f64> {
    let marg = margin_ranking_loss(scores, sup, margin)?;
    let rctl = rank_contrastive_loss(scores, sup, temperature)?;
    let (pos, neg) = saliency_bce(scores, sup)?;
    Ok(marg.value + rctl + pos + neg)
}

/// One matched (detection, ground truth) pair with its realized-IoU target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub det: Detection,
    pub gt: Span,
    pub iou_target: f64,
}

/// Loss of the one-to-one head over its matched pairs: duration-normalized
/// L1 on (center, width), GIoU loss, cross entropy on the match label, and
/// BCE between the predicted IoU and the realized-IoU target. Terms are
/// means over pairs, combined with the `l1`/`giou`/`ce`/`iou` weights.
pub fn detr_loss(pairs: &[MatchedPair], duration: f64, w: &LossWeights) -> f64 {
    assert!(duration > 0.0, "detr_loss needs a positive video duration");
    if pairs.is_empty() {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mut l1 = 0.0;
    let mut giou_loss = 0.0;
    let mut ce = 0.0;
    let mut iou_bce = 0.0;
    for pair in pairs {
        l1 += ((pair.det.span.center() - pair.gt.center()).abs()
            + (pair.det.span.length() - pair.gt.length()).abs())
            / duration;
        giou_loss += 1.0 - giou(pair.det.span, pair.gt);
        ce += -clamp_prob(pair.det.class_prob).ln();
        iou_bce += bce(pair.det.pred_iou, pair.iou_target);
    }
    w.l1 * l1 / n + w.giou * giou_loss / n + w.ce * ce / n + w.iou * iou_bce / n
}

/// One positive anchor with its regression outputs and assigned ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtssSample {
    pub anchor_center: f64,
    pub pred_span: Span,
    pub class_prob: f64,
    pub pred_centerness: f64,
    pub gt: Span,
}

/// Loss of the anchor head over its positive samples: the same L1/GIoU/CE
/// structure plus BCE between the predicted centerness and the target
/// centerness of the anchor location inside its ground truth.
pub fn atss_loss(samples: &[AtssSample], duration: f64, w: &LossWeights) -> f64 {
    assert!(duration > 0.0, "atss_loss needs a positive video duration");
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mut l1 = 0.0;
    let mut giou_loss = 0.0;
    let mut ce = 0.0;
    let mut centerness_bce = 0.0;
    for s in samples {
        l1 += ((s.pred_span.center() - s.gt.center()).abs()
            + (s.pred_span.length() - s.gt.length()).abs())
            / duration;
        giou_loss += 1.0 - giou(s.pred_span, s.gt);
        ce += -clamp_prob(s.class_prob).ln();
        let target = centerness(s.anchor_center, s.gt);
        centerness_bce += bce(s.pred_centerness, target);
    }
    w.l1 * l1 / n + w.giou * giou_loss / n + w.ce * ce / n + w.centerness * centerness_bce / n
}

/// Inputs to the auxiliary loss: per-clip moment logits with in/out-of-moment
/// labels, plus the pooled moment feature and the sentence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxInputs<'a> {
    pub clip_logits: &'a [f64],
    pub in_moment: &'a [bool],
    pub moment_feature: &'a [f64],
    pub sentence: &'a [f64],
}

/// Auxiliary loss: mean BCE separating moment from non-moment clips plus a
/// cosine alignment term `1 - cos(moment, sentence)`.
pub fn aux_loss(inputs: &AuxInputs) -> Result<f64> {
    if inputs.clip_logits.len() != inputs.in_moment.len() {
        return Err(Error::shape(
            "aux_loss",
            format!(
                "{} logits vs {} labels",
                inputs.clip_logits.len(),
                inputs.in_moment.len()
            ),
        ));
    }
    if inputs.moment_feature.len() != inputs.sentence.len() {
        return Err(Error::shape(
            "aux_loss",
            format!(
                "moment feature dim {} vs sentence dim {}",
                inputs.moment_feature.len(),
                inputs.sentence.len()
            ),
        ));
    }
    let bce_term = if inputs.clip_logits.is_empty() {
        0.0
    } else {
        inputs
            .clip_logits
            .iter()
            .zip(inputs.in_moment)
            .map(|(&logit, &label)| bce(sigmoid_scalar(logit), if label { 1.0 } else { 0.0 }))
            .sum::<f64>()
            / inputs.clip_logits.len() as f64
    };
    let nm = row_norm(inputs.moment_feature);
    let ns = row_norm(inputs.sentence);
    if nm == 0.0 || ns == 0.0 {
        return Err(Error::ZeroNorm {
            op: "aux_loss",
            row: 0,
        });
    }
    let cos = dot(inputs.moment_feature, inputs.sentence) / (nm * ns);
    Ok(bce_term + (1.0 - cos))
}

/// The four loss groups entering the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub atss: f64,
    pub detr: f64,
    pub hl: f64,
    pub aux: f64,
}

/// Weighted sum of the four loss groups.
pub fn total_objective(parts: &LossParts, w: &LossWeights) -> f64 {
    w.atss * parts.atss + w.detr * parts.detr + w.hl * parts.hl + w.aux * parts.aux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::DetectionSource;
    use approx::assert_abs_diff_eq;

    fn sal(scores: &[f64]) -> SaliencyVector {
        SaliencyVector::new(scores.to_vec()).unwrap()
    }

    fn sup(grades: &[u8]) -> SaliencySupervision {
        SaliencySupervision::new(grades.to_vec(), false).unwrap()
    }

    fn span(s: f64, e: f64) -> Span {
        Span::new(s, e).unwrap()
    }

    mod margin {
        use super::*;

        #[test]
        fn satisfied_ordering_costs_nothing() {
            let loss =
                margin_ranking_loss(&sal(&[2.0, 1.0, 0.0]), &sup(&[4, 2, 0]), 0.2).unwrap();
            assert_eq!(loss.value, 0.0);
            assert_eq!(loss.pairs, 3);
        }

        #[test]
        fn equal_scores_pay_the_margin() {
            let loss = margin_ranking_loss(&sal(&[0.5, 0.5]), &sup(&[3, 1]), 0.2).unwrap();
            assert_abs_diff_eq!(loss.value, 0.2, epsilon = 1e-15);
            assert_eq!(loss.pairs, 1);
        }

        #[test]
        fn monotone_in_margin() {
            let scores = sal(&[0.1, -0.3, 0.8]);
            let s = sup(&[4, 1, 0]);
            let mut prev = -1.0;
            for i in 0..10 {
                let margin = i as f64 * 0.1;
                let loss = margin_ranking_loss(&scores, &s, margin).unwrap().value;
                assert!(loss >= prev);
                prev = loss;
            }
        }

        #[test]
        fn no_pairs_flags_degenerate() {
            let loss = margin_ranking_loss(&sal(&[0.1, 0.2]), &sup(&[2, 2]), 0.2).unwrap();
            assert_eq!(loss.value, 0.0);
            assert!(loss.is_degenerate());
        }

        #[test]
        fn invariant_under_constant_shift() {
            let s = sup(&[4, 3, 1, 0]);
            let base = sal(&[0.3, -0.2, 0.9, 0.0]);
            let shifted = sal(&[10.3, 9.8, 10.9, 10.0]);
            let a = margin_ranking_loss(&base, &s, 0.2).unwrap().value;
            let b = margin_ranking_loss(&shifted, &s, 0.2).unwrap().value;
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    mod contrastive {
        use super::*;

        #[test]
        fn single_clip_is_free() {
            let loss = rank_contrastive_loss(&sal(&[0.7]), &sup(&[3]), 0.5).unwrap();
            assert_abs_diff_eq!(loss, 0.0, epsilon = 1e-12);
        }

        #[test]
        fn two_clips_equal_scores() {
            // Positives hold half the probability mass at every level.
            let loss = rank_contrastive_loss(&sal(&[1.0, 1.0]), &sup(&[4, 0]), 0.5).unwrap();
            assert_abs_diff_eq!(loss, 2.0f64.ln(), epsilon = 1e-12);
        }

        #[test]
        fn raising_a_positive_score_decreases_loss() {
            let s = sup(&[4, 0, 0]);
            let low = rank_contrastive_loss(&sal(&[0.0, 0.5, -0.2]), &s, 0.5).unwrap();
            let high = rank_contrastive_loss(&sal(&[1.0, 0.5, -0.2]), &s, 0.5).unwrap();
            assert!(high < low);
        }

        #[test]
        fn empty_levels_are_skipped() {
            // Only grades 0 and 2 present: levels 3 and 4 have no positives.
            let loss = rank_contrastive_loss(&sal(&[0.4, -0.1]), &sup(&[2, 0]), 0.5).unwrap();
            assert!(loss.is_finite() && loss >= 0.0);
        }
    }

    mod bce_terms {
        use super::*;

        #[test]
        fn saturated_positive_costs_nothing() {
            let (pos, neg) = saliency_bce(&sal(&[60.0]), &sup(&[4])).unwrap();
            assert!(pos < 1e-9);
            assert_eq!(neg, 0.0);
        }

        #[test]
        fn zero_score_costs_ln_two() {
            let (pos, _) = saliency_bce(&sal(&[0.0]), &sup(&[2])).unwrap();
            assert_abs_diff_eq!(pos, 2.0f64.ln(), epsilon = 1e-12);
        }

        #[test]
        fn negative_pair_swaps_terms() {
            let s = SaliencySupervision::new(vec![0, 0], true).unwrap();
            let (pos, neg) = saliency_bce(&sal(&[0.0, 0.0]), &s).unwrap();
            assert_eq!(pos, 0.0);
            assert_abs_diff_eq!(neg, 2.0f64.ln(), epsilon = 1e-12);
        }
    }

    mod detr {
        use super::*;

        fn pair(det_span: Span, p: f64, pred_iou: f64, gt: Span, target: f64) -> MatchedPair {
            MatchedPair {
                det: Detection::new(det_span, p, pred_iou, DetectionSource::Detr).unwrap(),
                gt,
                iou_target: target,
            }
        }

        #[test]
        fn perfect_pair_costs_almost_nothing() {
            let gt = span(2.0, 6.0);
            let pairs = vec![pair(gt, 1.0, 1.0, gt, 1.0)];
            let loss = detr_loss(&pairs, 10.0, &LossWeights::default());
            // Only the probability clamp contributes.
            assert!(loss < 1e-9, "{loss}");
        }

        #[test]
        fn hand_computed_single_pair() {
            let w = LossWeights::default();
            let gt = span(2.0, 6.0);
            let d = span(3.0, 6.0);
            let pairs = vec![pair(d, 0.8, 0.6, gt, 0.75)];
            let loss = detr_loss(&pairs, 10.0, &w);
            let l1 = ((4.5f64 - 4.0).abs() + (3.0f64 - 4.0).abs()) / 10.0;
            let g = 1.0 - giou(d, gt);
            let ce = -(0.8f64.ln());
            let iou_term = -(0.75 * 0.6f64.ln() + 0.25 * 0.4f64.ln());
            let want = w.l1 * l1 + w.giou * g + w.ce * ce + w.iou * iou_term;
            assert_abs_diff_eq!(loss, want, epsilon = 1e-10);
        }

        #[test]
        fn equals_weighted_sum_of_separate_terms() {
            let gt = span(1.0, 4.0);
            let d = span(0.5, 3.0);
            let pairs = vec![pair(d, 0.9, 0.3, gt, 0.5)];
            let unit = |l1, giou_w, ce, iou| LossWeights {
                l1,
                giou: giou_w,
                ce,
                iou,
                ..LossWeights::default()
            };
            let total = detr_loss(&pairs, 8.0, &unit(10.0, 1.0, 5.0, 1.0));
            let parts = [
                detr_loss(&pairs, 8.0, &unit(10.0, 0.0, 0.0, 0.0)),
                detr_loss(&pairs, 8.0, &unit(0.0, 1.0, 0.0, 0.0)),
                detr_loss(&pairs, 8.0, &unit(0.0, 0.0, 5.0, 0.0)),
                detr_loss(&pairs, 8.0, &unit(0.0, 0.0, 0.0, 1.0)),
            ];
            assert_eq!(total, parts.iter().sum::<f64>());
        }

        #[test]
        fn snapping_to_gt_strictly_decreases() {
            let gt = span(2.0, 6.0);
            let off = vec![pair(span(1.0, 5.0), 0.7, 0.6, gt, 0.5)];
            let on = vec![pair(gt, 0.7, 0.6, gt, 0.5)];
            let w = LossWeights::default();
            assert!(detr_loss(&on, 10.0, &w) < detr_loss(&off, 10.0, &w));
        }
    }

    mod atss {
        use super::*;

        #[test]
        fn perfect_midpoint_sample_is_tiny() {
            let gt = span(2.0, 6.0);
            let s = AtssSample {
                anchor_center: 4.0,
                pred_span: gt,
                class_prob: 1.0,
                pred_centerness: 1.0,
                gt,
            };
            let loss = atss_loss(&[s], 10.0, &LossWeights::default());
            assert!(loss < 1e-9, "{loss}");
        }

        #[test]
        fn midpoint_target_needs_saturated_prediction() {
            let gt = span(0.0, 4.0);
            let base = AtssSample {
                anchor_center: 2.0,
                pred_span: gt,
                class_prob: 1.0,
                pred_centerness: 0.5,
                gt,
            };
            let w = LossWeights::default();
            let half = atss_loss(&[base], 4.0, &w);
            let one = atss_loss(
                &[AtssSample {
                    pred_centerness: 1.0,
                    ..base
                }],
                4.0,
                &w,
            );
            assert!(one < half);
            assert!(one < 1e-9);
        }

        #[test]
        fn hand_computed_two_samples() {
            let w = LossWeights::default();
            let gt = span(0.0, 4.0);
            let samples = [
                AtssSample {
                    anchor_center: 1.0,
                    pred_span: span(0.0, 3.0),
                    class_prob: 0.9,
                    pred_centerness: 0.5,
                    gt,
                },
                AtssSample {
                    anchor_center: 2.0,
                    pred_span: span(1.0, 4.0),
                    class_prob: 0.8,
                    pred_centerness: 0.9,
                    gt,
                },
            ];
            let got = atss_loss(&samples, 8.0, &w);
            let mut l1 = 0.0;
            let mut g = 0.0;
            let mut ce = 0.0;
            let mut cbce = 0.0;
            for s in &samples {
                l1 += ((s.pred_span.center() - gt.center()).abs()
                    + (s.pred_span.length() - gt.length()).abs())
                    / 8.0;
                g += 1.0 - giou(s.pred_span, gt);
                ce += -s.class_prob.ln();
                let t = centerness(s.anchor_center, gt);
                cbce += -(t * s.pred_centerness.ln() + (1.0 - t) * (1.0 - s.pred_centerness).ln());
            }
            let want = (w.l1 * l1 + w.giou * g + w.ce * ce + w.centerness * cbce) / 2.0;
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }

        #[test]
        fn snapping_to_gt_strictly_decreases() {
            let gt = span(2.0, 6.0);
            let base = AtssSample {
                anchor_center: 4.0,
                pred_span: span(3.0, 7.0),
                class_prob: 0.7,
                pred_centerness: 0.8,
                gt,
            };
            let w = LossWeights::default();
            let off = atss_loss(&[base], 10.0, &w);
            let on = atss_loss(
                &[AtssSample {
                    pred_span: gt,
                    ..base
                }],
                10.0,
                &w,
            );
            assert!(on < off);
        }
    }

    mod aux {
        use super::*;

        #[test]
        fn aligned_vectors_have_zero_alignment_term() {
            let v = [0.6, -0.8, 0.0];
            let loss = aux_loss(&AuxInputs {
                clip_logits: &[],
                in_moment: &[],
                moment_feature: &v,
                sentence: &v,
            })
            .unwrap();
            assert_abs_diff_eq!(loss, 0.0, epsilon = 1e-12);
        }

        #[test]
        fn orthogonal_vectors_pay_one() {
            let loss = aux_loss(&AuxInputs {
                clip_logits: &[],
                in_moment: &[],
                moment_feature: &[1.0, 0.0],
                sentence: &[0.0, 1.0],
            })
            .unwrap();
            assert_abs_diff_eq!(loss, 1.0, epsilon = 1e-12);
        }

        #[test]
        fn mixed_instance_matches_hand_computation() {
            let logits = [2.0, -1.0, 0.5];
            let labels = [true, false, true];
            let moment = [1.0, 1.0];
            let sentence = [1.0, 0.0];
            let got = aux_loss(&AuxInputs {
                clip_logits: &logits,
                in_moment: &labels,
                moment_feature: &moment,
                sentence: &sentence,
            })
            .unwrap();
            let bce_sum: f64 = logits
                .iter()
                .zip(labels)
                .map(|(&l, y)| {
                    let p = 1.0 / (1.0 + (-l).exp());
                    if y {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum();
            let cos = 1.0 / 2.0f64.sqrt();
            assert_abs_diff_eq!(got, bce_sum / 3.0 + (1.0 - cos), epsilon = 1e-10);
        }
    }

    mod total {
        use super::*;

        #[test]
        fn zero_parts_give_zero() {
            assert_eq!(
                total_objective(&LossParts::default(), &LossWeights::default()),
                0.0
            );
        }

        #[test]
        fn unit_parts_with_default_weights() {
            let parts = LossParts {
                atss: 1.0,
                detr: 1.0,
                hl: 1.0,
                aux: 1.0,
            };
            assert_eq!(total_objective(&parts, &LossWeights::default()), 4.0);
        }

        #[test]
        fn homogeneous_in_weights() {
            let parts = LossParts {
                atss: 0.3,
                detr: 1.7,
                hl: 0.9,
                aux: 0.2,
            };
            let w = LossWeights::default();
            let doubled = LossWeights {
                detr: 2.0,
                atss: 2.0,
                hl: 2.0,
                aux: 2.0,
                ..w
            };
            assert_abs_diff_eq!(
                total_objective(&parts, &doubled),
                2.0 * total_objective(&parts, &w),
                epsilon = 1e-15
            );
        }
    }
}
