//! Hybrid-detector decision logic: 1D anchor grids, adaptive positive-anchor
//! assignment, minimum-cost one-to-one matching with a predicted-IoU cost
//! term, confidence combination, and weighted span fusion.
//!
//! Everything here is pure post-processing over already-scored spans; no
//! learned heads live in this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spans::{giou, iou, Span};

/// Probability clamp applied before logarithms in matching costs.
pub const PROB_EPS: f64 = 1e-12;

/// Which detection head produced a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionSource {
    Atss,
    Detr,
}

/// A scored span prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub span: Span,
    pub class_prob: f64,
    pub pred_iou: f64,
    pub source: DetectionSource,
}

impl Detection {
    pub fn new(span: Span, class_prob: f64, pred_iou: f64, source: DetectionSource) -> Result<Self> {
        for (name, v) in [("class_prob", class_prob), ("pred_iou", pred_iou)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    "Detection::new",
                    format!("{name} must lie in [0, 1], got {v}"),
                ));
            }
        }
        Ok(Detection {
            span,
            class_prob,
            pred_iou,
            source,
        })
    }
}

/// One anchor of a multi-scale 1D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub span: Span,
    pub level: usize,
}

impl Anchor {
    pub fn center(&self) -> f64 {
        self.span.center()
    }
}

/// One anchor scale: a stride in seconds and the anchor width as a multiple
/// of that stride.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorLevel {
    pub stride: f64,
    pub width_multiplier: f64,
}

/// Lays out anchors for every level: centers at `(k + 1/2) * stride` for all
/// centers strictly inside the video, width `stride * width_multiplier`,
/// spans clipped to `[0, num_clips * clip_len]`.
pub fn generate_anchors(
    num_clips: usize,
    clip_len: f64,
    levels: &[AnchorLevel],
) -> Result<Vec<Anchor>> {
    if levels.is_empty() {
        return Err(Error::Empty {
            op: "generate_anchors",
            what: "levels",
        });
    }
    if num_clips == 0 {
        return Err(Error::Empty {
            op: "generate_anchors",
            what: "clips",
        });
    }
    if !(clip_len.is_finite() && clip_len > 0.0) {
        return Err(Error::invalid(
            "generate_anchors",
            format!("clip_len must be positive and finite, got {clip_len}"),
        ));
    }
    let duration = num_clips as f64 * clip_len;
    let mut anchors = Vec::new();
    for (level, spec) in levels.iter().enumerate() {
        if !(spec.stride.is_finite() && spec.stride > 0.0) {
            return Err(Error::invalid(
                "generate_anchors",
                format!("level {level}: stride must be positive, got {}", spec.stride),
            ));
        }
        if !(spec.width_multiplier.is_finite() && spec.width_multiplier > 0.0) {
            return Err(Error::invalid(
                "generate_anchors",
                format!(
                    "level {level}: width multiplier must be positive, got {}",
                    spec.width_multiplier
                ),
            ));
        }
        let half_width = spec.stride * spec.width_multiplier / 2.0;
        let mut k = 0usize;
        loop {
            let center = (k as f64 + 0.5) * spec.stride;
            if center >= duration {
                break;
            }
            let start = (center - half_width).max(0.0);
            let end = (center + half_width).min(duration);
            anchors.push(Anchor {
                span: Span::new(start, end)?,
                level,
            });
            k += 1;
        }
    }
    Ok(anchors)
}

/// Positive anchors per ground-truth span, as indices into the anchor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtssAssignment {
    /// `positives[g]` holds the sorted anchor indices assigned to gt `g`.
    pub positives: Vec<Vec<usize>>,
}

/// Adaptive positive-anchor selection, 1D form.
///
/// For each ground truth: take the `top_k` anchors per level nearest by
/// center distance, threshold that candidate pool at IoU mean plus
/// population std, and keep candidates whose centers lie strictly inside the
/// ground truth. An anchor claimed by several ground truths goes to the one
/// it overlaps most (ties to the earlier index).
pub fn atss_assign(anchors: &[Anchor], gts: &[Span], top_k: usize) -> Result<AtssAssignment> {
    if top_k == 0 {
        return Err(Error::invalid("atss_assign", "top_k must be at least 1"));
    }
    let mut positives = vec![Vec::new(); gts.len()];
    if anchors.is_empty() || gts.is_empty() {
        return Ok(AtssAssignment { positives });
    }
    let num_levels = anchors.iter().map(|a| a.level).max().unwrap_or(0) + 1;
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); num_levels];
    for (idx, anchor) in anchors.iter().enumerate() {
        by_level[anchor.level].push(idx);
    }

    // claim[anchor] = (gt index, iou) of the current owner.
    let mut claim: Vec<Option<(usize, f64)>> = vec![None; anchors.len()];
    for (g, gt) in gts.iter().enumerate() {
        let mut pool: Vec<usize> = Vec::new();
        for level_anchors in &by_level {
            let mut ranked: Vec<usize> = level_anchors.clone();
            ranked.sort_by(|&a, &b| {
                let da = (anchors[a].center() - gt.center()).abs();
                let db = (anchors[b].center() - gt.center()).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
            pool.extend(ranked.into_iter().take(top_k));
        }
        let ious: Vec<f64> = pool.iter().map(|&a| iou(anchors[a].span, *gt)).collect();
        let n = ious.len() as f64;
        let mean = ious.iter().sum::<f64>() / n;
        let var = ious.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let threshold = mean + var.sqrt();
        for (&a, &overlap) in pool.iter().zip(&ious) {
            if overlap >= threshold && gt.contains_strict(anchors[a].center()) {
                let better = match claim[a] {
                    None => true,
                    Some((_, best)) => overlap > best,
                };
                if better {
                    claim[a] = Some((g, overlap));
                }
            }
        }
    }
    for (a, owner) in claim.iter().enumerate() {
        if let Some((g, _)) = owner {
            positives[*g].push(a);
        }
    }
    for list in &mut positives {
        list.sort_unstable();
        list.dedup();
    }
    Ok(AtssAssignment { positives })
}

/// Weights of the matching cost and of the one-to-one head's loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchWeights {
    pub l1: f64,
    pub giou: f64,
    pub ce: f64,
    pub iou: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        MatchWeights {
            l1: 10.0,
            giou: 1.0,
            ce: 5.0,
            iou: 1.0,
        }
    }
}

/// Matching cost between one detection and one ground-truth span.
///
/// Center and width differences are normalized by the video duration; the
/// classification probability is clamped to `PROB_EPS` before the log.
pub fn match_cost(det: &Detection, gt: Span, duration: f64, w: &MatchWeights) -> f64 {
    assert!(duration > 0.0, "match_cost needs a positive video duration");
    let d_center = (det.span.center() - gt.center()).abs() / duration;
    let d_width = (det.span.length() - gt.length()).abs() / duration;
    let p = det.class_prob.max(PROB_EPS);
    w.l1 * (d_center + d_width)
        + w.giou * (1.0 - giou(det.span, gt))
        + w.ce * -p.ln()
        + w.iou * (1.0 - det.pred_iou)
}

/// A one-to-one assignment between detections ("queries") and ground truths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// `(query index, ground-truth index)` pairs sorted by query index.
    pub pairs: Vec<(usize, usize)>,
    /// Query indices left unmatched, sorted.
    pub unmatched_queries: Vec<usize>,
}

/// Tolerance within which two assignment totals count as tied.
const TIE_EPS: f64 = 1e-9;

/// Minimum-total-cost one-to-one matching of `min(|dets|, |gts|)` pairs.
///
/// Among cost-optimal assignments (within `1e-9`), returns the one whose
/// pair list, sorted by query index, is lexicographically smallest.
pub fn hungarian_match(
    dets: &[Detection],
    gts: &[Span],
    duration: f64,
    weights: &MatchWeights,
) -> MatchResult {
    let cost: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| gts.iter().map(|&g| match_cost(d, g, duration, weights)).collect())
        .collect();
    minimum_cost_match(&cost, dets.len(), gts.len())
}

/// Core assignment on an explicit cost matrix (`rows` queries x `cols`
/// ground truths).
pub fn minimum_cost_match(cost: &[Vec<f64>], rows: usize, cols: usize) -> MatchResult {
    let k = rows.min(cols);
    if k == 0 {
        return MatchResult {
            pairs: Vec::new(),
            unmatched_queries: (0..rows).collect(),
        };
    }
    let optimum = solve_assignment(cost, rows, cols, &[]);

    // Fix pairs greedily in ascending (query, gt) order; a candidate is kept
    // when some completion still reaches the optimal total.
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    while fixed.len() < k {
        let mut chosen = None;
        'candidates: for q in 0..rows {
            if fixed.iter().any(|&(fq, _)| fq == q) {
                continue;
            }
            for g in 0..cols {
                if fixed.iter().any(|&(_, fg)| fg == g) {
                    continue;
                }
                let mut trial = fixed.clone();
                trial.push((q, g));
                let completion = solve_assignment(cost, rows, cols, &trial);
                let total = trial.iter().map(|&(i, j)| cost[i][j]).sum::<f64>() + completion;
                if total <= optimum + TIE_EPS {
                    chosen = Some((q, g));
                    break 'candidates;
                }
            }
        }
        let (q, g) = chosen.expect("an optimal completion always exists");
        fixed.push((q, g));
    }
    fixed.sort_unstable();
    let matched: Vec<usize> = fixed.iter().map(|&(q, _)| q).collect();
    MatchResult {
        unmatched_queries: (0..rows).filter(|q| !matched.contains(q)).collect(),
        pairs: fixed,
    }
}

/// Optimal assignment total over all pairs not already fixed.
///
/// `fixed` pairs remove their row and column from the subproblem; the
/// returned value excludes their cost.
fn solve_assignment(cost: &[Vec<f64>], rows: usize, cols: usize, fixed: &[(usize, usize)]) -> f64 {
    let free_rows: Vec<usize> = (0..rows)
        .filter(|q| !fixed.iter().any(|&(fq, _)| fq == *q))
        .collect();
    let free_cols: Vec<usize> = (0..cols)
        .filter(|g| !fixed.iter().any(|&(_, fg)| fg == *g))
        .collect();
    let k = rows.min(cols) - fixed.len();
    if k == 0 {
        return 0.0;
    }
    // Orient so rows are the smaller side; every row then gets matched.
    let transpose = free_rows.len() > free_cols.len();
    let (side_a, side_b) = if transpose {
        (&free_cols, &free_rows)
    } else {
        (&free_rows, &free_cols)
    };
    let n = side_a.len();
    let m = side_b.len();
    let at = |i: usize, j: usize| -> f64 {
        if transpose {
            cost[side_b[j]][side_a[i]]
        } else {
            cost[side_a[i]][side_b[j]]
        }
    };

    // Shortest-augmenting-path assignment with potentials (1-indexed).
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // row matched to column j, 0 = none
    for i in 1..=n {
        let mut j0 = 0usize;
        matched_row[0] = i;
        let mut min_to = vec![inf; m + 1];
        let mut prev = vec![0usize; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    prev[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = prev[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=m {
        if matched_row[j] != 0 {
            total += at(matched_row[j] - 1, j - 1);
        }
    }
    total
}

/// Combined detection confidence: `p^alpha * pred_iou^(1 - alpha)`, with the
/// convention `0^0 = 1`.
pub fn combined_confidence(p: f64, pred_iou: f64, alpha: f64) -> f64 {
    p.powf(alpha) * pred_iou.powf(1.0 - alpha)
}

/// Number of source heads assumed by the fusion score scaling.
pub const FUSION_SOURCES: usize = 2;

/// Weighted fusion of overlapping detections.
///
/// Detections are processed in descending `class_prob` order; each one joins
/// the existing cluster whose current fused span overlaps it most (requiring
/// IoU at or above `iou_cluster_threshold`) or starts a new cluster. A
/// cluster's fused span is the score-weighted mean of member endpoints; its
/// fused score is the mean member score scaled by `min(T, M) / T` with `M`
/// the cluster size and `T = FUSION_SOURCES`. Output is sorted by fused
/// score descending.
pub fn weighted_fuse(dets: &[Detection], iou_cluster_threshold: f64) -> Vec<Detection> {
    struct Cluster {
        members: Vec<Detection>,
        fused_span: Span,
    }

    impl Cluster {
        fn refuse(&mut self) {
            let score_sum: f64 = self.members.iter().map(|d| d.class_prob).sum();
            let (start, end) = if score_sum > 0.0 {
                (
                    self.members
                        .iter()
                        .map(|d| d.class_prob * d.span.start())
                        .sum::<f64>()
                        / score_sum,
                    self.members
                        .iter()
                        .map(|d| d.class_prob * d.span.end())
                        .sum::<f64>()
                        / score_sum,
                )
            } else {
                // All-zero scores: fall back to the plain mean.
                let n = self.members.len() as f64;
                (
                    self.members.iter().map(|d| d.span.start()).sum::<f64>() / n,
                    self.members.iter().map(|d| d.span.end()).sum::<f64>() / n,
                )
            };
            self.fused_span = Span::new(start.max(0.0), end.max(start.max(0.0)))
                .expect("weighted means of valid spans stay valid");
        }
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .class_prob
            .partial_cmp(&dets[a].class_prob)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for idx in order {
        let det = dets[idx];
        let mut best: Option<(usize, f64)> = None;
        for (c, cluster) in clusters.iter().enumerate() {
            let overlap = iou(det.span, cluster.fused_span);
            if overlap >= iou_cluster_threshold {
                let better = match best {
                    None => true,
                    Some((_, b)) => overlap > b,
                };
                if better {
                    best = Some((c, overlap));
                }
            }
        }
        match best {
            Some((c, _)) => {
                clusters[c].members.push(det);
                clusters[c].refuse();
            }
            None => {
                let mut cluster = Cluster {
                    members: vec![det],
                    fused_span: det.span,
                };
                cluster.refuse();
                clusters.push(cluster);
            }
        }
    }

    let mut fused: Vec<Detection> = clusters
        .into_iter()
        .map(|cluster| {
            let m = cluster.members.len();
            let mean_score =
                cluster.members.iter().map(|d| d.class_prob).sum::<f64>() / m as f64;
            let scale = m.min(FUSION_SOURCES) as f64 / FUSION_SOURCES as f64;
            let score_sum: f64 = cluster.members.iter().map(|d| d.class_prob).sum();
            let pred_iou = if score_sum > 0.0 {
                cluster
                    .members
                    .iter()
                    .map(|d| d.class_prob * d.pred_iou)
                    .sum::<f64>()
                    / score_sum
            } else {
                cluster.members.iter().map(|d| d.pred_iou).sum::<f64>() / m as f64
            };
            // Highest-scored member decides the source tag.
            let source = cluster
                .members
                .iter()
                .max_by(|a, b| a.class_prob.partial_cmp(&b.class_prob).unwrap())
                .map(|d| d.source)
                .unwrap_or(DetectionSource::Atss);
            Detection {
                span: cluster.fused_span,
                class_prob: mean_score * scale,
                pred_iou,
                source,
            }
        })
        .collect();
    fused.sort_by(|a, b| {
        b.class_prob
            .partial_cmp(&a.class_prob)
            .unwrap()
            .then(a.span.start().partial_cmp(&b.span.start()).unwrap())
            .then(a.span.end().partial_cmp(&b.span.end()).unwrap())
    });
    fused
}

/// Scores every anchor against per-clip detection and IoU logits: an
/// anchor's probabilities are the sigmoids of the mean logits over the clips
/// whose midpoints fall inside it. Anchors covering no clip midpoint are
/// dropped.
pub fn score_anchors(
    anchors: &[Anchor],
    num_clips: usize,
    clip_len: f64,
    detection_logits: &[f64],
    iou_logits: &[f64],
) -> Result<Vec<Detection>> {
    if detection_logits.len() != num_clips || iou_logits.len() != num_clips {
        return Err(Error::shape(
            "score_anchors",
            format!(
                "{num_clips} clips but {} detection and {} iou logits",
                detection_logits.len(),
                iou_logits.len()
            ),
        ));
    }
    let mut out = Vec::with_capacity(anchors.len());
    for anchor in anchors {
        let mut det_sum = 0.0;
        let mut iou_sum = 0.0;
        let mut count = 0usize;
        for clip in 0..num_clips {
            let midpoint = (clip as f64 + 0.5) * clip_len;
            if anchor.span.contains(midpoint) {
                det_sum += detection_logits[clip];
                iou_sum += iou_logits[clip];
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let p = crate::numerics::sigmoid_scalar(det_sum / count as f64);
        let pred_iou = crate::numerics::sigmoid_scalar(iou_sum / count as f64);
        out.push(Detection {
            span: anchor.span,
            class_prob: p,
            pred_iou,
            source: DetectionSource::Atss,
        });
    }
    Ok(out)
}
