//! Command-line pipeline: `annotate`, `infer`, `fuse`, `score-losses`,
//! `eval`, and `synth`.
//!
//! Exit codes: 0 on success, 2 for input/format problems, 3 for semantic
//! problems (degenerate records, query-id mismatches). Commands that map
//! over records run them in parallel when `--threads`/`MRKIT_THREADS` asks
//! for it; results are collected in input order, so the output bytes do not
//! depend on the worker count.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::annotate::{annotate, AnnotationRecord, EmbeddingRecord};
use crate::config::Config;
use crate::detector::{
    combined_confidence, generate_anchors, hungarian_match, score_anchors, weighted_fuse,
    Detection, DetectionSource, MatchWeights,
};
use crate::error::{Error, Result};
use crate::io::{
    annotation_to_ground_truth, read_annotations, read_embeddings, read_predictions,
    synth_fixtures, write_annotations, write_predictions, SynthConfig,
};
use crate::losses::{
    atss_loss, aux_loss, detr_loss, margin_ranking_loss, rank_contrastive_loss,
    saliency_bce, total_objective, AtssSample, AuxInputs, LossParts, MatchedPair,
    SaliencySupervision,
};
use crate::metrics::{
    hd_map, hit_at_1, map_avg, mean_average_precision, mean_iou, recall_at_1, GroundTruth,
    Prediction, ScoredWindow,
};
use crate::saliency::{forward, GateAxis, SaliencyModel, SaliencyVector};
use crate::spans::{centerness, iou};

#[derive(Debug, Parser)]
#[command(
    name = "mrkit",
    version,
    about = "Moment-retrieval and highlight-detection toolkit over precomputed embeddings"
)]
struct Cli {
    /// Optional JSON config file; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for record-parallel stages (0 or unset: all cores).
    #[arg(long, global = true, env = "MRKIT_THREADS", value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GateAxisArg {
    Video,
    Text,
}

impl From<GateAxisArg> for GateAxis {
    fn from(arg: GateAxisArg) -> Self {
        match arg {
            GateAxisArg::Video => GateAxis::Video,
            GateAxisArg::Text => GateAxis::Text,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annotate embeddings into relevant windows and saliency grades.
    Annotate(AnnotateArgs),
    /// Run the saliency forward chain and detector over embeddings.
    Infer(InferArgs),
    /// Fuse two prediction files with weighted span fusion.
    Fuse(FuseArgs),
    /// Compute forward loss values for predictions against ground truth.
    ScoreLosses(ScoreLossesArgs),
    /// Evaluate predictions against ground truth.
    Eval(EvalArgs),
    /// Generate deterministic synthetic fixtures.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Shortest clip run kept as a window [default: 1].
    #[arg(long, value_name = "N")]
    min_run: Option<usize>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long, value_name = "FILE")]
    embeddings: PathBuf,
    /// Weights manifest (JSON) with its binary blob alongside.
    #[arg(long, value_name = "FILE")]
    weights: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Saliency gate axis in cross attention [default: video].
    #[arg(long, value_enum, value_name = "AXIS")]
    gate_axis: Option<GateAxisArg>,
    /// Confidence exponent between classification and IoU [default: 0.5].
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    /// Fusion IoU threshold [default: 0.7].
    #[arg(long, value_name = "T")]
    wbf_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct FuseArgs {
    /// Prediction file; pass exactly twice (one per detection head).
    #[arg(long = "pred", value_name = "FILE", required = true)]
    preds: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Fusion IoU threshold [default: 0.7].
    #[arg(long, value_name = "T")]
    wbf_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct ScoreLossesArgs {
    #[arg(long, value_name = "FILE")]
    gt: PathBuf,
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Report destination [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Ranking margin [default: 0.2].
    #[arg(long, value_name = "M")]
    margin: Option<f64>,
    /// Contrastive temperature [default: 0.5].
    #[arg(long, value_name = "T")]
    temperature: Option<f64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    gt: PathBuf,
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Recall@1 IoU thresholds [default: 0.5,0.7].
    #[arg(long, value_delimiter = ',', value_name = "T,T,...")]
    iou_thresholds: Option<Vec<f64>>,
    /// Grade at and above which a clip is a highlight positive [default: 4].
    #[arg(long, value_name = "G")]
    grade_threshold: Option<u8>,
    /// Report destination [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_name = "N")]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of records [default: 6].
    #[arg(long, value_name = "N")]
    records: Option<usize>,
    /// Minimum clips per record [default: 6].
    #[arg(long, value_name = "N")]
    min_clips: Option<usize>,
    /// Maximum clips per record [default: 12].
    #[arg(long, value_name = "N")]
    max_clips: Option<usize>,
    /// Embedding dimension [default: 12].
    #[arg(long, value_name = "D")]
    dim: Option<usize>,
    /// Hidden width of the synthesized weights [default: 8].
    #[arg(long, value_name = "H")]
    hidden: Option<usize>,
    /// Clip length in seconds [default: 2].
    #[arg(long, value_name = "S")]
    clip_len: Option<f64>,
}

/// Parses arguments from the environment, runs the command, and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Annotate(args) => cmd_annotate(&config, args),
        Command::Infer(args) => cmd_infer(&config, args),
        Command::Fuse(args) => cmd_fuse(&config, args),
        Command::ScoreLosses(args) => cmd_score_losses(&config, args),
        Command::Eval(args) => cmd_eval(&config, args),
        Command::Synth(args) => cmd_synth(&config, args),
    })
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(results.len());
    for result in results {
        out.push(result?);
    }
    Ok(out)
}

fn write_report<T: Serialize>(out: Option<&Path>, report: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::invalid("report", e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn require_matching_qids(
    left_name: &str,
    left: impl Iterator<Item = String>,
    right_name: &str,
    right: impl Iterator<Item = String>,
) -> Result<()> {
    let left: BTreeSet<String> = left.collect();
    let right: BTreeSet<String> = right.collect();
    if left == right {
        return Ok(());
    }
    let mut parts = Vec::new();
    let missing_right: Vec<&String> = left.difference(&right).collect();
    if !missing_right.is_empty() {
        parts.push(format!("missing from {right_name}: {missing_right:?}"));
    }
    let missing_left: Vec<&String> = right.difference(&left).collect();
    if !missing_left.is_empty() {
        parts.push(format!("missing from {left_name}: {missing_left:?}"));
    }
    Err(Error::QueryIdMismatch(parts.join("; ")))
}

// ---------------------------------------------------------------------------
// annotate
// ---------------------------------------------------------------------------

fn cmd_annotate(config: &Config, args: AnnotateArgs) -> Result<()> {
    let min_run = args.min_run.unwrap_or(config.min_run);
    let records = read_embeddings(&args.embeddings)?;
    let results: Vec<Result<AnnotationRecord>> = records
        .par_iter()
        .map(|rec| annotate(rec, min_run))
        .collect();
    let annotations = first_error(results)?;
    write_annotations(&args.out, &annotations)?;

    let windows: usize = annotations.iter().map(|a| a.relevant_windows.len()).sum();
    let mut histogram = [0usize; 5];
    for a in &annotations {
        for &g in &a.saliency_grades {
            histogram[g as usize] += 1;
        }
    }
    eprintln!(
        "annotated {} records: {} windows, grade histogram [0..4] = {:?}",
        annotations.len(),
        windows,
        histogram
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

fn infer_record(
    rec: &EmbeddingRecord,
    model: &SaliencyModel,
    config: &Config,
    gate_axis: GateAxis,
    alpha: f64,
    wbf_threshold: f64,
) -> Result<Prediction> {
    rec.validate()?;
    // The caption embedding doubles as the single text token.
    let output = forward(&rec.clip_embeddings, &rec.caption_embedding, model, gate_axis)?;
    let num_clips = rec.num_clips();
    let levels: Vec<_> = config
        .anchor_levels
        .iter()
        .map(|l| l.to_level(rec.clip_len))
        .collect();
    let anchors = generate_anchors(num_clips, rec.clip_len, &levels)?;
    let scored = score_anchors(
        &anchors,
        num_clips,
        rec.clip_len,
        &output.detection_logits,
        &output.iou_logits,
    )?;
    let ranked: Vec<Detection> = scored
        .iter()
        .map(|d| Detection {
            class_prob: combined_confidence(d.class_prob, d.pred_iou, alpha),
            ..*d
        })
        .collect();
    let fused = weighted_fuse(&ranked, wbf_threshold);
    Ok(Prediction {
        qid: rec.id.clone(),
        windows: fused
            .iter()
            .map(|d| ScoredWindow {
                span: d.span,
                score: d.class_prob,
            })
            .collect(),
        saliency: Some(output.global_scores.into_vec()),
    })
}

fn cmd_infer(config: &Config, args: InferArgs) -> Result<()> {
    let gate_axis = args.gate_axis.map(GateAxis::from).unwrap_or(config.gate_axis);
    let alpha = args.alpha.unwrap_or(config.confidence_alpha);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "infer",
            format!("alpha must lie in [0, 1], got {alpha}"),
        ));
    }
    let wbf = args.wbf_threshold.unwrap_or(config.wbf_iou_threshold);
    if !(wbf > 0.0 && wbf < 1.0) {
        return Err(Error::invalid(
            "infer",
            format!("wbf threshold must lie in (0, 1), got {wbf}"),
        ));
    }
    let model = crate::io::load_model(&args.weights)?;
    let records = read_embeddings(&args.embeddings)?;
    let results: Vec<Result<Prediction>> = records
        .par_iter()
        .map(|rec| infer_record(rec, &model, config, gate_axis, alpha, wbf))
        .collect();
    let predictions = first_error(results)?;
    write_predictions(&args.out, &predictions)?;
    let windows: usize = predictions.iter().map(|p| p.windows.len()).sum();
    eprintln!(
        "inferred {} records: {} fused windows",
        predictions.len(),
        windows
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn cmd_fuse(config: &Config, args: FuseArgs) -> Result<()> {
    if args.preds.len() != 2 {
        return Err(Error::invalid(
            "fuse",
            format!("pass --pred exactly twice, got {}", args.preds.len()),
        ));
    }
    let wbf = args.wbf_threshold.unwrap_or(config.wbf_iou_threshold);
    let head_a = read_predictions(&args.preds[0])?;
    let head_b = read_predictions(&args.preds[1])?;
    require_matching_qids(
        "first prediction file",
        head_a.iter().map(|p| p.qid.clone()),
        "second prediction file",
        head_b.iter().map(|p| p.qid.clone()),
    )?;
    let by_qid: std::collections::BTreeMap<&str, &Prediction> =
        head_b.iter().map(|p| (p.qid.as_str(), p)).collect();
    let mut fused_records = Vec::with_capacity(head_a.len());
    for a in &head_a {
        let b = by_qid[a.qid.as_str()];
        let mut detections = Vec::with_capacity(a.windows.len() + b.windows.len());
        for (pred, source) in [(a, DetectionSource::Atss), (b, DetectionSource::Detr)] {
            for w in &pred.windows {
                detections.push(Detection {
                    span: w.span,
                    class_prob: clamp_unit(w.score),
                    pred_iou: clamp_unit(w.score),
                    source,
                });
            }
        }
        let fused = weighted_fuse(&detections, wbf);
        fused_records.push(Prediction {
            qid: a.qid.clone(),
            windows: fused
                .iter()
                .map(|d| ScoredWindow {
                    span: d.span,
                    score: d.class_prob,
                })
                .collect(),
            saliency: a.saliency.clone().or_else(|| b.saliency.clone()),
        });
    }
    write_predictions(&args.out, &fused_records)?;
    let windows: usize = fused_records.iter().map(|p| p.windows.len()).sum();
    eprintln!("fused {} records: {} windows", fused_records.len(), windows);
    Ok(())
}

// ---------------------------------------------------------------------------
// score-losses
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct LossReport {
    queries: usize,
    highlight_queries: usize,
    highlight_skipped: usize,
    margin_ranking: f64,
    rank_contrastive: f64,
    bce_positive: f64,
    bce_negative: f64,
    highlight: f64,
    one_to_one: f64,
    anchor_head: f64,
    auxiliary: f64,
    total: f64,
}

fn query_losses(
    gt: &AnnotationRecord,
    pred: &Prediction,
    config: &Config,
    margin: f64,
    temperature: f64,
) -> Result<(LossParts, Option<(f64, f64, f64, f64)>)> {
    let duration = gt.duration;
    let match_weights = MatchWeights {
        l1: config.loss_weights.l1,
        giou: config.loss_weights.giou,
        ce: config.loss_weights.ce,
        iou: config.loss_weights.iou,
    };

    // One-to-one head: prediction windows as detections.
    let detections: Vec<Detection> = pred
        .windows
        .iter()
        .map(|w| Detection {
            span: w.span,
            class_prob: clamp_unit(w.score),
            pred_iou: clamp_unit(w.score),
            source: DetectionSource::Detr,
        })
        .collect();
    let matching = hungarian_match(&detections, &gt.relevant_windows, duration, &match_weights);
    let pairs: Vec<MatchedPair> = matching
        .pairs
        .iter()
        .map(|&(q, g)| MatchedPair {
            det: detections[q],
            gt: gt.relevant_windows[g],
            iou_target: iou(detections[q].span, gt.relevant_windows[g]),
        })
        .collect();
    let detr = detr_loss(&pairs, duration, &config.loss_weights);

    // Anchor head: the clip grid comes from the grades when present.
    let num_clips = if gt.saliency_grades.is_empty() {
        (duration / 2.0).ceil().max(1.0) as usize
    } else {
        gt.saliency_grades.len()
    };
    let clip_len = duration / num_clips as f64;
    let levels: Vec<_> = config
        .anchor_levels
        .iter()
        .map(|l| l.to_level(clip_len))
        .collect();
    let anchors = generate_anchors(num_clips, clip_len, &levels)?;
    let assignment =
        crate::detector::atss_assign(&anchors, &gt.relevant_windows, config.atss_top_k)?;
    let mut samples = Vec::new();
    for (g, positives) in assignment.positives.iter().enumerate() {
        let gt_window = gt.relevant_windows[g];
        // The head's candidate for this target: the prediction overlapping
        // the ground truth most.
        let best = pred
            .windows
            .iter()
            .max_by(|a, b| {
                iou(a.span, gt_window)
                    .partial_cmp(&iou(b.span, gt_window))
                    .unwrap()
            })
            .copied();
        let Some(best) = best else { continue };
        for &anchor_idx in positives {
            let anchor_center = anchors[anchor_idx].center();
            samples.push(AtssSample {
                anchor_center,
                pred_span: best.span,
                class_prob: clamp_unit(best.score),
                pred_centerness: centerness(anchor_center, best.span),
                gt: gt_window,
            });
        }
    }
    let atss = atss_loss(&samples, duration, &config.loss_weights);

    // Auxiliary: moment/non-moment classification from predicted saliency.
    // Prediction files carry no embedding features, so the alignment term is
    // zero (identical stand-in vectors).
    let aux = match &pred.saliency {
        Some(saliency) if !saliency.is_empty() => {
            let clip_len = duration / saliency.len() as f64;
            let labels: Vec<bool> = (0..saliency.len())
                .map(|i| {
                    let mid = (i as f64 + 0.5) * clip_len;
                    gt.relevant_windows.iter().any(|w| w.contains(mid))
                })
                .collect();
            aux_loss(&AuxInputs {
                clip_logits: saliency,
                in_moment: &labels,
                moment_feature: &[1.0],
                sentence: &[1.0],
            })?
        }
        _ => 0.0,
    };

    // Highlight losses need grades and a matching saliency vector.
    let highlight = match &pred.saliency {
        Some(saliency)
            if !gt.saliency_grades.is_empty() && saliency.len() == gt.saliency_grades.len() =>
        {
            let scores = SaliencyVector::new(saliency.clone())?;
            let sup = SaliencySupervision::new(gt.saliency_grades.clone(), false)?;
            let marg = margin_ranking_loss(&scores, &sup, margin)?;
            let rctl = rank_contrastive_loss(&scores, &sup, temperature)?;
            let (pos, neg) = saliency_bce(&scores, &sup)?;
            Some((marg.value, rctl, pos, neg))
        }
        _ => None,
    };

    let hl_total = highlight
        .map(|(m, r, p, n)| m + r + p + n)
        .unwrap_or(0.0);
    Ok((
        LossParts {
            atss,
            detr,
            hl: hl_total,
            aux,
        },
        highlight,
    ))
}

fn cmd_score_losses(config: &Config, args: ScoreLossesArgs) -> Result<()> {
    let margin = args.margin.unwrap_or(config.ranking_margin);
    let temperature = args.temperature.unwrap_or(config.contrastive_temperature);
    let gts = read_annotations(&args.gt)?;
    let preds = read_predictions(&args.pred)?;
    require_matching_qids(
        "ground truth",
        gts.iter().map(|g| g.qid.clone()),
        "predictions",
        preds.iter().map(|p| p.qid.clone()),
    )?;
    let by_qid: std::collections::BTreeMap<&str, &Prediction> =
        preds.iter().map(|p| (p.qid.as_str(), p)).collect();
    let mut ordered: Vec<&AnnotationRecord> = gts.iter().collect();
    ordered.sort_by(|a, b| a.qid.cmp(&b.qid));

    let results: Vec<Result<(LossParts, Option<(f64, f64, f64, f64)>)>> = ordered
        .par_iter()
        .map(|gt| query_losses(gt, by_qid[gt.qid.as_str()], config, margin, temperature))
        .collect();
    let results = first_error(results)?;

    let queries = results.len();
    let mut sums = LossParts::default();
    let mut hl_sums = (0.0, 0.0, 0.0, 0.0);
    let mut hl_queries = 0usize;
    for (parts, highlight) in &results {
        sums.atss += parts.atss;
        sums.detr += parts.detr;
        sums.hl += parts.hl;
        sums.aux += parts.aux;
        if let Some((m, r, p, n)) = highlight {
            hl_sums.0 += m;
            hl_sums.1 += r;
            hl_sums.2 += p;
            hl_sums.3 += n;
            hl_queries += 1;
        }
    }
    let mean = |total: f64, count: usize| if count == 0 { 0.0 } else { total / count as f64 };
    let parts = LossParts {
        atss: mean(sums.atss, queries),
        detr: mean(sums.detr, queries),
        hl: mean(sums.hl, queries),
        aux: mean(sums.aux, queries),
    };
    let report = LossReport {
        queries,
        highlight_queries: hl_queries,
        highlight_skipped: queries - hl_queries,
        margin_ranking: mean(hl_sums.0, hl_queries),
        rank_contrastive: mean(hl_sums.1, hl_queries),
        bce_positive: mean(hl_sums.2, hl_queries),
        bce_negative: mean(hl_sums.3, hl_queries),
        highlight: parts.hl,
        one_to_one: parts.detr,
        anchor_head: parts.atss,
        auxiliary: parts.aux,
        total: total_objective(&parts, &config.loss_weights),
    };
    write_report(args.out.as_deref(), &report)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct HighlightReport {
    map: f64,
    hit_at_1: f64,
    evaluated: usize,
    skipped: usize,
    grade_threshold: u8,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    queries: usize,
    r1: std::collections::BTreeMap<String, f64>,
    map: std::collections::BTreeMap<String, f64>,
    map_avg: f64,
    miou: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hd: Option<HighlightReport>,
}

fn cmd_eval(config: &Config, args: EvalArgs) -> Result<()> {
    let r1_thresholds = args
        .iou_thresholds
        .clone()
        .unwrap_or_else(|| config.r1_iou_thresholds.clone());
    if let Some(&t) = r1_thresholds.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::invalid(
            "eval",
            format!("IoU thresholds must lie in (0, 1], got {t}"),
        ));
    }
    let grade_threshold = args.grade_threshold.unwrap_or(config.grade_threshold);
    let annotations = read_annotations(&args.gt)?;
    let preds = read_predictions(&args.pred)?;
    require_matching_qids(
        "ground truth",
        annotations.iter().map(|g| g.qid.clone()),
        "predictions",
        preds.iter().map(|p| p.qid.clone()),
    )?;
    let gts: Vec<GroundTruth> = annotations.iter().map(annotation_to_ground_truth).collect();

    let mut r1 = std::collections::BTreeMap::new();
    for &t in &r1_thresholds {
        r1.insert(format!("{t:.2}"), recall_at_1(&gts, &preds, t));
    }
    let mut map = std::collections::BTreeMap::new();
    for &t in &config.map_iou_thresholds {
        map.insert(format!("{t:.2}"), mean_average_precision(&gts, &preds, t));
    }
    let have_grades = gts.iter().any(|g| g.grades.is_some());
    let hd = have_grades.then(|| {
        let hd = hd_map(&gts, &preds, grade_threshold);
        let hit = hit_at_1(&gts, &preds, grade_threshold);
        HighlightReport {
            map: hd.value,
            hit_at_1: hit.value,
            evaluated: hd.evaluated,
            skipped: hd.skipped,
            grade_threshold,
        }
    });
    let report = EvalReport {
        queries: gts.len(),
        r1,
        map,
        map_avg: map_avg(&gts, &preds, &config.map_iou_thresholds),
        miou: mean_iou(&gts, &preds),
        hd,
    };
    write_report(args.out.as_deref(), &report)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

fn cmd_synth(config: &Config, args: SynthArgs) -> Result<()> {
    let defaults = SynthConfig::default();
    let sizes = SynthConfig {
        records: args.records.unwrap_or(defaults.records),
        min_clips: args.min_clips.unwrap_or(defaults.min_clips),
        max_clips: args.max_clips.unwrap_or(defaults.max_clips),
        dim: args.dim.unwrap_or(defaults.dim),
        hidden: args.hidden.unwrap_or(defaults.hidden),
        pooling_layers: config.pooling_layers,
        cross_modal_layers: config.cross_modal_layers,
        encoder_layers: defaults.encoder_layers,
        clip_len: args.clip_len.unwrap_or(defaults.clip_len),
    };
    let out = synth_fixtures(args.seed, &sizes, &args.out)?;
    eprintln!(
        "wrote {}, {}, {} (seed {})",
        out.embeddings.display(),
        out.annotations.display(),
        out.weights.display(),
        args.seed
    );
    Ok(())
}
