//! Saliency machinery: attention-pooled sentence vectors, local saliency
//! scores, saliency-guided cross attention, a plain transformer encoder
//! layer, the saliency amplifier, and global saliency scores.
//!
//! All operations run forward-only over externally supplied weights (loaded
//! from a weights file or synthesized). Attention is single-head throughout,
//! which keeps every step reproducible against hand-rolled oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, l2_normalize_rows, matmul, sigmoid_scalar, softmax_rows, Matrix};

/// Per-clip relevance scores (unbounded logits), one per video clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyVector(Vec<f64>);

impl SaliencyVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return Err(Error::NonFinite {
                op: "SaliencyVector::new",
                detail: format!("score[{i}] = {s}"),
            });
        }
        Ok(SaliencyVector(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Learnable scale and shift applied to cosine similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for AttentionWeights {
    fn default() -> Self {
        AttentionWeights {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

/// Query/key/value projections into a common hidden dimension.
///
/// `w_q` maps the attending side (video clips), `w_k`/`w_v` map the attended
/// side (text tokens); all three must project into the same hidden width.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
}

impl ProjectionSet {
    pub fn hidden_dim(&self) -> usize {
        self.w_q.cols()
    }

    fn validate(&self) -> Result<()> {
        let h = self.w_q.cols();
        if self.w_k.cols() != h || self.w_v.cols() != h {
            return Err(Error::shape(
                "ProjectionSet",
                format!(
                    "projections disagree on hidden dim: q->{}, k->{}, v->{}",
                    h,
                    self.w_k.cols(),
                    self.w_v.cols()
                ),
            ));
        }
        if self.w_k.rows() != self.w_v.rows() {
            return Err(Error::shape(
                "ProjectionSet",
                format!(
                    "key and value input dims differ: {} vs {}",
                    self.w_k.rows(),
                    self.w_v.rows()
                ),
            ));
        }
        Ok(())
    }
}

/// Which axis the saliency gate indexes in [`sgca`].
///
/// `Video` gates each output row by its own clip's saliency; `Text` gates
/// every attention column by the corresponding text token's score. Both are
/// implemented because the two readings produce different machines; `Video`
/// is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GateAxis {
    #[default]
    Video,
    Text,
}

/// One attention-pooling layer: a learnable query plus a value projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolingLayer {
    /// Seed query. Only the first layer's query enters the computation; the
    /// pooled output of each layer becomes the query for the next.
    pub query: Vec<f64>,
    pub value_proj: Matrix,
}

/// Weights for the pooling encoder: at least one attention-pooling layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolingWeights {
    pub layers: Vec<PoolingLayer>,
}

/// Pools a token matrix into a single sentence vector.
///
/// Each layer attends a query over all tokens (softmax of scaled dot
/// products) and returns the attention-weighted sum of value-projected
/// tokens; that pooled vector is the next layer's query. Output is `1 x d`.
pub fn pooling_encoder(text_tokens: &Matrix, weights: &PoolingWeights) -> Result<Matrix> {
    if text_tokens.rows() == 0 {
        return Err(Error::Empty {
            op: "pooling_encoder",
            what: "token set",
        });
    }
    if weights.layers.is_empty() {
        return Err(Error::Empty {
            op: "pooling_encoder",
            what: "pooling layers",
        });
    }
    let d = text_tokens.cols();
    let mut query = weights.layers[0].query.clone();
    if query.len() != d {
        return Err(Error::shape(
            "pooling_encoder",
            format!("query has dim {} but tokens have dim {d}", query.len()),
        ));
    }
    for layer in &weights.layers {
        if layer.value_proj.shape() != (d, d) {
            return Err(Error::shape(
                "pooling_encoder",
                format!(
                    "value projection is {}x{}, expected {d}x{d}",
                    layer.value_proj.rows(),
                    layer.value_proj.cols()
                ),
            ));
        }
        query = attention_pool(text_tokens, &query, &layer.value_proj)?;
    }
    Ok(Matrix::row_vector(query))
}

fn attention_pool(tokens: &Matrix, query: &[f64], value_proj: &Matrix) -> Result<Vec<f64>> {
    let d = tokens.cols();
    let scale = (d as f64).sqrt();
    let logits: Vec<f64> = (0..tokens.rows())
        .map(|i| dot(query, tokens.row(i)) / scale)
        .collect();
    let attn = softmax_rows(&Matrix::row_vector(logits));
    let values = matmul(tokens, value_proj)?;
    let mut pooled = vec![0.0; d];
    for i in 0..values.rows() {
        let a = attn.get(0, i);
        for (p, v) in pooled.iter_mut().zip(values.row(i)) {
            *p += a * v;
        }
    }
    Ok(pooled)
}

/// Local saliency scores: scaled-and-shifted cosine similarity between the
/// sentence vector and every clip embedding.
pub fn local_saliency(
    sentence: &Matrix,
    clips: &Matrix,
    w: &AttentionWeights,
) -> Result<SaliencyVector> {
    if sentence.rows() != 1 {
        return Err(Error::shape(
            "local_saliency",
            format!("sentence must be 1-row, got {} rows", sentence.rows()),
        ));
    }
    if sentence.cols() != clips.cols() {
        return Err(Error::shape(
            "local_saliency",
            format!(
                "sentence dim {} vs clip dim {}",
                sentence.cols(),
                clips.cols()
            ),
        ));
    }
    let sent = l2_normalize_rows(sentence)?;
    let clip_norm = l2_normalize_rows(clips)?;
    let cos = matmul(&sent, &clip_norm.transpose())?;
    SaliencyVector::new(cos.row(0).iter().map(|c| w.alpha * c + w.beta).collect())
}

/// Saliency-guided cross attention.
///
/// Row `i` of the output is `sum_j W[i][j] * V[j]` with
/// `W[i][j] = softmax_j(Q_i . K_j / sqrt(h)) * sigmoid(gate)`, where the
/// gate is the local saliency score of text token `j` (`GateAxis::Text`) or
/// of video clip `i` (`GateAxis::Video`).
pub fn sgca(
    clips: &Matrix,
    text: &Matrix,
    s_local: &SaliencyVector,
    proj: &ProjectionSet,
    gate_axis: GateAxis,
) -> Result<Matrix> {
    proj.validate()?;
    if proj.w_q.rows() != clips.cols() {
        return Err(Error::shape(
            "sgca",
            format!(
                "query projection expects dim {}, clips have dim {}",
                proj.w_q.rows(),
                clips.cols()
            ),
        ));
    }
    if proj.w_k.rows() != text.cols() {
        return Err(Error::shape(
            "sgca",
            format!(
                "key projection expects dim {}, text has dim {}",
                proj.w_k.rows(),
                text.cols()
            ),
        ));
    }
    let expected_gate = match gate_axis {
        GateAxis::Text => text.rows(),
        GateAxis::Video => clips.rows(),
    };
    if s_local.len() != expected_gate {
        return Err(Error::shape(
            "sgca",
            format!(
                "gate length {} does not match {} axis length {expected_gate}",
                s_local.len(),
                match gate_axis {
                    GateAxis::Text => "text",
                    GateAxis::Video => "video",
                }
            ),
        ));
    }
    let queries = matmul(clips, &proj.w_q)?;
    let keys = matmul(text, &proj.w_k)?;
    let values = matmul(text, &proj.w_v)?;
    let h = proj.hidden_dim();
    let scale = (h as f64).sqrt();
    let logits = Matrix::from_fn(clips.rows(), text.rows(), |i, j| {
        dot(queries.row(i), keys.row(j)) / scale
    });
    let mut weights = softmax_rows(&logits);
    for i in 0..weights.rows() {
        match gate_axis {
            GateAxis::Video => {
                let gate = sigmoid_scalar(s_local.get(i));
                for w in weights.row_mut(i) {
                    *w *= gate;
                }
            }
            GateAxis::Text => {
                for (j, w) in weights.row_mut(i).iter_mut().enumerate() {
                    *w *= sigmoid_scalar(s_local.get(j));
                }
            }
        }
    }
    matmul(&weights, &values)
}

/// Weights for one pre-norm transformer encoder layer (single-head
/// self-attention followed by a two-layer ReLU feed-forward block, each
/// behind a residual connection).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayerWeights {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
    pub ln1_scale: Vec<f64>,
    pub ln1_shift: Vec<f64>,
    pub ln2_scale: Vec<f64>,
    pub ln2_shift: Vec<f64>,
    pub ff_w1: Matrix,
    pub ff_b1: Vec<f64>,
    pub ff_w2: Matrix,
    pub ff_b2: Vec<f64>,
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

impl EncoderLayerWeights {
    /// Identity-free zero layer for a given width: both residual branches
    /// contribute nothing, so the layer passes its input through.
    pub fn zeros(dim: usize, ff_dim: usize) -> Self {
        EncoderLayerWeights {
            w_q: Matrix::zeros(dim, dim),
            w_k: Matrix::zeros(dim, dim),
            w_v: Matrix::zeros(dim, dim),
            w_o: Matrix::zeros(dim, dim),
            ln1_scale: vec![1.0; dim],
            ln1_shift: vec![0.0; dim],
            ln2_scale: vec![1.0; dim],
            ln2_shift: vec![0.0; dim],
            ff_w1: Matrix::zeros(dim, ff_dim),
            ff_b1: vec![0.0; ff_dim],
            ff_w2: Matrix::zeros(ff_dim, dim),
            ff_b2: vec![0.0; dim],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let square = [
            ("w_q", &self.w_q),
            ("w_k", &self.w_k),
            ("w_v", &self.w_v),
            ("w_o", &self.w_o),
        ];
        for (name, m) in square {
            if m.shape() != (dim, dim) {
                return Err(Error::shape(
                    "encoder_layer",
                    format!("{name} is {}x{}, expected {dim}x{dim}", m.rows(), m.cols()),
                ));
            }
        }
        let ff = self.ff_w1.cols();
        if self.ff_w1.rows() != dim || self.ff_w2.shape() != (ff, dim) {
            return Err(Error::shape(
                "encoder_layer",
                format!(
                    "feed-forward shapes {}x{} and {}x{} do not chain {dim}->{ff}->{dim}",
                    self.ff_w1.rows(),
                    self.ff_w1.cols(),
                    self.ff_w2.rows(),
                    self.ff_w2.cols()
                ),
            ));
        }
        for (name, v, want) in [
            ("ln1_scale", &self.ln1_scale, dim),
            ("ln1_shift", &self.ln1_shift, dim),
            ("ln2_scale", &self.ln2_scale, dim),
            ("ln2_shift", &self.ln2_shift, dim),
            ("ff_b1", &self.ff_b1, ff),
            ("ff_b2", &self.ff_b2, dim),
        ] {
            if v.len() != want {
                return Err(Error::shape(
                    "encoder_layer",
                    format!("{name} has length {}, expected {want}", v.len()),
                ));
            }
        }
        Ok(())
    }
}

fn layer_norm_rows(m: &Matrix, scale: &[f64], shift: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let denom = (var + LAYER_NORM_EPS).sqrt();
        for (x, (g, b)) in row.iter_mut().zip(scale.iter().zip(shift)) {
            *x = (*x - mean) / denom * g + b;
        }
    }
    out
}

/// One pre-norm transformer encoder layer:
/// `x = x + Attn(LN1(x)); x = x + FFN(LN2(x))`.
///
/// With zero attention-output and feed-forward weights the residual stream
/// passes through untouched.
pub fn encoder_layer(tokens: &Matrix, weights: &EncoderLayerWeights) -> Result<Matrix> {
    let dim = tokens.cols();
    weights.validate(dim)?;
    let normed = layer_norm_rows(tokens, &weights.ln1_scale, &weights.ln1_shift);
    let queries = matmul(&normed, &weights.w_q)?;
    let keys = matmul(&normed, &weights.w_k)?;
    let values = matmul(&normed, &weights.w_v)?;
    let scale = (dim as f64).sqrt();
    let logits = Matrix::from_fn(tokens.rows(), tokens.rows(), |i, j| {
        dot(queries.row(i), keys.row(j)) / scale
    });
    let attn = matmul(&softmax_rows(&logits), &values)?;
    let x = tokens.add(&matmul(&attn, &weights.w_o)?)?;

    let normed = layer_norm_rows(&x, &weights.ln2_scale, &weights.ln2_shift);
    let mut hidden = matmul(&normed, &weights.ff_w1)?;
    for r in 0..hidden.rows() {
        for (h, b) in hidden.row_mut(r).iter_mut().zip(&weights.ff_b1) {
            *h = (*h + b).max(0.0);
        }
    }
    let mut ff = matmul(&hidden, &weights.ff_w2)?;
    for r in 0..ff.rows() {
        for (f, b) in ff.row_mut(r).iter_mut().zip(&weights.ff_b2) {
            *f += b;
        }
    }
    x.add(&ff)
}

/// Saliency amplifier: rescales each feature row by `1 + sigmoid(s_i)`.
pub fn saliency_amplify(features: &Matrix, s: &SaliencyVector) -> Result<Matrix> {
    if features.rows() != s.len() {
        return Err(Error::shape(
            "saliency_amplify",
            format!("{} feature rows vs {} scores", features.rows(), s.len()),
        ));
    }
    let mut out = features.clone();
    for r in 0..out.rows() {
        let gain = 1.0 + sigmoid_scalar(s.get(r));
        for x in out.row_mut(r) {
            *x *= gain;
        }
    }
    Ok(out)
}

/// A linear map from feature rows to one scalar per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl LinearHead {
    pub fn zeros(dim: usize) -> Self {
        LinearHead {
            weight: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn apply_rows(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols() != self.weight.len() {
            return Err(Error::shape(
                "LinearHead::apply_rows",
                format!(
                    "feature dim {} vs head dim {}",
                    features.cols(),
                    self.weight.len()
                ),
            ));
        }
        Ok((0..features.rows())
            .map(|r| dot(features.row(r), &self.weight) + self.bias)
            .collect())
    }
}

/// Global saliency: local scores plus a per-clip linear offset computed from
/// the amplified features.
pub fn global_saliency(
    s_local: &SaliencyVector,
    amplified_features: &Matrix,
    head: &LinearHead,
) -> Result<SaliencyVector> {
    if amplified_features.rows() != s_local.len() {
        return Err(Error::shape(
            "global_saliency",
            format!(
                "{} feature rows vs {} local scores",
                amplified_features.rows(),
                s_local.len()
            ),
        ));
    }
    let offsets = head.apply_rows(amplified_features)?;
    SaliencyVector::new(
        s_local
            .scores()
            .iter()
            .zip(&offsets)
            .map(|(s, o)| s + o)
            .collect(),
    )
}

/// Full weight set for the saliency forward chain plus the per-clip scoring
/// heads consumed by the detector stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyModel {
    pub pooling: PoolingWeights,
    pub local: AttentionWeights,
    /// Cross-modal stack; the first layer projects clip features, each
    /// subsequent layer projects the previous hidden output.
    pub cross_modal: Vec<ProjectionSet>,
    pub encoder: Vec<EncoderLayerWeights>,
    pub saliency_head: LinearHead,
    pub detection_head: LinearHead,
    pub iou_head: LinearHead,
}

/// Everything the forward chain produces for one (video, query) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub sentence: Matrix,
    pub local_scores: SaliencyVector,
    pub global_scores: SaliencyVector,
    /// Encoder output amplified by the global scores.
    pub amplified: Matrix,
    pub detection_logits: Vec<f64>,
    pub iou_logits: Vec<f64>,
}

/// Runs the composed forward chain: pooling encoder, local scores,
/// cross-modal SGCA stack, transformer encoder stack, amplifier, global
/// scores, second amplification, and the per-clip scoring heads.
pub fn forward(
    clips: &Matrix,
    text: &Matrix,
    model: &SaliencyModel,
    gate_axis: GateAxis,
) -> Result<ForwardOutput> {
    clips.check_finite("forward", "clips")?;
    text.check_finite("forward", "text")?;
    if model.cross_modal.is_empty() {
        return Err(Error::Empty {
            op: "forward",
            what: "cross-modal layers",
        });
    }
    let sentence = pooling_encoder(text, &model.pooling)?;
    let local_scores = local_saliency(&sentence, clips, &model.local)?;

    let mut hidden = clips.clone();
    for proj in &model.cross_modal {
        hidden = sgca(&hidden, text, &local_scores, proj, gate_axis)?;
    }
    for layer in &model.encoder {
        hidden = encoder_layer(&hidden, layer)?;
    }

    let amplified_local = saliency_amplify(&hidden, &local_scores)?;
    let global_scores = global_saliency(&local_scores, &amplified_local, &model.saliency_head)?;
    let amplified = saliency_amplify(&hidden, &global_scores)?;
    let detection_logits = model.detection_head.apply_rows(&amplified)?;
    let iou_logits = model.iou_head.apply_rows(&amplified)?;

    Ok(ForwardOutput {
        sentence,
        local_scores,
        global_scores,
        amplified,
        detection_logits,
        iou_logits,
    })
}
