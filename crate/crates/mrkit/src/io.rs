//! File formats: embeddings JSONL (with an optional binary sidecar for the
//! clip matrix), annotation and prediction JSONL, the weights
//! manifest-plus-blob pair, and deterministic synthetic fixtures.
//!
//! Every writer is byte-deterministic: fields are emitted in a fixed order
//! and floats use the shortest decimal that round-trips, so equal values
//! always produce identical files. Binary payloads store 32-bit floats;
//! everything in memory is 64-bit.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotationRecord, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::losses::MAX_GRADE;
use crate::metrics::{GroundTruth, Prediction, ScoredWindow};
use crate::numerics::Matrix;
use crate::rng::Xoshiro256PlusPlus;
use crate::saliency::{
    AttentionWeights, EncoderLayerWeights, LinearHead, PoolingLayer, PoolingWeights,
    ProjectionSet, SaliencyModel,
};
use crate::spans::Span;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn read_jsonl<W: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, W)>> {
    let file = fs::File::open(path)?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: W = serde_json::from_str(&line)
            .map_err(|e| Error::schema(path_str(path), idx + 1, e.to_string()))?;
        records.push((idx + 1, wire));
    }
    Ok(records)
}

fn write_jsonl<W: Serialize>(path: &Path, records: impl IntoIterator<Item = W>) -> Result<()> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| Error::schema(path_str(path), 0, e.to_string()))?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn reject_duplicate_qids<'a>(
    path: &Path,
    ids: impl Iterator<Item = (usize, &'a str)>,
) -> Result<()> {
    let mut seen = std::collections::BTreeMap::new();
    for (line, id) in ids {
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(Error::schema(
                path_str(path),
                line,
                format!("duplicate id {id:?} (first seen on line {first})"),
            ));
        }
    }
    Ok(())
}

fn check_finite_slice(path: &Path, line: usize, field: &str, values: &[f64]) -> Result<()> {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::schema(
            path_str(path),
            line,
            format!("{field}[{i}] is non-finite ({v})"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingWire {
    id: String,
    clip_len: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    orig_window: Option<Span>,
    caption_embedding: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clip_embeddings: Option<Vec<Vec<f64>>>,
    /// Path of an MRKE sidecar holding the clip matrix, relative to the
    /// JSONL file. Exactly one of `clip_embeddings` and this field is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    clip_embeddings_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<String>,
}

/// Reads an embeddings JSONL file, following sidecar references.
pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let wires: Vec<(usize, EmbeddingWire)> = read_jsonl(path)?;
    reject_duplicate_qids(path, wires.iter().map(|(l, w)| (*l, w.id.as_str())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut records = Vec::with_capacity(wires.len());
    for (line, wire) in wires {
        let schema = |msg: String| Error::schema(path_str(path), line, msg);
        if !(wire.clip_len.is_finite() && wire.clip_len > 0.0) {
            return Err(schema(format!(
                "clip_len must be positive, got {}",
                wire.clip_len
            )));
        }
        check_finite_slice(path, line, "caption_embedding", &wire.caption_embedding)?;
        let clips = match (wire.clip_embeddings, wire.clip_embeddings_file) {
            (Some(rows), None) => {
                for (i, row) in rows.iter().enumerate() {
                    check_finite_slice(path, line, &format!("clip_embeddings[{i}]"), row)?;
                }
                Matrix::from_rows(&rows).map_err(|e| schema(e.to_string()))?
            }
            (None, Some(rel)) => read_matrix_sidecar(&base.join(rel))?,
            (Some(_), Some(_)) => {
                return Err(schema(
                    "record sets both clip_embeddings and clip_embeddings_file".into(),
                ))
            }
            (None, None) => {
                return Err(schema(
                    "record needs clip_embeddings or clip_embeddings_file".into(),
                ))
            }
        };
        if clips.rows() == 0 {
            return Err(schema("record has no clips".into()));
        }
        if clips.cols() != wire.caption_embedding.len() {
            return Err(schema(format!(
                "caption dim {} does not match clip dim {}",
                wire.caption_embedding.len(),
                clips.cols()
            )));
        }
        let duration = clips.rows() as f64 * wire.clip_len;
        if let Some(w) = wire.orig_window {
            if w.end() > duration + 1e-9 {
                return Err(schema(format!(
                    "orig_window [{}, {}] exceeds the {duration}s video",
                    w.start(),
                    w.end()
                )));
            }
        }
        records.push(EmbeddingRecord {
            id: wire.id,
            clip_embeddings: clips,
            caption_embedding: Matrix::row_vector(wire.caption_embedding),
            clip_len: wire.clip_len,
            orig_window: wire.orig_window,
            query: wire.query,
        });
    }
    Ok(records)
}

fn embedding_wire(rec: &EmbeddingRecord, sidecar: Option<String>) -> EmbeddingWire {
    let inline = sidecar.is_none().then(|| {
        (0..rec.clip_embeddings.rows())
            .map(|r| rec.clip_embeddings.row(r).to_vec())
            .collect()
    });
    EmbeddingWire {
        id: rec.id.clone(),
        clip_len: rec.clip_len,
        orig_window: rec.orig_window,
        caption_embedding: rec.caption_embedding.row(0).to_vec(),
        clip_embeddings: inline,
        clip_embeddings_file: sidecar,
        query: rec.query.clone(),
    }
}

/// Writes embeddings with inline clip matrices.
pub fn write_embeddings(path: &Path, records: &[EmbeddingRecord]) -> Result<()> {
    write_jsonl(path, records.iter().map(|r| embedding_wire(r, None)))
}

/// Writes embeddings with each clip matrix in its own MRKE sidecar next to
/// the JSONL file.
pub fn write_embeddings_with_sidecar(path: &Path, records: &[EmbeddingRecord]) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("embeddings");
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut wires = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let name = format!("{stem}.{i:04}.mrke");
        write_matrix_sidecar(&base.join(&name), &rec.clip_embeddings)?;
        wires.push(embedding_wire(rec, Some(name)));
    }
    write_jsonl(path, wires)
}

// ---------------------------------------------------------------------------
// Binary sidecar
// ---------------------------------------------------------------------------

const SIDECAR_MAGIC: &[u8; 4] = b"MRKE";
const SIDECAR_VERSION: u16 = 1;

/// Writes a matrix as little-endian 32-bit floats behind an `MRKE` header.
pub fn write_matrix_sidecar(path: &Path, matrix: &Matrix) -> Result<()> {
    let mut out = Vec::with_capacity(12 + matrix.data().len() * 4);
    out.extend_from_slice(SIDECAR_MAGIC);
    out.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.cols() as u32).to_le_bytes());
    for &v in matrix.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

const SIDECAR_HEADER_LEN: usize = 14;

/// Reads an `MRKE` sidecar back into a matrix (f32 payload widened to f64).
pub fn read_matrix_sidecar(path: &Path) -> Result<Matrix> {
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; SIDECAR_HEADER_LEN];
    file.read_exact(&mut header).map_err(|_| {
        Error::schema(
            path_str(path),
            0,
            format!("truncated header (need {SIDECAR_HEADER_LEN} bytes)"),
        )
    })?;
    if &header[0..4] != SIDECAR_MAGIC {
        return Err(Error::schema(
            path_str(path),
            0,
            format!("bad magic {:?}, expected \"MRKE\"", &header[0..4]),
        ));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != SIDECAR_VERSION {
        return Err(Error::schema(
            path_str(path),
            0,
            format!("unsupported version {version}"),
        ));
    }
    let rows = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let expected = rows * cols * 4;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::schema(
            path_str(path),
            0,
            format!(
                "payload holds {} bytes but {rows}x{cols} f32 values need {expected}",
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|chunk| f32::from_le_bytes(chunk.try_into().unwrap()) as f64)
        .collect();
    let matrix = Matrix::from_vec(rows, cols, data)
        .map_err(|e| Error::schema(path_str(path), 0, e.to_string()))?;
    matrix
        .check_finite("read_matrix_sidecar", "payload")
        .map_err(|e| Error::schema(path_str(path), 0, e.to_string()))?;
    Ok(matrix)
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationWire {
    qid: String,
    duration: f64,
    relevant_windows: Vec<Span>,
    saliency_grades: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<String>,
}

/// Reads an annotation JSONL file.
pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let wires: Vec<(usize, AnnotationWire)> = read_jsonl(path)?;
    reject_duplicate_qids(path, wires.iter().map(|(l, w)| (*l, w.qid.as_str())))?;
    let mut records = Vec::with_capacity(wires.len());
    for (line, wire) in wires {
        let schema = |msg: String| Error::schema(path_str(path), line, msg);
        if !(wire.duration.is_finite() && wire.duration > 0.0) {
            return Err(schema(format!(
                "duration must be positive, got {}",
                wire.duration
            )));
        }
        for pair in wire.relevant_windows.windows(2) {
            if pair[1].start() < pair[0].end() {
                return Err(schema(format!(
                    "windows must be sorted and disjoint; [{}, {}] overlaps [{}, {}]",
                    pair[1].start(),
                    pair[1].end(),
                    pair[0].start(),
                    pair[0].end()
                )));
            }
        }
        if let Some(w) = wire.relevant_windows.last() {
            if w.end() > wire.duration + 1e-9 {
                return Err(schema(format!(
                    "window end {} exceeds duration {}",
                    w.end(),
                    wire.duration
                )));
            }
        }
        if let Some(&g) = wire.saliency_grades.iter().find(|&&g| g > MAX_GRADE) {
            return Err(schema(format!("grade {g} exceeds {MAX_GRADE}")));
        }
        records.push(AnnotationRecord {
            qid: wire.qid,
            query: wire.query,
            duration: wire.duration,
            relevant_windows: wire.relevant_windows,
            saliency_grades: wire.saliency_grades,
        });
    }
    Ok(records)
}

/// Writes an annotation JSONL file.
pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    write_jsonl(
        path,
        records.iter().map(|r| AnnotationWire {
            qid: r.qid.clone(),
            duration: r.duration,
            relevant_windows: r.relevant_windows.clone(),
            saliency_grades: r.saliency_grades.clone(),
            query: r.query.clone(),
        }),
    )
}

/// The ground-truth view of an annotation record.
pub fn annotation_to_ground_truth(rec: &AnnotationRecord) -> GroundTruth {
    GroundTruth {
        qid: rec.qid.clone(),
        windows: rec.relevant_windows.clone(),
        grades: if rec.saliency_grades.is_empty() {
            None
        } else {
            Some(rec.saliency_grades.clone())
        },
    }
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct PredictionWire {
    qid: String,
    pred_relevant_windows: Vec<(f64, f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pred_saliency_scores: Option<Vec<f64>>,
}

/// Reads a prediction JSONL file; windows are re-sorted by descending score
/// (stable) to restore the ranking invariant.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let wires: Vec<(usize, PredictionWire)> = read_jsonl(path)?;
    reject_duplicate_qids(path, wires.iter().map(|(l, w)| (*l, w.qid.as_str())))?;
    let mut records = Vec::with_capacity(wires.len());
    for (line, wire) in wires {
        let schema = |msg: String| Error::schema(path_str(path), line, msg);
        let mut windows = Vec::with_capacity(wire.pred_relevant_windows.len());
        for &(s, e, score) in &wire.pred_relevant_windows {
            if !score.is_finite() {
                return Err(schema(format!("non-finite score {score}")));
            }
            windows.push(ScoredWindow {
                span: Span::new(s, e).map_err(|err| schema(err.to_string()))?,
                score,
            });
        }
        if let Some(saliency) = &wire.pred_saliency_scores {
            check_finite_slice(path, line, "pred_saliency_scores", saliency)?;
        }
        let mut prediction = Prediction {
            qid: wire.qid,
            windows,
            saliency: wire.pred_saliency_scores,
        };
        prediction.sort_windows();
        records.push(prediction);
    }
    Ok(records)
}

/// Writes a prediction JSONL file.
pub fn write_predictions(path: &Path, records: &[Prediction]) -> Result<()> {
    write_jsonl(
        path,
        records.iter().map(|r| PredictionWire {
            qid: r.qid.clone(),
            pred_relevant_windows: r
                .windows
                .iter()
                .map(|w| (w.span.start(), w.span.end(), w.score))
                .collect(),
            pred_saliency_scores: r.saliency.clone(),
        }),
    )
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    role: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsManifest {
    version: u32,
    blob: String,
    tensors: Vec<TensorEntry>,
}

struct TensorWriter {
    entries: Vec<TensorEntry>,
    values: Vec<f64>,
}

impl TensorWriter {
    fn new() -> Self {
        TensorWriter {
            entries: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, name: String, role: &str, shape: Vec<usize>, values: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.entries.push(TensorEntry {
            name,
            role: role.into(),
            shape,
        });
        self.values.extend_from_slice(values);
    }

    fn matrix(&mut self, name: String, role: &str, m: &Matrix) {
        self.push(name, role, vec![m.rows(), m.cols()], m.data());
    }
}

/// Saves a model as a JSON manifest plus a sibling `.bin` blob of 32-bit
/// floats in manifest order.
pub fn save_model(manifest_path: &Path, model: &SaliencyModel) -> Result<()> {
    let mut w = TensorWriter::new();
    w.push(
        "local.alpha".into(),
        "local-affine",
        vec![1],
        &[model.local.alpha],
    );
    w.push(
        "local.beta".into(),
        "local-affine",
        vec![1],
        &[model.local.beta],
    );
    for (i, layer) in model.pooling.layers.iter().enumerate() {
        w.push(
            format!("pooling.{i}.query"),
            "pooling",
            vec![layer.query.len()],
            &layer.query,
        );
        w.matrix(format!("pooling.{i}.value_proj"), "pooling", &layer.value_proj);
    }
    for (i, proj) in model.cross_modal.iter().enumerate() {
        w.matrix(format!("cross_modal.{i}.w_q"), "w_q", &proj.w_q);
        w.matrix(format!("cross_modal.{i}.w_k"), "w_k", &proj.w_k);
        w.matrix(format!("cross_modal.{i}.w_v"), "w_v", &proj.w_v);
    }
    for (i, layer) in model.encoder.iter().enumerate() {
        w.matrix(format!("encoder.{i}.w_q"), "encoder-layer", &layer.w_q);
        w.matrix(format!("encoder.{i}.w_k"), "encoder-layer", &layer.w_k);
        w.matrix(format!("encoder.{i}.w_v"), "encoder-layer", &layer.w_v);
        w.matrix(format!("encoder.{i}.w_o"), "encoder-layer", &layer.w_o);
        for (name, values) in [
            ("ln1_scale", &layer.ln1_scale),
            ("ln1_shift", &layer.ln1_shift),
            ("ln2_scale", &layer.ln2_scale),
            ("ln2_shift", &layer.ln2_shift),
        ] {
            w.push(
                format!("encoder.{i}.{name}"),
                "encoder-layer",
                vec![values.len()],
                values,
            );
        }
        w.matrix(format!("encoder.{i}.ff_w1"), "encoder-layer", &layer.ff_w1);
        w.push(
            format!("encoder.{i}.ff_b1"),
            "encoder-layer",
            vec![layer.ff_b1.len()],
            &layer.ff_b1,
        );
        w.matrix(format!("encoder.{i}.ff_w2"), "encoder-layer", &layer.ff_w2);
        w.push(
            format!("encoder.{i}.ff_b2"),
            "encoder-layer",
            vec![layer.ff_b2.len()],
            &layer.ff_b2,
        );
    }
    for (prefix, role, head) in [
        ("saliency_head", "saliency-head", &model.saliency_head),
        ("detection_head", "detection-head", &model.detection_head),
        ("iou_head", "iou-head", &model.iou_head),
    ] {
        w.push(
            format!("{prefix}.weight"),
            role,
            vec![head.weight.len()],
            &head.weight,
        );
        w.push(format!("{prefix}.bias"), role, vec![1], &[head.bias]);
    }

    let blob_name = manifest_path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| format!("{s}.bin"))
        .unwrap_or_else(|| "weights.bin".into());
    let manifest = WeightsManifest {
        version: 1,
        blob: blob_name.clone(),
        tensors: w.entries,
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::schema(path_str(manifest_path), 0, e.to_string()))?;
    manifest_bytes.push(b'\n');
    fs::write(manifest_path, manifest_bytes)?;

    let mut blob = Vec::with_capacity(w.values.len() * 4);
    for v in &w.values {
        blob.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    fs::write(base.join(blob_name), blob)?;
    Ok(())
}

struct TensorReader {
    tensors: std::collections::BTreeMap<String, (Vec<usize>, Vec<f64>)>,
    manifest_path: String,
}

impl TensorReader {
    fn take(&mut self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        self.tensors.remove(name).ok_or_else(|| {
            Error::schema(
                self.manifest_path.clone(),
                0,
                format!("missing tensor {name:?}"),
            )
        })
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        let (shape, values) = self.take(name)?;
        if shape.len() != 1 {
            return Err(Error::schema(
                self.manifest_path.clone(),
                0,
                format!("tensor {name:?} should be rank 1, got shape {shape:?}"),
            ));
        }
        Ok(values)
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        let values = self.vector(name)?;
        if values.len() != 1 {
            return Err(Error::schema(
                self.manifest_path.clone(),
                0,
                format!("tensor {name:?} should hold one value, got {}", values.len()),
            ));
        }
        Ok(values[0])
    }

    fn matrix(&mut self, name: &str) -> Result<Matrix> {
        let (shape, values) = self.take(name)?;
        if shape.len() != 2 {
            return Err(Error::schema(
                self.manifest_path.clone(),
                0,
                format!("tensor {name:?} should be rank 2, got shape {shape:?}"),
            ));
        }
        Matrix::from_vec(shape[0], shape[1], values)
            .map_err(|e| Error::schema(self.manifest_path.clone(), 0, e.to_string()))
    }

    fn has(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }
}

/// Loads a model from its JSON manifest, reading the binary blob next to it.
pub fn load_model(manifest_path: &Path) -> Result<SaliencyModel> {
    let manifest_str = fs::read_to_string(manifest_path)?;
    let manifest: WeightsManifest = serde_json::from_str(&manifest_str)
        .map_err(|e| Error::schema(path_str(manifest_path), 0, e.to_string()))?;
    if manifest.version != 1 {
        return Err(Error::schema(
            path_str(manifest_path),
            0,
            format!("unsupported weights version {}", manifest.version),
        ));
    }
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let blob = fs::read(base.join(&manifest.blob))?;
    let expected_values: usize = manifest
        .tensors
        .iter()
        .map(|t| t.shape.iter().product::<usize>())
        .sum();
    if blob.len() != expected_values * 4 {
        return Err(Error::schema(
            path_str(manifest_path),
            0,
            format!(
                "blob {} holds {} bytes but the manifest declares {} ({} values)",
                manifest.blob,
                blob.len(),
                expected_values * 4,
                expected_values
            ),
        ));
    }
    let mut tensors = std::collections::BTreeMap::new();
    let mut offset = 0usize;
    for entry in &manifest.tensors {
        let count: usize = entry.shape.iter().product();
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let bytes: [u8; 4] = blob[offset..offset + 4].try_into().unwrap();
            values.push(f32::from_le_bytes(bytes) as f64);
            offset += 4;
        }
        if tensors
            .insert(entry.name.clone(), (entry.shape.clone(), values))
            .is_some()
        {
            return Err(Error::schema(
                path_str(manifest_path),
                0,
                format!("duplicate tensor {:?}", entry.name),
            ));
        }
    }
    let mut reader = TensorReader {
        tensors,
        manifest_path: path_str(manifest_path),
    };

    let local = AttentionWeights {
        alpha: reader.scalar("local.alpha")?,
        beta: reader.scalar("local.beta")?,
    };
    let mut pooling_layers = Vec::new();
    while reader.has(&format!("pooling.{}.query", pooling_layers.len())) {
        let i = pooling_layers.len();
        pooling_layers.push(PoolingLayer {
            query: reader.vector(&format!("pooling.{i}.query"))?,
            value_proj: reader.matrix(&format!("pooling.{i}.value_proj"))?,
        });
    }
    let mut cross_modal = Vec::new();
    while reader.has(&format!("cross_modal.{}.w_q", cross_modal.len())) {
        let i = cross_modal.len();
        cross_modal.push(ProjectionSet {
            w_q: reader.matrix(&format!("cross_modal.{i}.w_q"))?,
            w_k: reader.matrix(&format!("cross_modal.{i}.w_k"))?,
            w_v: reader.matrix(&format!("cross_modal.{i}.w_v"))?,
        });
    }
    let mut encoder = Vec::new();
    while reader.has(&format!("encoder.{}.w_q", encoder.len())) {
        let i = encoder.len();
        encoder.push(EncoderLayerWeights {
            w_q: reader.matrix(&format!("encoder.{i}.w_q"))?,
            w_k: reader.matrix(&format!("encoder.{i}.w_k"))?,
            w_v: reader.matrix(&format!("encoder.{i}.w_v"))?,
            w_o: reader.matrix(&format!("encoder.{i}.w_o"))?,
            ln1_scale: reader.vector(&format!("encoder.{i}.ln1_scale"))?,
            ln1_shift: reader.vector(&format!("encoder.{i}.ln1_shift"))?,
            ln2_scale: reader.vector(&format!("encoder.{i}.ln2_scale"))?,
            ln2_shift: reader.vector(&format!("encoder.{i}.ln2_shift"))?,
            ff_w1: reader.matrix(&format!("encoder.{i}.ff_w1"))?,
            ff_b1: reader.vector(&format!("encoder.{i}.ff_b1"))?,
            ff_w2: reader.matrix(&format!("encoder.{i}.ff_w2"))?,
            ff_b2: reader.vector(&format!("encoder.{i}.ff_b2"))?,
        });
    }
    let mut head = |prefix: &str| -> Result<LinearHead> {
        Ok(LinearHead {
            weight: reader.vector(&format!("{prefix}.weight"))?,
            bias: reader.scalar(&format!("{prefix}.bias"))?,
        })
    };
    let saliency_head = head("saliency_head")?;
    let detection_head = head("detection_head")?;
    let iou_head = head("iou_head")?;

    if pooling_layers.is_empty() {
        return Err(Error::schema(
            path_str(manifest_path),
            0,
            "weights declare no pooling layers",
        ));
    }
    if cross_modal.is_empty() {
        return Err(Error::schema(
            path_str(manifest_path),
            0,
            "weights declare no cross-modal layers",
        ));
    }
    let model = SaliencyModel {
        pooling: PoolingWeights {
            layers: pooling_layers,
        },
        local,
        cross_modal,
        encoder,
        saliency_head,
        detection_head,
        iou_head,
    };
    validate_model_dims(manifest_path, &model)?;
    Ok(model)
}

fn validate_model_dims(manifest_path: &Path, model: &SaliencyModel) -> Result<()> {
    let fail = |msg: String| Err(Error::schema(path_str(manifest_path), 0, msg));
    let d = model.pooling.layers[0].query.len();
    for (i, layer) in model.pooling.layers.iter().enumerate() {
        if layer.query.len() != d || layer.value_proj.shape() != (d, d) {
            return fail(format!("pooling layer {i} disagrees with token dim {d}"));
        }
    }
    let hidden = model.cross_modal[0].w_q.cols();
    let mut input = d;
    for (i, proj) in model.cross_modal.iter().enumerate() {
        if proj.w_q.shape() != (input, hidden)
            || proj.w_k.shape() != (d, hidden)
            || proj.w_v.shape() != (d, hidden)
        {
            return fail(format!(
                "cross-modal layer {i} does not chain {input}->{hidden} over token dim {d}"
            ));
        }
        input = hidden;
    }
    for (i, layer) in model.encoder.iter().enumerate() {
        if layer.w_q.shape() != (hidden, hidden) {
            return fail(format!("encoder layer {i} does not match hidden dim {hidden}"));
        }
    }
    for (name, head) in [
        ("saliency_head", &model.saliency_head),
        ("detection_head", &model.detection_head),
        ("iou_head", &model.iou_head),
    ] {
        if head.weight.len() != hidden {
            return fail(format!(
                "{name} expects dim {}, hidden dim is {hidden}",
                head.weight.len()
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic fixtures
// ---------------------------------------------------------------------------

/// Sizes for [`synth_fixtures`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub records: usize,
    pub min_clips: usize,
    pub max_clips: usize,
    pub dim: usize,
    pub hidden: usize,
    pub pooling_layers: usize,
    pub cross_modal_layers: usize,
    pub encoder_layers: usize,
    pub clip_len: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            records: 6,
            min_clips: 6,
            max_clips: 12,
            dim: 12,
            hidden: 8,
            pooling_layers: 2,
            cross_modal_layers: 2,
            encoder_layers: 2,
            clip_len: 2.0,
        }
    }
}

/// Files produced by [`synth_fixtures`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutput {
    pub embeddings: PathBuf,
    pub annotations: PathBuf,
    pub weights: PathBuf,
}

fn f32_round(x: f64) -> f64 {
    x as f32 as f64
}

fn random_unit_vector(rng: &mut Xoshiro256PlusPlus, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let norm = crate::numerics::row_norm(&v).max(1e-6);
    v.into_iter().map(|x| f32_round(x / norm)).collect()
}

fn random_matrix(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| f32_round(rng.uniform(-scale, scale)))
}

/// Generates a deterministic embeddings/annotations/weights fixture set.
///
/// All randomness flows from one xoshiro256++ stream seeded with `seed`, and
/// every value is rounded to f32 before leaving this function, so the same
/// seed produces byte-identical files on every platform.
pub fn synth_fixtures(seed: u64, sizes: &SynthConfig, out_dir: &Path) -> Result<SynthOutput> {
    if sizes.records == 0
        || sizes.min_clips == 0
        || sizes.max_clips < sizes.min_clips
        || sizes.dim == 0
        || sizes.hidden == 0
        || sizes.pooling_layers == 0
        || sizes.cross_modal_layers == 0
        || !(sizes.clip_len.is_finite() && sizes.clip_len > 0.0)
    {
        return Err(Error::invalid(
            "synth_fixtures",
            format!("inconsistent sizes: {sizes:?}"),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);

    let mut embeddings = Vec::with_capacity(sizes.records);
    let mut annotations = Vec::with_capacity(sizes.records);
    for r in 0..sizes.records {
        let clips = rng.range(sizes.min_clips, sizes.max_clips + 1);
        let caption = random_unit_vector(&mut rng, sizes.dim);
        // A true moment: clips inside it lean toward the caption.
        let moment_start = rng.below(clips);
        let moment_len = 1 + rng.below((clips - moment_start).min(4));
        let mut rows = Vec::with_capacity(clips);
        for c in 0..clips {
            let noise = random_unit_vector(&mut rng, sizes.dim);
            let in_moment = c >= moment_start && c < moment_start + moment_len;
            let blend = if in_moment { 0.75 } else { 0.15 };
            let row: Vec<f64> = caption
                .iter()
                .zip(&noise)
                .map(|(cap, n)| f32_round(blend * cap + (1.0 - blend) * n))
                .collect();
            rows.push(row);
        }
        let id = format!("synth-{seed}-{r:04}");
        let orig_window = Span::new(
            moment_start as f64 * sizes.clip_len,
            (moment_start + moment_len) as f64 * sizes.clip_len,
        )?;
        embeddings.push(EmbeddingRecord {
            id: id.clone(),
            clip_embeddings: Matrix::from_rows(&rows)?,
            caption_embedding: Matrix::row_vector(caption),
            clip_len: sizes.clip_len,
            orig_window: Some(orig_window),
            query: None,
        });

        // Independent ground truth over the same clip grid.
        let gt_start = rng.below(clips);
        let gt_len = 1 + rng.below((clips - gt_start).min(5));
        let window = Span::new(
            gt_start as f64 * sizes.clip_len,
            (gt_start + gt_len) as f64 * sizes.clip_len,
        )?;
        let mut grades = vec![0u8; clips];
        for (c, grade) in grades.iter_mut().enumerate() {
            if c >= gt_start && c < gt_start + gt_len {
                *grade = 1 + rng.below(4) as u8;
            }
        }
        // Guarantee one top-grade clip so highlight metrics always have a
        // positive.
        grades[gt_start] = 4;
        annotations.push(AnnotationRecord {
            qid: id,
            query: None,
            duration: clips as f64 * sizes.clip_len,
            relevant_windows: vec![window],
            saliency_grades: grades,
        });
    }

    let d = sizes.dim;
    let h = sizes.hidden;
    let ff = 2 * h;
    let scale = 1.0 / (d as f64).sqrt();
    let mut pooling = Vec::new();
    for _ in 0..sizes.pooling_layers {
        pooling.push(PoolingLayer {
            query: (0..d).map(|_| f32_round(rng.uniform(-scale, scale))).collect(),
            value_proj: random_matrix(&mut rng, d, d, scale),
        });
    }
    let mut cross_modal = Vec::new();
    let mut input = d;
    for _ in 0..sizes.cross_modal_layers {
        cross_modal.push(ProjectionSet {
            w_q: random_matrix(&mut rng, input, h, scale),
            w_k: random_matrix(&mut rng, d, h, scale),
            w_v: random_matrix(&mut rng, d, h, scale),
        });
        input = h;
    }
    let hscale = 1.0 / (h as f64).sqrt();
    let mut encoder = Vec::new();
    for _ in 0..sizes.encoder_layers {
        encoder.push(EncoderLayerWeights {
            w_q: random_matrix(&mut rng, h, h, hscale),
            w_k: random_matrix(&mut rng, h, h, hscale),
            w_v: random_matrix(&mut rng, h, h, hscale),
            w_o: random_matrix(&mut rng, h, h, hscale),
            ln1_scale: vec![1.0; h],
            ln1_shift: vec![0.0; h],
            ln2_scale: vec![1.0; h],
            ln2_shift: vec![0.0; h],
            ff_w1: random_matrix(&mut rng, h, ff, hscale),
            ff_b1: vec![0.0; ff],
            ff_w2: random_matrix(&mut rng, ff, h, hscale),
            ff_b2: vec![0.0; h],
        });
    }
    let linear_head = |rng: &mut Xoshiro256PlusPlus| LinearHead {
        weight: (0..h).map(|_| f32_round(rng.uniform(-hscale, hscale))).collect(),
        bias: f32_round(rng.uniform(-0.1, 0.1)),
    };
    let model = SaliencyModel {
        pooling: PoolingWeights { layers: pooling },
        local: AttentionWeights {
            alpha: 1.0,
            beta: 0.0,
        },
        cross_modal,
        encoder,
        saliency_head: linear_head(&mut rng),
        detection_head: linear_head(&mut rng),
        iou_head: linear_head(&mut rng),
    };

    let out = SynthOutput {
        embeddings: out_dir.join("embeddings.jsonl"),
        annotations: out_dir.join("annotations.jsonl"),
        weights: out_dir.join("weights.json"),
    };
    write_embeddings(&out.embeddings, &embeddings)?;
    write_annotations(&out.annotations, &annotations)?;
    save_model(&out.weights, &model)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_records() -> Vec<EmbeddingRecord> {
        vec![
            EmbeddingRecord {
                id: "a".into(),
                clip_embeddings: Matrix::from_rows(&[
                    vec![1.0, 0.0],
                    vec![0.5, 0.5],
                ])
                .unwrap(),
                caption_embedding: Matrix::row_vector(vec![1.0, 0.25]),
                clip_len: 2.0,
                orig_window: Some(Span::new(0.0, 2.0).unwrap()),
                query: Some("a person waves".into()),
            },
            EmbeddingRecord {
                id: "b".into(),
                clip_embeddings: Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap(),
                caption_embedding: Matrix::row_vector(vec![0.0, 1.0]),
                clip_len: 1.5,
                orig_window: None,
                query: None,
            },
        ]
    }

    #[test]
    fn embeddings_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let records = sample_records();
        write_embeddings(&path, &records).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn embeddings_round_trip_with_sidecar() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let records = sample_records();
        write_embeddings_with_sidecar(&path, &records).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back, records);
        assert!(dir.path().join("emb.0000.mrke").exists());
    }

    #[test]
    fn writers_are_byte_deterministic() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let records = sample_records();
        write_embeddings(&a, &records).unwrap();
        write_embeddings(&b, &records).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(
            &path,
            "{\"id\":\"ok\",\"clip_len\":2.0,\"caption_embedding\":[1.0],\"clip_embeddings\":[[1.0]]}\nnot json\n",
        )
        .unwrap();
        match read_embeddings(&path) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_embeddings_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("inf.jsonl");
        fs::write(
            &path,
            "{\"id\":\"x\",\"clip_len\":2.0,\"caption_embedding\":[1e999],\"clip_embeddings\":[[1.0]]}\n",
        )
        .unwrap();
        let err = read_embeddings(&path).unwrap_err().to_string();
        assert!(err.contains("non-finite") || err.contains("number out of range"), "{err}");
    }

    #[test]
    fn sidecar_truncation_reports_byte_counts() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("clip.mrke");
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        write_matrix_sidecar(&path, &m).unwrap();
        let full = fs::read(&path).unwrap();
        fs::write(&path, &full[..full.len() - 3]).unwrap();
        let err = read_matrix_sidecar(&path).unwrap_err().to_string();
        assert!(err.contains("16") && err.contains("13"), "{err}");
    }

    #[test]
    fn annotations_round_trip_and_validate() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ann.jsonl");
        let records = vec![AnnotationRecord {
            qid: "q1".into(),
            query: None,
            duration: 8.0,
            relevant_windows: vec![
                Span::new(0.0, 2.0).unwrap(),
                Span::new(4.0, 8.0).unwrap(),
            ],
            saliency_grades: vec![2, 0, 3, 4],
        }];
        write_annotations(&path, &records).unwrap();
        assert_eq!(read_annotations(&path).unwrap(), records);

        fs::write(
            &path,
            "{\"qid\":\"q\",\"duration\":8.0,\"relevant_windows\":[[4,8],[0,2]],\"saliency_grades\":[]}\n",
        )
        .unwrap();
        assert!(read_annotations(&path).is_err());
    }

    #[test]
    fn predictions_round_trip_and_sort() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("pred.jsonl");
        fs::write(
            &path,
            "{\"qid\":\"q\",\"pred_relevant_windows\":[[0,2,0.3],[4,6,0.9]],\"pred_saliency_scores\":[0.1,0.2]}\n",
        )
        .unwrap();
        let preds = read_predictions(&path).unwrap();
        assert_eq!(preds[0].windows[0].score, 0.9);
        let out = dir.path().join("out.jsonl");
        write_predictions(&out, &preds).unwrap();
        assert_eq!(read_predictions(&out).unwrap(), preds);
    }

    #[test]
    fn duplicate_qids_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        fs::write(
            &path,
            "{\"qid\":\"q\",\"pred_relevant_windows\":[]}\n{\"qid\":\"q\",\"pred_relevant_windows\":[]}\n",
        )
        .unwrap();
        assert!(read_predictions(&path).is_err());
    }

    #[test]
    fn model_round_trip() {
        let dir = tempdir().unwrap();
        let manifest = dir.path().join("weights.json");
        let tmp = tempdir().unwrap();
        let synth = synth_fixtures(3, &SynthConfig::default(), tmp.path()).unwrap();
        let model = load_model(&synth.weights).unwrap();
        save_model(&manifest, &model).unwrap();
        let back = load_model(&manifest).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn blob_length_mismatch_is_reported() {
        let dir = tempdir().unwrap();
        let synth = synth_fixtures(4, &SynthConfig::default(), dir.path()).unwrap();
        let blob_path = dir.path().join("weights.bin");
        let blob = fs::read(&blob_path).unwrap();
        fs::write(&blob_path, &blob[..blob.len() - 4]).unwrap();
        let err = load_model(&synth.weights).unwrap_err().to_string();
        assert!(err.contains("bytes"), "{err}");
    }

    #[test]
    fn same_seed_same_bytes_different_seed_different_ids() {
        let a = tempdir().unwrap();
        let b = tempdir().unwrap();
        let out_a = synth_fixtures(0, &SynthConfig::default(), a.path()).unwrap();
        let out_b = synth_fixtures(0, &SynthConfig::default(), b.path()).unwrap();
        assert_eq!(
            fs::read(&out_a.embeddings).unwrap(),
            fs::read(&out_b.embeddings).unwrap()
        );
        assert_eq!(
            fs::read(&out_a.annotations).unwrap(),
            fs::read(&out_b.annotations).unwrap()
        );

        let c = tempdir().unwrap();
        let out_c = synth_fixtures(1, &SynthConfig::default(), c.path()).unwrap();
        let first_a = read_embeddings(&out_a.embeddings).unwrap();
        let first_c = read_embeddings(&out_c.embeddings).unwrap();
        assert_ne!(first_a[0].id, first_c[0].id);
    }

    #[test]
    fn synth_annotations_satisfy_grade_window_consistency() {
        let dir = tempdir().unwrap();
        let out = synth_fixtures(11, &SynthConfig::default(), dir.path()).unwrap();
        for rec in read_annotations(&out.annotations).unwrap() {
            let clip_len = rec.duration / rec.saliency_grades.len() as f64;
            for (i, &g) in rec.saliency_grades.iter().enumerate() {
                let mid = (i as f64 + 0.5) * clip_len;
                let inside = rec.relevant_windows.iter().any(|w| w.contains(mid));
                assert_eq!(g >= 1, inside);
            }
        }
    }
}
