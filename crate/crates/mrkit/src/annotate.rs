//! Automatic annotation: converts a video's clip embeddings plus one caption
//! embedding into moment-retrieval windows and per-clip highlight grades.
//!
//! The pipeline is: cosine similarity per clip, a minimum-score threshold
//! derived from the original positive window (mean minus three population
//! standard deviations), contiguous runs of above-threshold clips as new
//! windows, and a four-level grading of the clips inside those windows.
//!
//! Clip membership anywhere in this module is by clip-midpoint containment.
//! Records are independent, so callers may process them in parallel; the
//! output for a record depends only on that record's bytes.

use crate::error::{Error, Result};
use crate::numerics::{dot, row_norm, Matrix};
use crate::saliency::SaliencyVector;
use crate::spans::Span;

/// One video-caption pair ready for annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    /// `L x d` clip embeddings.
    pub clip_embeddings: Matrix,
    /// `1 x d` caption embedding.
    pub caption_embedding: Matrix,
    /// Clip duration in seconds.
    pub clip_len: f64,
    /// The source dataset's positive window, when known. Required by
    /// [`annotate`]; inference-only consumers may leave it out.
    pub orig_window: Option<Span>,
    pub query: Option<String>,
}

impl EmbeddingRecord {
    pub fn num_clips(&self) -> usize {
        self.clip_embeddings.rows()
    }

    pub fn duration(&self) -> f64 {
        self.num_clips() as f64 * self.clip_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.clip_embeddings.rows() == 0 {
            return Err(Error::degenerate(&self.id, "record has no clips"));
        }
        if self.clip_embeddings.cols() != self.caption_embedding.cols()
            || self.caption_embedding.rows() != 1
        {
            return Err(Error::degenerate(
                &self.id,
                format!(
                    "caption embedding is {}x{} but clips are {}x{}",
                    self.caption_embedding.rows(),
                    self.caption_embedding.cols(),
                    self.clip_embeddings.rows(),
                    self.clip_embeddings.cols()
                ),
            ));
        }
        if !(self.clip_len.is_finite() && self.clip_len > 0.0) {
            return Err(Error::degenerate(
                &self.id,
                format!("clip_len must be positive, got {}", self.clip_len),
            ));
        }
        if let Some(w) = self.orig_window {
            if w.end() > self.duration() + 1e-9 {
                return Err(Error::degenerate(
                    &self.id,
                    format!(
                        "original window [{}, {}] exceeds the {}s video",
                        w.start(),
                        w.end(),
                        self.duration()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// One query's ground truth: relevant windows plus per-clip grades
/// (0 = outside every window, 1-4 inside).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub qid: String,
    pub query: Option<String>,
    pub duration: f64,
    pub relevant_windows: Vec<Span>,
    pub saliency_grades: Vec<u8>,
}

/// Midpoint of clip `i` on the clip grid.
pub fn clip_midpoint(clip: usize, clip_len: f64) -> f64 {
    (clip as f64 + 0.5) * clip_len
}

/// Cosine similarity between every clip embedding and the caption embedding.
pub fn clip_similarities(rec: &EmbeddingRecord) -> Result<SaliencyVector> {
    rec.validate()?;
    let caption = rec.caption_embedding.row(0);
    let caption_norm = row_norm(caption);
    if caption_norm == 0.0 {
        return Err(Error::degenerate(&rec.id, "caption embedding has zero norm"));
    }
    let mut scores = Vec::with_capacity(rec.num_clips());
    for i in 0..rec.num_clips() {
        let clip = rec.clip_embeddings.row(i);
        let clip_norm = row_norm(clip);
        if clip_norm == 0.0 {
            return Err(Error::degenerate(
                &rec.id,
                format!("clip {i} embedding has zero norm"),
            ));
        }
        scores.push(dot(clip, caption) / (clip_norm * caption_norm));
    }
    SaliencyVector::new(scores)
}

/// Minimum similarity for a clip to join a positive interval: the mean of
/// the similarities inside the original window minus three population
/// standard deviations.
pub fn min_score(
    similarities: &SaliencyVector,
    original_window: Span,
    clip_len: f64,
) -> Result<f64> {
    let inside: Vec<f64> = similarities
        .scores()
        .iter()
        .enumerate()
        .filter(|(i, _)| original_window.contains(clip_midpoint(*i, clip_len)))
        .map(|(_, &s)| s)
        .collect();
    if inside.is_empty() {
        return Err(Error::Empty {
            op: "min_score",
            what: "clips inside the original window",
        });
    }
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let var = inside.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(mean - 3.0 * var.sqrt())
}

/// Marks clips with similarity at or above `s_min` and turns maximal runs of
/// consecutive positives into windows; runs shorter than `min_run` clips are
/// dropped.
pub fn build_positive_intervals(
    similarities: &SaliencyVector,
    s_min: f64,
    clip_len: f64,
    min_run: usize,
) -> Vec<Span> {
    let min_run = min_run.max(1);
    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    let flush = |intervals: &mut Vec<Span>, start: usize, end_exclusive: usize| {
        if end_exclusive - start >= min_run {
            intervals.push(
                Span::new(start as f64 * clip_len, end_exclusive as f64 * clip_len)
                    .expect("clip-grid endpoints form valid spans"),
            );
        }
    };
    for (i, &s) in similarities.scores().iter().enumerate() {
        if s >= s_min {
            run_start.get_or_insert(i);
        } else if let Some(start) = run_start.take() {
            flush(&mut intervals, start, i);
        }
    }
    if let Some(start) = run_start {
        flush(&mut intervals, start, similarities.len());
    }
    intervals
}

/// Grades every clip: 0 outside all intervals; inside, the four levels are
/// cut at the positive-clip mean and plus/minus 1.5 population standard
/// deviations. A degenerate spread (`std == 0`) grades all positives 3.
pub fn grade_clips(similarities: &SaliencyVector, intervals: &[Span], clip_len: f64) -> Vec<u8> {
    let positive: Vec<usize> = (0..similarities.len())
        .filter(|&i| {
            let mid = clip_midpoint(i, clip_len);
            intervals.iter().any(|w| w.contains(mid))
        })
        .collect();
    let mut grades = vec![0u8; similarities.len()];
    if positive.is_empty() {
        return grades;
    }
    let values: Vec<f64> = positive.iter().map(|&i| similarities.get(i)).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for (&i, &s) in positive.iter().zip(&values) {
        grades[i] = if std == 0.0 {
            3
        } else if s > mean + 1.5 * std {
            4
        } else if s > mean {
            3
        } else if s > mean - 1.5 * std {
            2
        } else {
            1
        };
    }
    grades
}

/// Runs the whole pipeline on one record.
pub fn annotate(rec: &EmbeddingRecord, min_run: usize) -> Result<AnnotationRecord> {
    rec.validate()?;
    let original_window = rec.orig_window.ok_or_else(|| {
        Error::degenerate(&rec.id, "annotation needs the original positive window")
    })?;
    let similarities = clip_similarities(rec)?;
    let s_min = min_score(&similarities, original_window, rec.clip_len).map_err(|e| match e {
        Error::Empty { .. } => {
            Error::degenerate(&rec.id, "original window covers no clip midpoint")
        }
        other => other,
    })?;
    let windows = build_positive_intervals(&similarities, s_min, rec.clip_len, min_run);
    let grades = grade_clips(&similarities, &windows, rec.clip_len);
    Ok(AnnotationRecord {
        qid: rec.id.clone(),
        query: rec.query.clone(),
        duration: rec.duration(),
        relevant_windows: windows,
        saliency_grades: grades,
    })
}
