//! Annotates one embedding record: similarity scores, the derived minimum
//! similarity, the new positive windows, and per-clip grades.

use mrkit::annotate::{
    annotate, build_positive_intervals, clip_similarities, min_score, EmbeddingRecord,
};
use mrkit::numerics::Matrix;
use mrkit::spans::Span;

fn main() -> mrkit::Result<()> {
    // Eight 2-second clips; the caption matches the first two and the last.
    let caption = vec![1.0, 0.0];
    let clips = vec![
        vec![1.0, 0.0],
        vec![2.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
        vec![-1.0, 0.0],
        vec![1.0, 2.0],
        vec![3.0, 4.0],
        vec![0.5, 0.0],
    ];
    let rec = EmbeddingRecord {
        id: "demo".into(),
        clip_embeddings: Matrix::from_rows(&clips)?,
        caption_embedding: Matrix::row_vector(caption),
        clip_len: 2.0,
        orig_window: Some(Span::new(0.0, 4.0)?),
        query: Some("a red ball rolls across the floor".into()),
    };

    let similarities = clip_similarities(&rec)?;
    println!("similarities: {:?}", similarities.scores());

    let s_min = min_score(&similarities, rec.orig_window.unwrap(), rec.clip_len)?;
    println!("minimum similarity: {s_min}");

    let windows = build_positive_intervals(&similarities, s_min, rec.clip_len, 1);
    for w in &windows {
        println!("window: [{}, {}]", w.start(), w.end());
    }

    let annotation = annotate(&rec, 1)?;
    println!("grades: {:?}", annotation.saliency_grades);
    Ok(())
}
