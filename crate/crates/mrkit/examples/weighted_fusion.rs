//! Fuses overlapping detections from two heads into score-weighted spans
//! and ranks them by combined confidence.

use mrkit::detector::{combined_confidence, weighted_fuse, Detection, DetectionSource};
use mrkit::spans::Span;

fn main() -> mrkit::Result<()> {
    let raw = [
        (0.0, 4.0, 0.9, 0.8, DetectionSource::Atss),
        (0.5, 4.5, 0.7, 0.9, DetectionSource::Detr),
        (10.0, 14.0, 0.6, 0.5, DetectionSource::Atss),
        (10.2, 13.8, 0.5, 0.6, DetectionSource::Detr),
        (17.0, 19.0, 0.3, 0.2, DetectionSource::Atss),
    ];
    let alpha = 0.5;
    let mut detections = Vec::new();
    for (start, end, p, pred_iou, source) in raw {
        let det = Detection::new(Span::new(start, end)?, p, pred_iou, source)?;
        // Rank and fuse by the combined classification/localization score.
        detections.push(Detection {
            class_prob: combined_confidence(det.class_prob, det.pred_iou, alpha),
            ..det
        });
    }

    let fused = weighted_fuse(&detections, 0.5);
    println!("{} detections fused into {} spans:", detections.len(), fused.len());
    for det in &fused {
        println!(
            "  [{:6.3}, {:6.3}] score {:.4} ({:?})",
            det.span.start(),
            det.span.end(),
            det.class_prob,
            det.source
        );
    }
    Ok(())
}
