//! One-to-one matching between scored detections and ground-truth spans,
//! with the cost matrix printed for inspection.

use mrkit::detector::{hungarian_match, match_cost, Detection, DetectionSource, MatchWeights};
use mrkit::spans::Span;

fn main() -> mrkit::Result<()> {
    let duration = 20.0;
    let dets = vec![
        Detection::new(Span::new(0.0, 4.0)?, 0.9, 0.8, DetectionSource::Detr)?,
        Detection::new(Span::new(5.0, 9.0)?, 0.6, 0.5, DetectionSource::Detr)?,
        Detection::new(Span::new(12.0, 18.0)?, 0.8, 0.9, DetectionSource::Detr)?,
    ];
    let gts = vec![Span::new(1.0, 4.0)?, Span::new(13.0, 17.0)?];
    let weights = MatchWeights::default();

    println!("cost matrix (rows = detections, cols = ground truths):");
    for det in &dets {
        let row: Vec<String> = gts
            .iter()
            .map(|&gt| format!("{:7.3}", match_cost(det, gt, duration, &weights)))
            .collect();
        println!("  [{}]", row.join(", "));
    }

    let result = hungarian_match(&dets, &gts, duration, &weights);
    for &(q, g) in &result.pairs {
        println!(
            "detection {q} [{}, {}] -> ground truth {g} [{}, {}]",
            dets[q].span.start(),
            dets[q].span.end(),
            gts[g].start(),
            gts[g].end()
        );
    }
    println!("unmatched detections: {:?}", result.unmatched_queries);
    Ok(())
}
