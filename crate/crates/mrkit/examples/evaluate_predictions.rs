//! Evaluates a small prediction set: recall@1, mAP over a threshold sweep,
//! mean IoU, and the highlight metrics.

use mrkit::metrics::{
    default_map_thresholds, hd_map, hit_at_1, map_avg, mean_average_precision, mean_iou,
    recall_at_1, GroundTruth, Prediction, ScoredWindow,
};
use mrkit::spans::Span;

fn main() -> mrkit::Result<()> {
    let gts = vec![
        GroundTruth {
            qid: "q1".into(),
            windows: vec![Span::new(0.0, 4.0)?, Span::new(10.0, 14.0)?],
            grades: Some(vec![4, 3, 0, 0, 0, 4, 2]),
        },
        GroundTruth {
            qid: "q2".into(),
            windows: vec![Span::new(2.0, 6.0)?],
            grades: Some(vec![0, 4, 3, 0]),
        },
    ];
    let preds = vec![
        Prediction {
            qid: "q1".into(),
            windows: vec![
                ScoredWindow {
                    span: Span::new(0.0, 4.0)?,
                    score: 0.95,
                },
                ScoredWindow {
                    span: Span::new(9.0, 14.0)?,
                    score: 0.7,
                },
            ],
            saliency: Some(vec![0.9, 0.6, 0.1, 0.0, 0.2, 0.8, 0.3]),
        },
        Prediction {
            qid: "q2".into(),
            windows: vec![ScoredWindow {
                span: Span::new(2.0, 5.0)?,
                score: 0.8,
            }],
            saliency: Some(vec![0.1, 0.7, 0.9, 0.2]),
        },
    ];

    for threshold in [0.5, 0.7] {
        println!("R1@{threshold}: {:.4}", recall_at_1(&gts, &preds, threshold));
        println!(
            "mAP@{threshold}: {:.4}",
            mean_average_precision(&gts, &preds, threshold)
        );
    }
    println!(
        "mAP@avg: {:.4}",
        map_avg(&gts, &preds, &default_map_thresholds())
    );
    println!("mIoU: {:.4}", mean_iou(&gts, &preds));

    let hd = hd_map(&gts, &preds, 4);
    let hit = hit_at_1(&gts, &preds, 4);
    println!(
        "HD mAP: {:.4}, HIT@1: {:.4} ({} videos evaluated, {} skipped)",
        hd.value, hit.value, hd.evaluated, hd.skipped
    );
    Ok(())
}
