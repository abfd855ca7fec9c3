//! Generates a multi-scale anchor grid for a 10-clip video and assigns
//! positive anchors to two ground-truth moments.

use mrkit::detector::{atss_assign, generate_anchors, AnchorLevel};
use mrkit::spans::Span;

fn main() -> mrkit::Result<()> {
    let num_clips = 10;
    let clip_len = 2.0;
    let levels = [
        AnchorLevel {
            stride: 2.0,
            width_multiplier: 4.0,
        },
        AnchorLevel {
            stride: 4.0,
            width_multiplier: 4.0,
        },
    ];
    let anchors = generate_anchors(num_clips, clip_len, &levels)?;
    println!("{} anchors over a {}s video", anchors.len(), num_clips as f64 * clip_len);

    let gts = vec![Span::new(2.0, 8.0)?, Span::new(14.0, 18.0)?];
    let assignment = atss_assign(&anchors, &gts, 4)?;
    for (g, positives) in assignment.positives.iter().enumerate() {
        println!(
            "ground truth {g} [{}, {}]: {} positive anchors",
            gts[g].start(),
            gts[g].end(),
            positives.len()
        );
        for &a in positives {
            let anchor = &anchors[a];
            println!(
                "  anchor {a} (level {}): [{}, {}]",
                anchor.level,
                anchor.span.start(),
                anchor.span.end()
            );
        }
    }
    Ok(())
}
