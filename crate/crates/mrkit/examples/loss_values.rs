//! Computes every training-objective value on a small synthetic instance
//! and combines them into the weighted total.

use mrkit::detector::{Detection, DetectionSource};
use mrkit::losses::{
    atss_loss, aux_loss, detr_loss, highlight_loss, total_objective, AtssSample, AuxInputs,
    LossParts, LossWeights, MatchedPair, SaliencySupervision,
};
use mrkit::saliency::SaliencyVector;
use mrkit::spans::{iou, Span};

fn main() -> mrkit::Result<()> {
    let duration = 16.0;
    let weights = LossWeights::default();

    let scores = SaliencyVector::new(vec![1.2, 0.8, -0.5, 0.1, -1.0])?;
    let supervision = SaliencySupervision::new(vec![4, 3, 0, 2, 0], false)?;
    let hl = highlight_loss(&scores, &supervision, 0.2, 0.5)?;

    let gt = Span::new(2.0, 8.0)?;
    let det = Detection::new(Span::new(2.5, 7.0)?, 0.85, 0.7, DetectionSource::Detr)?;
    let detr = detr_loss(
        &[MatchedPair {
            det,
            gt,
            iou_target: iou(det.span, gt),
        }],
        duration,
        &weights,
    );

    let atss = atss_loss(
        &[AtssSample {
            anchor_center: 5.0,
            pred_span: Span::new(2.0, 7.5)?,
            class_prob: 0.8,
            pred_centerness: 0.75,
            gt,
        }],
        duration,
        &weights,
    );

    let aux = aux_loss(&AuxInputs {
        clip_logits: &[2.0, 1.5, -1.0, 0.2, -2.0],
        in_moment: &[true, true, false, true, false],
        moment_feature: &[0.8, 0.6],
        sentence: &[1.0, 0.0],
    })?;

    let parts = LossParts {
        atss,
        detr,
        hl,
        aux,
    };
    println!("highlight loss:   {hl:.6}");
    println!("one-to-one loss:  {detr:.6}");
    println!("anchor-head loss: {atss:.6}");
    println!("auxiliary loss:   {aux:.6}");
    println!("total objective:  {:.6}", total_objective(&parts, &weights));
    Ok(())
}
