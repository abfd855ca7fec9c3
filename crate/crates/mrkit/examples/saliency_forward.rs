//! Runs the saliency chain step by step on a tiny hand-built model:
//! pooled sentence vector, local scores, gated cross attention, encoder,
//! amplifier, and global scores.

use mrkit::numerics::Matrix;
use mrkit::saliency::{
    encoder_layer, global_saliency, local_saliency, pooling_encoder, saliency_amplify, sgca,
    AttentionWeights, EncoderLayerWeights, GateAxis, LinearHead, PoolingLayer, PoolingWeights,
    ProjectionSet,
};

fn main() -> mrkit::Result<()> {
    // Four video clips and three text tokens in a shared 4-dim space.
    let clips = Matrix::from_rows(&[
        vec![0.9, 0.1, 0.0, 0.2],
        vec![0.8, 0.2, 0.1, 0.1],
        vec![-0.3, 0.9, 0.4, 0.0],
        vec![0.0, -0.2, 0.9, 0.5],
    ])?;
    let text = Matrix::from_rows(&[
        vec![1.0, 0.0, 0.0, 0.1],
        vec![0.7, 0.3, 0.0, 0.0],
        vec![0.9, 0.1, 0.1, 0.0],
    ])?;

    let pooling = PoolingWeights {
        layers: vec![PoolingLayer {
            query: vec![0.5, 0.5, 0.0, 0.0],
            value_proj: Matrix::identity(4),
        }],
    };
    let sentence = pooling_encoder(&text, &pooling)?;
    println!("sentence vector: {:?}", sentence.row(0));

    let local = local_saliency(&sentence, &clips, &AttentionWeights::default())?;
    println!("local saliency:  {:?}", local.scores());

    let proj = ProjectionSet {
        w_q: Matrix::identity(4),
        w_k: Matrix::identity(4),
        w_v: Matrix::identity(4),
    };
    let cross = sgca(&clips, &text, &local, &proj, GateAxis::Video)?;
    let encoded = encoder_layer(&cross, &EncoderLayerWeights::zeros(4, 8))?;

    let amplified = saliency_amplify(&encoded, &local)?;
    let head = LinearHead {
        weight: vec![0.4, -0.1, 0.2, 0.0],
        bias: 0.05,
    };
    let global = global_saliency(&local, &amplified, &head)?;
    println!("global saliency: {:?}", global.scores());

    let best = (0..global.len())
        .max_by(|&a, &b| global.get(a).partial_cmp(&global.get(b)).unwrap())
        .unwrap();
    println!("most salient clip: {best}");
    Ok(())
}
