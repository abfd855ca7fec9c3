//! mrkit: a moment-retrieval and highlight-detection toolkit.
//!
//! The library operates on precomputed clip and text embeddings and covers
//! the full desk-scale pipeline:
//!
//! - [`numerics`]: the dense-matrix substrate everything else shares.
//! - [`spans`]: 1D interval geometry (IoU, GIoU, centerness).
//! - [`saliency`]: pooled sentence vectors, local and global saliency
//!   scores, saliency-guided cross attention, and the forward chain.
//! - [`detector`]: anchor grids, adaptive sample selection, one-to-one
//!   matching, confidence combination, and weighted span fusion.
//! - [`losses`]: forward-only values of every training objective.
//! - [`annotate`]: automatic moment/highlight annotation from embeddings.
//! - [`metrics`]: benchmark evaluation (recall, mAP, mIoU, HIT@1).
//! - [`io`]: the JSONL/binary file formats and synthetic fixtures.
//!
//! Every operation is a pure function of its inputs; values can be shared
//! across threads freely and identical inputs produce identical bytes.
//!
//! The `mrkit` binary wires the same functions into `annotate`, `infer`,
//! `fuse`, `score-losses`, `eval`, and `synth` subcommands; the `examples/`
//! directory shows each capability as a small runnable program.

pub mod annotate;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod numerics;
pub mod rng;
pub mod saliency;
pub mod spans;

pub use error::{Error, Result};
pub use numerics::Matrix;
pub use saliency::SaliencyVector;
pub use spans::Span;
