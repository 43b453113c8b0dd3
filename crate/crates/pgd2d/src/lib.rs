//! Preference-guided diffusion on a 2D toy mixture.
//!
//! The crate trains a small denoising diffusion model on a labeled
//! 8-Gaussians dataset, aligns it with preferences — Diffusion-DPO
//! ([`alignment`]) or supervised finetuning on the positive/negative
//! subsets — and samples with CFG-style compositions ([`guidance`]):
//! single-branch preference guidance from a tuned checkpoint, or
//! contrastive guidance from an independently trained winner/loser
//! pair. [`merge_distill`] collapses multi-model guidance back into a
//! single checkpoint (weight-space merge or offline distillation) and
//! [`metrics`] quantifies runs.
//!
//! Start with the runnable examples (`cargo run --release --example
//! pgd_weight_sweep`); the `pgd2d` binary wraps the same functionality
//! as a reproducible file-based pipeline.
//!
//! All state is `f64` and explicitly seeded. Guided sampling consumes
//! exactly the randomness of unguided sampling, so the guidance
//! reductions (`w = 0`, `w = 1`, tied branches, cutoff `s = 0`) are
//! bit-identical to sampling the underlying models.

pub mod alignment;
pub mod cli;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod guidance;
pub mod merge_distill;
pub mod metrics;
pub mod numerics;

pub use error::{Error, Result};
