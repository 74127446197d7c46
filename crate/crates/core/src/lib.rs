//! Multi-norm adversarial attacks on a small differentiable classifier.
//!
//! * [`lp_geometry`]: steepest-ascent directions and projections for ℓ1/ℓ2/ℓ∞ balls.
//! * [`classifier`]: rectifier MLP victim, gradients, standard and MSD adversarial training.
//! * [`attacks`]: PGD, the MSD adversary and the per-pixel multiple perturbation attack.
//! * [`metrics`]: PSNR, SSIM, entropic Wasserstein distance and success-filtered averaging.
//! * [`harness`]: synthetic data, robust-accuracy matrices, hyperparameter sweeps and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod classifier;
pub mod error;
pub mod harness;
pub mod lp_geometry;
pub mod metrics;
pub mod par;

pub use error::{Error, Result};
