//! Projected-gradient attacks: single-norm PGD, the MSD multi-norm adversary,
//! and the per-pixel multiple perturbation attack (MPA).

mod mpa;
mod msd;
mod pgd;

pub use mpa::{
    coefficient_ascent_step, coefficient_gradient, combine_and_project, init_coefficients, mixed_perturbation,
    mpa_attack, mpa_attack_observed, partition, temperature_softmax, CoefficientTensor, MpaStep,
};
pub use msd::{msd_adversary, msd_adversary_observed, MsdStep};
pub use pgd::{pgd_attack, pgd_trajectory};

use serde::{Deserialize, Serialize};

use crate::classifier::{LabeledExample, MlpModel};
use crate::error::{Error, Result};
use crate::lp_geometry::{self, check_norm_set, NormId};

/// Reference image width the published budgets were tuned for (32×32×3).
pub const REFERENCE_DIM: usize = 3072;

/// Default half-width of the uniform coefficient initialization.
///
/// At temperature 0.01 this keeps `c/τ` within ±0.1, so the initial mixing is
/// near uniform and the inner ascent decides the assignment. A Kaiming-style
/// bound of √(6/|P|) puts the logits near ±140, where the softmax saturates and
/// the coefficient gradient vanishes.
pub const DEFAULT_COEF_INIT_BOUND: f64 = 1e-3;

/// Budget and per-iteration step for one norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBudget {
    pub norm: NormId,
    pub eps: f64,
    pub step: f64,
}

impl NormBudget {
    pub fn new(norm: NormId, eps: f64, step: f64) -> Self {
        Self { norm, eps, step }
    }

    /// Budgets `{12, 0.5, 0.03}` and steps `{0.05, 0.05, 0.003}` at 3072 pixels,
    /// rescaled to `d` pixels: ℓ1 linearly in d, ℓ2 with √d, ℓ∞ unchanged.
    pub fn scaled(norm: NormId, d: usize) -> Self {
        let ratio = d as f64 / REFERENCE_DIM as f64;
        match norm {
            NormId::L1 => Self::new(norm, 12.0 * ratio, 0.05 * ratio),
            NormId::L2 => Self::new(norm, 0.5 * ratio.sqrt(), 0.05 * ratio.sqrt()),
            NormId::LInf => Self::new(norm, 0.03, 0.003),
        }
    }
}

/// Hyperparameters shared by PGD, MSD and MPA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Ordered, duplicate-free norm set with budgets.
    pub norms: Vec<NormBudget>,
    /// Outer iterations.
    pub iterations: usize,
    /// Coefficient-optimization steps per outer iteration (MPA only).
    pub inner_iterations: usize,
    /// Learning rate of the coefficient ascent (MPA only).
    pub coef_step: f64,
    pub temperature: f64,
    /// Keep coefficients across outer iterations instead of re-drawing them.
    pub coefficient_reuse: bool,
    /// Coordinates sharing the ℓ1 step; `None` uses one percent of the pixels.
    pub topk: Option<usize>,
    /// Half-width of the uniform coefficient initialization; `None` uses
    /// [`DEFAULT_COEF_INIT_BOUND`].
    pub coef_init_bound: Option<f64>,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self::mpa_defaults(64)
    }
}

impl AttackConfig {
    /// MPA over {ℓ1, ℓ2, ℓ∞} with 20 outer steps, 17 inner steps at 1e-3,
    /// temperature 0.01 and coefficient reuse.
    pub fn mpa_defaults(d: usize) -> Self {
        Self {
            norms: NormId::ALL.iter().map(|&p| NormBudget::scaled(p, d)).collect(),
            iterations: 20,
            inner_iterations: 17,
            coef_step: 1e-3,
            temperature: 0.01,
            coefficient_reuse: true,
            topk: None,
            coef_init_bound: None,
            seed: 0,
        }
    }

    /// Single-norm configuration with scaled default budgets.
    pub fn single(norm: NormId, d: usize) -> Self {
        Self { norms: vec![NormBudget::scaled(norm, d)], ..Self::mpa_defaults(d) }
    }

    pub fn with_norms(mut self, norms: &[NormId], d: usize) -> Self {
        self.norms = norms.iter().map(|&p| NormBudget::scaled(p, d)).collect();
        self
    }

    pub fn norm_ids(&self) -> Vec<NormId> {
        self.norms.iter().map(|b| b.norm).collect()
    }

    pub fn topk_for(&self, d: usize) -> usize {
        self.topk.unwrap_or_else(|| lp_geometry::default_topk(d)).clamp(1, d.max(1))
    }

    pub fn init_bound(&self) -> f64 {
        self.coef_init_bound.unwrap_or(DEFAULT_COEF_INIT_BOUND)
    }

    pub fn validate(&self) -> Result<()> {
        if self.norms.is_empty() {
            return Err(Error::Config("attack needs at least one norm".into()));
        }
        check_norm_set(&self.norm_ids())?;
        for b in &self.norms {
            if !(b.eps > 0.0) || !(b.step > 0.0) || !b.eps.is_finite() || !b.step.is_finite() {
                return Err(Error::Config(format!("norm {} needs positive finite eps and step", b.norm)));
            }
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if !self.coef_step.is_finite() || self.coef_step < 0.0 {
            return Err(Error::Config("coefficient step must be finite and non-negative".into()));
        }
        if self.coef_init_bound.is_some_and(|b| !(b >= 0.0)) {
            return Err(Error::Config("coefficient init bound must be non-negative".into()));
        }
        if self.topk == Some(0) {
            return Err(Error::Config("topk must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of attacking one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub success: bool,
    pub iterations_used: usize,
    pub x_adv: Vec<f64>,
    /// Pixels assigned to each norm at the last iteration; sums to d.
    pub assignment_counts: Vec<(NormId, usize)>,
    pub final_loss: f64,
}

/// Which attack to run with an [`AttackConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    /// Single-norm PGD; uses the first norm of the config.
    Pgd,
    Mpa,
}

/// Runs `kind` on one example.
pub fn run_attack(kind: AttackKind, model: &MlpModel, ex: &LabeledExample, cfg: &AttackConfig) -> Result<AttackReport> {
    match kind {
        AttackKind::Pgd => {
            cfg.validate()?;
            pgd_attack(model, ex, cfg.norms[0], cfg.iterations, cfg.topk)
        }
        AttackKind::Mpa => mpa_attack(model, ex, cfg),
    }
}

/// Normalized steepest-ascent direction for `norm`; ℓ1 uses the top-k variant
/// that skips coordinates pinned at the box face.
pub(crate) fn ascent_direction(norm: NormId, g: &[f64], step: f64, topk: usize, x_adv: &[f64]) -> Vec<f64> {
    match norm {
        NormId::L1 => lp_geometry::steepest_ascent_l1_topk(g, step, topk, x_adv),
        NormId::L2 => lp_geometry::steepest_ascent_l2(g, step),
        NormId::LInf => lp_geometry::steepest_ascent_linf(g, step),
    }
}

/// `x + Proj_p((x_adv + dir) − x)` over the given coordinates, written into `out`.
pub(crate) fn step_and_project(norm: NormId, eps: f64, x_adv: &[f64], x: &[f64], dir: &[f64], out: &mut [f64]) {
    let delta: Vec<f64> = x_adv.iter().zip(dir).zip(x).map(|((a, d), c)| (a + d) - c).collect();
    let proj = norm.project(&delta, eps);
    for ((o, c), p) in out.iter_mut().zip(x).zip(proj) {
        *o = c + p;
    }
}

pub(crate) fn clip_unit(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_budgets_at_desk_size() {
        let l1 = NormBudget::scaled(NormId::L1, 64);
        let l2 = NormBudget::scaled(NormId::L2, 64);
        let li = NormBudget::scaled(NormId::LInf, 64);
        assert!((l1.eps - 0.25).abs() < 1e-12);
        assert!((l2.eps - 0.0722).abs() < 1e-4);
        assert_eq!((li.eps, li.step), (0.03, 0.003));
        let full = NormBudget::scaled(NormId::L1, REFERENCE_DIM);
        assert_eq!((full.eps, full.step), (12.0, 0.05));
    }

    #[test]
    fn config_validation() {
        let cfg = AttackConfig::mpa_defaults(64);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.topk_for(64), 1);
        assert_eq!(cfg.init_bound(), DEFAULT_COEF_INIT_BOUND);

        let mut bad = cfg.clone();
        bad.temperature = 0.0;
        assert!(bad.validate().is_err());
        let mut dup = cfg.clone();
        dup.norms.push(dup.norms[0]);
        assert!(dup.validate().is_err());
        let mut empty = cfg;
        empty.norms.clear();
        assert!(empty.validate().is_err());
    }
}
