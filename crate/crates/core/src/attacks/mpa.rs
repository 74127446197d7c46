//! Multiple perturbation attack.
//!
//! Every pixel picks its perturbation from one of the per-norm steepest-ascent
//! directions. The choice is relaxed to a temperature softmax over a `[d × |P|]`
//! coefficient tensor, tuned by gradient ascent on the loss, then hardened by a
//! per-pixel argmax. Pixels assigned to norm p are stepped and projected onto
//! the ε_p-ball as one sub-vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ascent_direction, clip_unit, step_and_project, AttackConfig, AttackReport};
use crate::classifier::{LabeledExample, MlpModel};
use crate::error::{Error, Result};

/// Soft norm-selection weights, row-major `[d × |P|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    pixels: usize,
    norms: usize,
    values: Vec<f64>,
}

impl CoefficientTensor {
    pub fn zeros(pixels: usize, norms: usize) -> Self {
        Self { pixels, norms, values: vec![0.0; pixels * norms] }
    }

    pub fn from_values(pixels: usize, norms: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != pixels * norms {
            return Err(Error::Dimension { expected: pixels * norms, got: values.len() });
        }
        Ok(Self { pixels, norms, values })
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn norms(&self) -> usize {
        self.norms
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.norms..(i + 1) * self.norms]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.norms..(i + 1) * self.norms]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// `softmax(c_row / tau)`, computed with max-subtraction.
pub fn temperature_softmax(c_row: &[f64], tau: f64) -> Vec<f64> {
    let m = c_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = c_row.iter().map(|&c| ((c - m) / tau).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Uniform draw in `[−bound, bound]` for every coefficient.
pub fn init_coefficients(pixels: usize, norms: usize, bound: f64, rng: &mut impl Rng) -> CoefficientTensor {
    let values =
        (0..pixels * norms).map(|_| if bound > 0.0 { rng.random_range(-bound..=bound) } else { 0.0 }).collect();
    CoefficientTensor { pixels, norms, values }
}

fn check_shapes(c: &CoefficientTensor, dirs: &[Vec<f64>]) -> Result<()> {
    if dirs.len() != c.norms {
        return Err(Error::Dimension { expected: c.norms, got: dirs.len() });
    }
    if let Some(bad) = dirs.iter().find(|v| v.len() != c.pixels) {
        return Err(Error::Dimension { expected: c.pixels, got: bad.len() });
    }
    Ok(())
}

/// Per pixel `i`: `Σ_p softmax(c_i / τ)_p · dirs[p][i]`.
pub fn mixed_perturbation(c: &CoefficientTensor, dirs: &[Vec<f64>], tau: f64) -> Result<Vec<f64>> {
    check_shapes(c, dirs)?;
    Ok((0..c.pixels)
        .map(|i| temperature_softmax(c.row(i), tau).iter().zip(dirs).map(|(w, dir)| w * dir[i]).sum())
        .collect())
}

/// Loss at `x_adv + mixed_perturbation(c)` and its exact gradient in `c`.
///
/// With `s = softmax(c_i/τ)`, `m_i = Σ_q s_q ∇_q^i` and `h = ∂L/∂x̃`:
/// `∂L/∂c_p^i = h_i · s_p · (∇_p^i − m_i) / τ`.
pub fn coefficient_gradient(
    model: &MlpModel,
    x_adv: &[f64],
    y: usize,
    c: &CoefficientTensor,
    dirs: &[Vec<f64>],
    tau: f64,
) -> Result<(f64, CoefficientTensor)> {
    check_shapes(c, dirs)?;
    if x_adv.len() != c.pixels {
        return Err(Error::Dimension { expected: c.pixels, got: x_adv.len() });
    }
    let weights: Vec<Vec<f64>> = (0..c.pixels).map(|i| temperature_softmax(c.row(i), tau)).collect();
    let mixed: Vec<f64> =
        weights.iter().enumerate().map(|(i, s)| s.iter().zip(dirs).map(|(w, dir)| w * dir[i]).sum()).collect();
    let perturbed: Vec<f64> = x_adv.iter().zip(&mixed).map(|(a, m)| a + m).collect();
    let (loss, h) = model.loss_and_input_gradient(&perturbed, y)?;

    let mut grad = CoefficientTensor::zeros(c.pixels, c.norms);
    for i in 0..c.pixels {
        let scale = h[i] / tau;
        if scale == 0.0 {
            continue;
        }
        let row = grad.row_mut(i);
        for (p, g) in row.iter_mut().enumerate() {
            *g = scale * weights[i][p] * (dirs[p][i] - mixed[i]);
        }
    }
    Ok((loss, grad))
}

/// One ascent step `c ← c + δ_c ∂L/∂c`.
pub fn coefficient_ascent_step(
    model: &MlpModel,
    x_adv: &[f64],
    ex: &LabeledExample,
    c: &CoefficientTensor,
    dirs: &[Vec<f64>],
    cfg: &AttackConfig,
) -> Result<CoefficientTensor> {
    let (_, grad) = coefficient_gradient(model, x_adv, ex.y, c, dirs, cfg.temperature)?;
    let mut next = c.clone();
    for (v, g) in next.values.iter_mut().zip(&grad.values) {
        *v += cfg.coef_step * g;
    }
    Ok(next)
}

/// Hard per-pixel assignment: the norm index with the largest coefficient,
/// earliest norm on ties.
pub fn partition(c: &CoefficientTensor) -> Vec<usize> {
    (0..c.pixels).map(|i| crate::classifier::argmax(c.row(i))).collect()
}

/// Adds each norm's direction on the pixels assigned to it, projects that
/// sub-perturbation onto its own ε_p-ball around `x`, then clips to `[0, 1]`.
pub fn combine_and_project(
    x_adv: &[f64],
    x: &[f64],
    c: &CoefficientTensor,
    dirs: &[Vec<f64>],
    cfg: &AttackConfig,
) -> Result<Vec<f64>> {
    check_shapes(c, dirs)?;
    if cfg.norms.len() != c.norms {
        return Err(Error::Dimension { expected: cfg.norms.len(), got: c.norms });
    }
    if x_adv.len() != c.pixels || x.len() != c.pixels {
        return Err(Error::Dimension { expected: c.pixels, got: x_adv.len().min(x.len()) });
    }
    let assignment = partition(c);
    let mut out = x_adv.to_vec();
    for (p, b) in cfg.norms.iter().enumerate() {
        let idx: Vec<usize> = (0..c.pixels).filter(|&i| assignment[i] == p).collect();
        if idx.is_empty() {
            continue;
        }
        let gather = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let mut sub = vec![0.0; idx.len()];
        step_and_project(b.norm, b.eps, &gather(x_adv), &gather(x), &gather(&dirs[p]), &mut sub);
        for (&i, v) in idx.iter().zip(sub) {
            out[i] = v;
        }
    }
    clip_unit(&mut out);
    Ok(out)
}

/// State after one outer MPA iteration.
#[derive(Debug)]
pub struct MpaStep<'a> {
    pub iteration: usize,
    pub x_adv: &'a [f64],
    /// Norm index chosen for each pixel.
    pub assignment: &'a [usize],
    pub coefficients: &'a CoefficientTensor,
}

fn example_seed(seed: u64, ex: &LabeledExample) -> u64 {
    // FNV-1a over the example so draws do not depend on evaluation order
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for v in ex.x.iter().map(|v| v.to_bits()).chain(std::iter::once(ex.y as u64)) {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

pub fn mpa_attack(model: &MlpModel, ex: &LabeledExample, cfg: &AttackConfig) -> Result<AttackReport> {
    mpa_attack_observed(model, ex, cfg, |_| {})
}

/// [`mpa_attack`] calling `observer` after every combine step.
pub fn mpa_attack_observed<O>(
    model: &MlpModel,
    ex: &LabeledExample,
    cfg: &AttackConfig,
    mut observer: O,
) -> Result<AttackReport>
where
    O: FnMut(&MpaStep<'_>),
{
    cfg.validate()?;
    let d = ex.x.len();
    let k = cfg.topk_for(d);
    let n_norms = cfg.norms.len();
    let bound = cfg.init_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(example_seed(cfg.seed, ex));
    let mut c = init_coefficients(d, n_norms, bound, &mut rng);
    let mut x_adv = ex.x.clone();

    let report = |x_adv: Vec<f64>, c: &CoefficientTensor, used: usize, success: bool| -> Result<AttackReport> {
        let mut counts = vec![0usize; n_norms];
        for p in partition(c) {
            counts[p] += 1;
        }
        Ok(AttackReport {
            success,
            iterations_used: used,
            final_loss: model.loss(&x_adv, ex.y)?,
            assignment_counts: cfg.norms.iter().map(|b| b.norm).zip(counts).collect(),
            x_adv,
        })
    };

    if model.predict(&x_adv)? != ex.y {
        return report(x_adv, &c, 0, true);
    }
    for it in 1..=cfg.iterations {
        if it > 1 && !cfg.coefficient_reuse {
            c = init_coefficients(d, n_norms, bound, &mut rng);
        }
        let g = model.input_gradient(&x_adv, ex.y)?;
        let dirs: Vec<Vec<f64>> = cfg.norms.iter().map(|b| ascent_direction(b.norm, &g, b.step, k, &x_adv)).collect();
        for _ in 0..cfg.inner_iterations {
            c = coefficient_ascent_step(model, &x_adv, ex, &c, &dirs, cfg)?;
        }
        x_adv = combine_and_project(&x_adv, &ex.x, &c, &dirs, cfg)?;
        let assignment = partition(&c);
        observer(&MpaStep { iteration: it, x_adv: &x_adv, assignment: &assignment, coefficients: &c });
        if model.predict(&x_adv)? != ex.y {
            return report(x_adv, &c, it, true);
        }
    }
    report(x_adv, &c, cfg.iterations, false)
}
