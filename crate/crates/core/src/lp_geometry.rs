//! Steepest-ascent directions and Euclidean projections for the ℓ1, ℓ2 and ℓ∞ balls.
//!
//! Every function here is a pure map on flat `f64` slices. Directions solve
//! `argmax_{‖v‖_p = step} vᵀg`; projections solve `argmin_{‖v‖_p ≤ eps} ‖v − δ‖₂`
//! for a ball centred at the origin, so callers project the perturbation
//! `x_adv − x`, never raw pixels.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the three supported perturbation norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormId {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl NormId {
    pub const ALL: [NormId; 3] = [NormId::L1, NormId::L2, NormId::LInf];

    pub fn as_str(self) -> &'static str {
        match self {
            NormId::L1 => "l1",
            NormId::L2 => "l2",
            NormId::LInf => "linf",
        }
    }

    /// ‖v‖_p.
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormId::L1 => norm_l1(v),
            NormId::L2 => norm_l2(v),
            NormId::LInf => norm_linf(v),
        }
    }

    /// Euclidean projection of `delta` onto the origin-centred ball of radius `eps`.
    pub fn project(self, delta: &[f64], eps: f64) -> Vec<f64> {
        match self {
            NormId::L1 => project_l1(delta, eps),
            NormId::L2 => project_l2(delta, eps),
            NormId::LInf => project_linf(delta, eps),
        }
    }
}

impl fmt::Display for NormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(NormId::L1),
            "l2" | "2" => Ok(NormId::L2),
            "linf" | "inf" | "l_inf" => Ok(NormId::LInf),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

/// Rejects duplicate entries in an ordered norm list.
pub fn check_norm_set(norms: &[NormId]) -> Result<(), Error> {
    for (i, p) in norms.iter().enumerate() {
        if norms[..i].contains(p) {
            return Err(Error::Config(format!("norm `{p}` listed twice")));
        }
    }
    Ok(())
}

pub fn norm_l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Signum with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn steepest_ascent_linf(g: &[f64], step: f64) -> Vec<f64> {
    g.iter().map(|&gi| step * sign(gi)).collect()
}

/// `step · g / ‖g‖₂`, or zero when `g = 0`.
pub fn steepest_ascent_l2(g: &[f64], step: f64) -> Vec<f64> {
    let n = norm_l2(g);
    if n == 0.0 {
        return vec![0.0; g.len()];
    }
    let scale = step / n;
    g.iter().map(|&gi| scale * gi).collect()
}

/// One-hot ascent at the largest-magnitude coordinate (lowest index wins ties).
pub fn steepest_ascent_l1_canonical(g: &[f64], step: f64) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let mut best: Option<(usize, f64)> = None;
    for (i, &gi) in g.iter().enumerate() {
        let a = gi.abs();
        if a > 0.0 && best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    if let Some((i, _)) = best {
        out[i] = step * sign(g[i]);
    }
    out
}

/// Sparse ℓ1 ascent: spreads `step` evenly over the `k` largest-|g| coordinates
/// whose move would stay inside `[0, 1]`.
///
/// A coordinate is ineligible when its gradient is zero, or when it already
/// sits on the box face the gradient points through. Ineligible coordinates are
/// replaced by the next-largest eligible ones; with fewer than `k` eligible the
/// mass is shared among those that exist.
pub fn steepest_ascent_l1_topk(g: &[f64], step: f64, k: usize, x_adv: &[f64]) -> Vec<f64> {
    debug_assert_eq!(g.len(), x_adv.len());
    let mut out = vec![0.0; g.len()];
    if k == 0 {
        return out;
    }
    let mut eligible: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let gi = g[i];
            (gi > 0.0 && x_adv[i] < 1.0) || (gi < 0.0 && x_adv[i] > 0.0)
        })
        .collect();
    if eligible.is_empty() {
        return out;
    }
    let take = k.min(eligible.len());
    // stable sort keeps the lowest index first among equal magnitudes
    eligible.sort_by(|&a, &b| g[b].abs().partial_cmp(&g[a].abs()).unwrap_or(Ordering::Equal));
    let share = step / take as f64;
    for &i in &eligible[..take] {
        out[i] = share * sign(g[i]);
    }
    out
}

/// Default sparsity for the top-k ℓ1 ascent: one percent of the coordinates, at least one.
pub fn default_topk(d: usize) -> usize {
    ((d as f64) * 0.01).ceil().max(1.0) as usize
}

pub fn project_linf(delta: &[f64], eps: f64) -> Vec<f64> {
    delta.iter().map(|&v| v.min(eps).max(-eps)).collect()
}

pub fn project_l2(delta: &[f64], eps: f64) -> Vec<f64> {
    let n = norm_l2(delta);
    if n <= eps {
        return delta.to_vec();
    }
    let scale = eps / n;
    delta.iter().map(|&v| scale * v).collect()
}

/// Projection onto the ℓ1 ball by sorting magnitudes and soft-thresholding.
pub fn project_l1(delta: &[f64], eps: f64) -> Vec<f64> {
    if norm_l1(delta) <= eps {
        return delta.to_vec();
    }
    let eta = l1_threshold(delta, eps);
    let mut out: Vec<f64> = delta.iter().map(|&v| sign(v) * (v.abs() - eta).max(0.0)).collect();
    // cancellation in `sum − eps` can leave the result a few ulps outside the ball
    let n = norm_l1(&out);
    if n > eps {
        let scale = eps / n;
        out.iter_mut().for_each(|v| *v *= scale);
    }
    out
}

/// Soft threshold η for a vector with ‖delta‖₁ > eps.
fn l1_threshold(delta: &[f64], eps: f64) -> f64 {
    let mut gamma: Vec<f64> = delta.iter().map(|v| v.abs()).collect();
    gamma.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));

    let mut cumsum = 0.0;
    let mut rho = 0;
    let mut rho_sum = 0.0;
    for (j, &g) in gamma.iter().enumerate() {
        cumsum += g;
        if g - (cumsum - eps) / (j + 1) as f64 > 0.0 {
            rho = j + 1;
            rho_sum = cumsum;
        }
    }
    // rho >= 1 always: gamma[0] - (gamma[0] - eps) = eps > 0
    (rho_sum - eps) / rho as f64
}

pub fn clip_box(x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    x.iter().map(|&v| v.max(lo).min(hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
    }

    #[test]
    fn linf_ascent_examples() {
        close(&steepest_ascent_linf(&[0.5, -2.0, 0.0], 0.1), &[0.1, -0.1, 0.0], 0.0);
        close(&steepest_ascent_linf(&[0.0; 3], 0.1), &[0.0; 3], 0.0);
        close(&steepest_ascent_linf(&[-3.0], 0.003), &[-0.003], 0.0);
    }

    #[test]
    fn l2_ascent_examples() {
        close(&steepest_ascent_l2(&[3.0, 4.0], 1.0), &[0.6, 0.8], 1e-15);
        close(&steepest_ascent_l2(&[0.0, 0.0], 0.05), &[0.0, 0.0], 0.0);
        close(&steepest_ascent_l2(&[1.0; 4], 2.0), &[1.0; 4], 1e-15);
    }

    #[test]
    fn l1_canonical_examples() {
        close(&steepest_ascent_l1_canonical(&[0.2, -0.9, 0.1], 0.5), &[0.0, -0.5, 0.0], 0.0);
        close(&steepest_ascent_l1_canonical(&[0.4, 0.4], 1.0), &[1.0, 0.0], 0.0);
        close(&steepest_ascent_l1_canonical(&[0.0; 3], 1.0), &[0.0; 3], 0.0);
    }

    #[test]
    fn l1_topk_examples() {
        let g = [0.9, 0.5, 0.1, 0.05];
        close(&steepest_ascent_l1_topk(&g, 1.0, 2, &[0.5; 4]), &[0.5, 0.5, 0.0, 0.0], 0.0);
        close(&steepest_ascent_l1_topk(&g, 1.0, 2, &[1.0, 0.5, 0.5, 0.5]), &[0.0, 0.5, 0.5, 0.0], 0.0);
        close(&steepest_ascent_l1_topk(&[-0.3], 0.05, 1, &[0.0]), &[0.0], 0.0);
    }

    #[test]
    fn l1_topk_boundary_oracle() {
        // hand rule: walk |g| descending, keep indices whose sign points inward
        let g: [f64; 4] = [0.9, 0.5, 0.1, 0.05];
        let x = [1.0, 0.5, 0.5, 0.5];
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| g[b].abs().partial_cmp(&g[a].abs()).unwrap());
        let picked: Vec<usize> = order
            .into_iter()
            .filter(|&i| !(g[i] > 0.0 && x[i] >= 1.0) && !(g[i] < 0.0 && x[i] <= 0.0))
            .take(2)
            .collect();
        let mut expected = [0.0; 4];
        for i in picked {
            expected[i] = 0.5;
        }
        close(&steepest_ascent_l1_topk(&g, 1.0, 2, &x), &expected, 0.0);
    }

    #[test]
    fn l1_topk_fewer_eligible_than_k() {
        let v = steepest_ascent_l1_topk(&[0.3, -0.2, 0.1], 0.6, 3, &[1.0, 0.0, 0.4]);
        close(&v, &[0.0, 0.0, 0.6], 1e-15);
    }

    #[test]
    fn projection_examples() {
        close(&project_linf(&[0.05, -0.01], 0.03), &[0.03, -0.01], 0.0);
        close(&project_linf(&[0.02], 0.03), &[0.02], 0.0);
        close(&project_linf(&[-1.0, 1.0, 0.0], 0.5), &[-0.5, 0.5, 0.0], 0.0);

        close(&project_l2(&[3.0, 4.0], 1.0), &[0.6, 0.8], 1e-15);
        close(&project_l2(&[0.1, 0.2], 0.5), &[0.1, 0.2], 0.0);
        close(&project_l2(&[0.0, 0.0], 0.5), &[0.0, 0.0], 0.0);

        close(&project_l1(&[3.0, -1.0, 0.5], 2.0), &[2.0, 0.0, 0.0], 1e-12);
        close(&project_l1(&[0.5, -0.5], 2.0), &[0.5, -0.5], 0.0);
        close(&project_l1(&[1.0; 4], 2.0), &[0.5; 4], 1e-12);
    }

    #[test]
    fn clip_examples() {
        close(&clip_box(&[1.2, -0.1, 0.5], 0.0, 1.0), &[1.0, 0.0, 0.5], 0.0);
        close(&clip_box(&[0.3], 0.0, 1.0), &[0.3], 0.0);
        close(&clip_box(&[2.0, 2.0], 0.0, 1.0), &[1.0, 1.0], 0.0);
    }

    #[test]
    fn norm_parsing() {
        assert_eq!("linf".parse::<NormId>().unwrap(), NormId::LInf);
        assert_eq!("L1".parse::<NormId>().unwrap(), NormId::L1);
        assert!("l3".parse::<NormId>().is_err());
        assert!(check_norm_set(&[NormId::L1, NormId::L1]).is_err());
        assert!(check_norm_set(&NormId::ALL).is_ok());
    }
}
