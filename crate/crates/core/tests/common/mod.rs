//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mpa::classifier::{LabeledExample, MlpModel};
use mpa::lp_geometry::NormId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// A random point of the `p`-ball of radius `eps`: random direction, random radius.
pub fn random_in_ball(rng: &mut impl Rng, norm: NormId, d: usize, eps: f64) -> Vec<f64> {
    let v = uniform_vec(rng, d, -1.0, 1.0);
    let n = norm.norm(&v);
    if n == 0.0 {
        return vec![0.0; d];
    }
    let r = eps * rng.random_range(0.0..=1.0f64);
    v.iter().map(|x| x * r / n).collect()
}

/// Vertices of the ℓ1 or ℓ∞ ball of radius `eps` in d dimensions.
pub fn extreme_points(norm: NormId, d: usize, eps: f64) -> Vec<Vec<f64>> {
    match norm {
        NormId::L1 => (0..d)
            .flat_map(|i| {
                [eps, -eps].into_iter().map(move |s| {
                    let mut v = vec![0.0; d];
                    v[i] = s;
                    v
                })
            })
            .collect(),
        NormId::LInf => {
            (0..1usize << d).map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { eps } else { -eps }).collect()).collect()
        }
        NormId::L2 => panic!("the ℓ2 ball has no finite vertex set"),
    }
}

/// ℓ1-ball projection by bisecting the soft threshold η until the mass equals ε.
pub fn project_l1_bisection(delta: &[f64], eps: f64) -> Vec<f64> {
    let mass = |eta: f64| delta.iter().map(|v| (v.abs() - eta).max(0.0)).sum::<f64>();
    if mass(0.0) <= eps {
        return delta.to_vec();
    }
    let (mut lo, mut hi) = (0.0, delta.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    delta.iter().map(|v| v.signum() * (v.abs() - eta).max(0.0)).collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central finite difference of `f` at `x` along every coordinate.
pub fn finite_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let down = f(&xp);
            xp[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Small random model with non-trivial biases so ReLU kinks are rarely hit.
pub fn random_model(dims: &[usize], seed: u64) -> MlpModel {
    let mut m = MlpModel::kaiming_uniform(dims, seed).unwrap();
    let mut r = rng(seed ^ 0xb1a5);
    for layer in &mut m.layers {
        for b in &mut layer.bias {
            *b = r.random_range(-0.5..0.5);
        }
    }
    m
}

pub fn random_example(rng: &mut impl Rng, d: usize, classes: usize) -> LabeledExample {
    LabeledExample::new(uniform_vec(rng, d, 0.05, 0.95), rng.random_range(0..classes))
}
