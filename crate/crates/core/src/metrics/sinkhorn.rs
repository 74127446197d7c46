//! Entropic optimal transport between pixel-mass distributions.

use super::ImageShape;
use crate::error::{Error, Result};

/// Transport cost `⟨P, C⟩` of the entropic plan between histograms `a` and
/// `b` (each summing to one) under cost matrix `cost` (row-major `[a × b]`).
///
/// Runs `iters` log-domain Sinkhorn sweeps, so small `reg` does not underflow.
/// Zero-mass bins are dropped from the support.
pub fn sinkhorn_cost(a: &[f64], b: &[f64], cost: &[f64], reg: f64, iters: usize) -> Result<f64> {
    if cost.len() != a.len() * b.len() {
        return Err(Error::Dimension { expected: a.len() * b.len(), got: cost.len() });
    }
    if !(reg > 0.0) {
        return Err(Error::Config("transport regularization must be positive".into()));
    }
    let rows: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..b.len()).filter(|&j| b[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Metric("transport between empty distributions".into()));
    }
    let log_a: Vec<f64> = rows.iter().map(|&i| a[i].ln()).collect();
    let log_b: Vec<f64> = cols.iter().map(|&j| b[j].ln()).collect();
    let c = |r: usize, s: usize| cost[rows[r] * b.len() + cols[s]];

    let mut f = vec![0.0; rows.len()];
    let mut g = vec![0.0; cols.len()];
    let mut buf = Vec::with_capacity(rows.len().max(cols.len()));
    for _ in 0..iters.max(1) {
        for (r, fr) in f.iter_mut().enumerate() {
            buf.clear();
            buf.extend((0..cols.len()).map(|s| (g[s] - c(r, s)) / reg + log_b[s]));
            *fr = -reg * log_sum_exp(&buf);
        }
        for (s, gs) in g.iter_mut().enumerate() {
            buf.clear();
            buf.extend((0..rows.len()).map(|r| (f[r] - c(r, s)) / reg + log_a[r]));
            *gs = -reg * log_sum_exp(&buf);
        }
    }

    let mut total = 0.0;
    for r in 0..rows.len() {
        for s in 0..cols.len() {
            let cost_rs = c(r, s);
            let log_p = (f[r] + g[s] - cost_rs) / reg + log_a[r] + log_b[s];
            total += log_p.exp() * cost_rs;
        }
    }
    Ok(total)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Squared Euclidean distances between pixel centres on a grid scaled to `[0, 1]²`.
fn grid_cost(height: usize, width: usize) -> Vec<f64> {
    let coord = |k: usize, n: usize| if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
    let pts: Vec<(f64, f64)> =
        (0..height).flat_map(|r| (0..width).map(move |c| (coord(r, height), coord(c, width)))).collect();
    let mut cost = Vec::with_capacity(pts.len() * pts.len());
    for &(r0, c0) in &pts {
        for &(r1, c1) in &pts {
            cost.push((r0 - r1).powi(2) + (c0 - c1).powi(2));
        }
    }
    cost
}

fn normalize(plane: &[f64]) -> Result<Vec<f64>> {
    if plane.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Metric("transport mass must be finite and non-negative".into()));
    }
    let total: f64 = plane.iter().sum();
    if total <= 0.0 {
        return Err(Error::Metric("image has zero total mass".into()));
    }
    Ok(plane.iter().map(|v| v / total).collect())
}

/// Entropic Wasserstein distance between two images: each channel is
/// normalized to unit mass, transported on the pixel grid, and the channel
/// costs are averaged.
pub fn wasserstein(x: &[f64], x_adv: &[f64], shape: ImageShape, reg: f64, iters: usize) -> Result<f64> {
    shape.check(x)?;
    shape.check(x_adv)?;
    let plane = shape.plane();
    let cost = grid_cost(shape.height, shape.width);
    let mut total = 0.0;
    for ch in 0..shape.channels {
        let a = normalize(&x[ch * plane..(ch + 1) * plane])?;
        let b = normalize(&x_adv[ch * plane..(ch + 1) * plane])?;
        total += sinkhorn_cost(&a, &b, &cost, reg, iters)?;
    }
    Ok(total / shape.channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_transport_is_squared_distance() {
        let shape = ImageShape::new(1, 1, 2);
        for reg in [0.1, 0.01, 1e-3] {
            let w = wasserstein(&[1.0, 0.0], &[0.0, 1.0], shape, reg, 200).unwrap();
            assert!((w - 1.0).abs() < 0.05, "reg {reg}: {w}");
        }
    }

    #[test]
    fn identical_images_have_small_cost() {
        let shape = ImageShape::new(1, 4, 4);
        let x: Vec<f64> = (0..16).map(|i| 0.2 + 0.05 * (i % 5) as f64).collect();
        let reg = 0.01;
        let w = wasserstein(&x, &x, shape, reg, 200).unwrap();
        assert!(w >= 0.0 && w < 5.0 * reg * 16f64.ln(), "{w}");
    }

    #[test]
    fn symmetric_swap() {
        let shape = ImageShape::new(1, 1, 4);
        let x = [0.0, 0.5, 0.1, 0.0];
        let y = [0.0, 0.1, 0.5, 0.0];
        let a = wasserstein(&x, &y, shape, 0.01, 300).unwrap();
        let b = wasserstein(&y, &x, shape, 0.01, 300).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn zero_mass_rejected() {
        let shape = ImageShape::new(1, 1, 3);
        assert!(wasserstein(&[0.0; 3], &[1.0; 3], shape, 0.01, 10).is_err());
        assert!(wasserstein(&[1.0; 3], &[0.0; 3], shape, 0.01, 10).is_err());
    }

    #[test]
    fn multichannel_is_channel_mean() {
        let shape = ImageShape::new(2, 1, 2);
        let x = [1.0, 0.0, 0.5, 0.5];
        let y = [0.0, 1.0, 0.5, 0.5];
        let single = ImageShape::new(1, 1, 2);
        let c0 = wasserstein(&x[..2], &y[..2], single, 0.01, 100).unwrap();
        let c1 = wasserstein(&x[2..], &y[2..], single, 0.01, 100).unwrap();
        let w = wasserstein(&x, &y, shape, 0.01, 100).unwrap();
        assert!((w - (c0 + c1) / 2.0).abs() < 1e-12);
    }
}
