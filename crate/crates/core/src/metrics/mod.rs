//! Imperceptibility metrics and the success-filtered averaging protocol.

mod sinkhorn;

pub use sinkhorn::{sinkhorn_cost, wasserstein};

use serde::{Deserialize, Serialize};

use crate::attacks::AttackReport;
use crate::classifier::{LabeledExample, MlpModel};
use crate::error::{Error, Result};
use crate::par;

/// Layout of a flat pixel vector, channel-major (`[c][row][col]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width }
    }

    /// A single-channel square when `d` is a perfect square, otherwise one row.
    pub fn infer(d: usize) -> Self {
        let side = (d as f64).sqrt().round() as usize;
        if side * side == d {
            Self::new(1, side, side)
        } else {
            Self::new(1, 1, d)
        }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: v.len() });
        }
        Ok(())
    }
}

/// `20 log₁₀‖x‖∞ − 10 log₁₀‖δ‖₂² + 10 log₁₀ dim x` with `δ = x_adv − x`.
///
/// Returns `+∞` for a zero perturbation and an error for an all-zero image.
pub fn psnr(x: &[f64], x_adv: &[f64]) -> Result<f64> {
    if x.len() != x_adv.len() {
        return Err(Error::Dimension { expected: x.len(), got: x_adv.len() });
    }
    let peak = crate::lp_geometry::norm_linf(x);
    if peak == 0.0 {
        return Err(Error::Metric("PSNR of an all-zero image".into()));
    }
    let energy: f64 = x.iter().zip(x_adv).map(|(a, b)| (b - a) * (b - a)).sum();
    if energy == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * peak.log10() - 10.0 * energy.log10() + 10.0 * (x.len() as f64).log10())
}

const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;
/// Images narrower or shorter than this use one global window.
const SSIM_MIN_SIDE: usize = 11;
const SSIM_WINDOW: usize = 8;

/// Structural similarity with dynamic range 1, averaged over channels.
///
/// Small images use a single global window; otherwise an 8×8 uniform window
/// slides with stride 1 and the per-window scores are averaged.
pub fn ssim(x: &[f64], x_adv: &[f64], shape: ImageShape) -> Result<f64> {
    shape.check(x)?;
    shape.check(x_adv)?;
    if shape.is_empty() {
        return Err(Error::Metric("SSIM of an empty image".into()));
    }
    let plane = shape.plane();
    let mut total = 0.0;
    for ch in 0..shape.channels {
        let a = &x[ch * plane..(ch + 1) * plane];
        let b = &x_adv[ch * plane..(ch + 1) * plane];
        total += if shape.height < SSIM_MIN_SIDE || shape.width < SSIM_MIN_SIDE {
            window_ssim(a, b, shape.width, 0, 0, shape.height, shape.width)
        } else {
            let rows = shape.height - SSIM_WINDOW + 1;
            let cols = shape.width - SSIM_WINDOW + 1;
            let mut s = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    s += window_ssim(a, b, shape.width, r, c, SSIM_WINDOW, SSIM_WINDOW);
                }
            }
            s / (rows * cols) as f64
        };
    }
    Ok(total / shape.channels as f64)
}

fn window_ssim(a: &[f64], b: &[f64], stride: usize, r0: usize, c0: usize, h: usize, w: usize) -> f64 {
    let n = (h * w) as f64;
    let pixels = || (r0..r0 + h).flat_map(move |r| (c0..c0 + w).map(move |c| r * stride + c));
    let (mut sa, mut sb) = (0.0, 0.0);
    for i in pixels() {
        sa += a[i];
        sb += b[i];
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for i in pixels() {
        let (da, db) = (a[i] - ma, b[i] - mb);
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    let (va, vb, cov) = (va / n, vb / n, cov / n);
    ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2)) / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
}

/// Parameters for computing metric means over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSettings {
    pub shape: Option<ImageShape>,
    pub wasserstein_reg: f64,
    pub wasserstein_iters: usize,
    /// Skip the transport distance (it dominates metric cost).
    pub skip_wasserstein: bool,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self { shape: None, wasserstein_reg: 0.01, wasserstein_iters: 200, skip_wasserstein: false }
    }
}

/// Means over examples that were classified correctly before the attack and
/// misclassified after it. All metrics are `None` when no example qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub wasserstein: Option<f64>,
    pub n_evaluated: usize,
}

impl MetricReport {
    pub fn empty() -> Self {
        Self { psnr: None, ssim: None, wasserstein: None, n_evaluated: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.n_evaluated == 0
    }
}

/// Whether `(clean_correct, report)` passes the evaluation filter.
pub fn counts_for_metrics(clean_correct: bool, report: &AttackReport) -> bool {
    clean_correct && report.success
}

/// Averages PSNR/SSIM/WD over the filtered `(example, clean_correct, report)` triples.
pub fn summarize<'a, I>(outcomes: I, settings: &MetricSettings) -> Result<MetricReport>
where
    I: IntoIterator<Item = (&'a LabeledExample, bool, &'a AttackReport)>,
{
    let (mut p, mut s, mut w, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (ex, clean_correct, report) in outcomes {
        if !counts_for_metrics(clean_correct, report) {
            continue;
        }
        let shape = settings.shape.unwrap_or_else(|| ImageShape::infer(ex.x.len()));
        p += psnr(&ex.x, &report.x_adv)?;
        s += ssim(&ex.x, &report.x_adv, shape)?;
        if !settings.skip_wasserstein {
            w += wasserstein(&ex.x, &report.x_adv, shape, settings.wasserstein_reg, settings.wasserstein_iters)?;
        }
        n += 1;
    }
    if n == 0 {
        return Ok(MetricReport::empty());
    }
    let nf = n as f64;
    Ok(MetricReport {
        psnr: Some(p / nf),
        ssim: Some(s / nf),
        wasserstein: (!settings.skip_wasserstein).then_some(w / nf),
        n_evaluated: n,
    })
}

/// Attacks every example of `clean_set` and averages the metrics over the
/// ones that were originally correct and successfully attacked.
pub fn filtered_metrics<F>(
    model: &MlpModel,
    clean_set: &[LabeledExample],
    attack_fn: F,
    settings: &MetricSettings,
    jobs: usize,
) -> Result<MetricReport>
where
    F: Fn(&LabeledExample) -> Result<AttackReport> + Sync + Send,
{
    if clean_set.is_empty() {
        return Err(Error::Config("empty evaluation set".into()));
    }
    let results = par::map_ordered(clean_set, jobs, |ex| -> Result<(bool, AttackReport)> {
        Ok((model.predict(&ex.x)? == ex.y, attack_fn(ex)?))
    });
    let results: Vec<(bool, AttackReport)> = results.into_iter().collect::<Result<_>>()?;
    summarize(clean_set.iter().zip(&results).map(|(ex, (ok, r))| (ex, *ok, r)), settings)
}
