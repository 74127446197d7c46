use super::{ascent_direction, clip_unit, step_and_project, AttackConfig};
use crate::classifier::{LabeledExample, MlpModel};
use crate::error::Result;

/// What happened in one MSD iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdStep {
    pub iteration: usize,
    /// Loss of each projected candidate, in the config's norm order.
    pub candidate_losses: Vec<f64>,
    /// Index of the candidate kept.
    pub chosen: usize,
}

/// Multi-steepest-descent adversary: per iteration, take one projected step for
/// each norm and keep the candidate with the highest loss. Runs all
/// `cfg.iterations` steps; there is no early stop.
pub fn msd_adversary(model: &MlpModel, ex: &LabeledExample, cfg: &AttackConfig) -> Result<Vec<f64>> {
    msd_adversary_observed(model, ex, cfg, |_| {})
}

pub fn msd_adversary_observed<O>(
    model: &MlpModel,
    ex: &LabeledExample,
    cfg: &AttackConfig,
    mut observer: O,
) -> Result<Vec<f64>>
where
    O: FnMut(&MsdStep),
{
    cfg.validate()?;
    let d = ex.x.len();
    let k = cfg.topk_for(d);
    let mut x_adv = ex.x.clone();
    let mut candidate = vec![0.0; d];
    let mut best = vec![0.0; d];
    for iteration in 0..cfg.iterations {
        let g = model.input_gradient(&x_adv, ex.y)?;
        let mut losses = Vec::with_capacity(cfg.norms.len());
        let mut chosen = 0;
        for (idx, b) in cfg.norms.iter().enumerate() {
            let dir = ascent_direction(b.norm, &g, b.step, k, &x_adv);
            step_and_project(b.norm, b.eps, &x_adv, &ex.x, &dir, &mut candidate);
            let loss = model.loss(&candidate, ex.y)?;
            if idx == 0 || loss > losses[chosen] {
                chosen = idx;
                best.copy_from_slice(&candidate);
            }
            losses.push(loss);
        }
        observer(&MsdStep { iteration, candidate_losses: losses, chosen });
        x_adv.copy_from_slice(&best);
        clip_unit(&mut x_adv);
    }
    Ok(x_adv)
}
