use super::{ascent_direction, clip_unit, step_and_project, AttackReport, NormBudget};
use crate::classifier::{LabeledExample, MlpModel};
use crate::error::{Error, Result};

/// Single-norm PGD from the clean point, stopping at the first misclassification.
///
/// Each iteration takes the normalized steepest-ascent step, projects the
/// perturbation back onto the ε-ball around `ex.x`, and clips to `[0, 1]`.
pub fn pgd_attack(
    model: &MlpModel,
    ex: &LabeledExample,
    budget: NormBudget,
    iterations: usize,
    topk: Option<usize>,
) -> Result<AttackReport> {
    let (x_adv, used, success) = run(model, ex, budget, iterations, topk, true)?;
    Ok(AttackReport {
        success,
        iterations_used: used,
        final_loss: model.loss(&x_adv, ex.y)?,
        assignment_counts: vec![(budget.norm, x_adv.len())],
        x_adv,
    })
}

/// Every iterate of PGD without early stopping; `result[0]` is the clean input.
pub fn pgd_trajectory(
    model: &MlpModel,
    ex: &LabeledExample,
    budget: NormBudget,
    iterations: usize,
    topk: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![ex.x.clone()];
    let mut x_adv = ex.x.clone();
    for _ in 0..iterations {
        x_adv = pgd_step(model, ex, &x_adv, budget, topk)?;
        out.push(x_adv.clone());
    }
    Ok(out)
}

fn pgd_step(
    model: &MlpModel,
    ex: &LabeledExample,
    x_adv: &[f64],
    budget: NormBudget,
    topk: Option<usize>,
) -> Result<Vec<f64>> {
    let d = ex.x.len();
    let k = topk.unwrap_or_else(|| crate::lp_geometry::default_topk(d)).clamp(1, d.max(1));
    let g = model.input_gradient(x_adv, ex.y)?;
    let dir = ascent_direction(budget.norm, &g, budget.step, k, x_adv);
    let mut next = vec![0.0; d];
    step_and_project(budget.norm, budget.eps, x_adv, &ex.x, &dir, &mut next);
    clip_unit(&mut next);
    Ok(next)
}

fn run(
    model: &MlpModel,
    ex: &LabeledExample,
    budget: NormBudget,
    iterations: usize,
    topk: Option<usize>,
    early_stop: bool,
) -> Result<(Vec<f64>, usize, bool)> {
    if !(budget.eps > 0.0) || !(budget.step > 0.0) {
        return Err(Error::Config(format!("norm {} needs positive eps and step", budget.norm)));
    }
    let mut x_adv = ex.x.clone();
    if model.predict(&x_adv)? != ex.y {
        return Ok((x_adv, 0, true));
    }
    for it in 1..=iterations {
        x_adv = pgd_step(model, ex, &x_adv, budget, topk)?;
        if early_stop && model.predict(&x_adv)? != ex.y {
            return Ok((x_adv, it, true));
        }
    }
    let success = model.predict(&x_adv)? != ex.y;
    Ok((x_adv, iterations, success))
}
