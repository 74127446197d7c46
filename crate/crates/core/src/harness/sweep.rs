use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::matrix::{eval_slice, evaluate, obtain_victim, summarize_row};
use crate::attacks::{AttackConfig, AttackKind};
use crate::classifier::{LabeledExample, MlpModel};
use crate::error::Result;

/// One (temperature, inner iterations, reuse) cell of the MPA sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub victim: String,
    pub temperature: f64,
    pub inner_iterations: usize,
    pub reuse: bool,
    pub n_examples: usize,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
    pub n_evaluated: usize,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, temperature: f64, inner_iterations: usize, reuse: bool) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.temperature == temperature && r.inner_iterations == inner_iterations && r.reuse == reuse)
    }
}

/// Runs MPA for every grid cell against an already-built victim.
pub fn sweep_model(
    cfg: &ExperimentConfig,
    victim: &str,
    model: &MlpModel,
    examples: &[LabeledExample],
) -> Result<SweepTable> {
    let base = cfg.sweep_base();
    let mut rows = Vec::new();
    for (temperature, inner, reuse) in cfg.sweep.cells() {
        let acfg = AttackConfig { temperature, inner_iterations: inner, coefficient_reuse: reuse, ..base.clone() };
        let eval = evaluate(model, AttackKind::Mpa, &acfg, examples, cfg.jobs)?;
        let row = summarize_row(victim, "mpa", examples, &eval, &cfg.metrics)?;
        rows.push(SweepRow {
            victim: victim.into(),
            temperature,
            inner_iterations: inner,
            reuse,
            n_examples: row.n_examples,
            clean_accuracy: row.clean_accuracy,
            robust_accuracy: row.robust_accuracy,
            n_evaluated: row.n_evaluated,
            psnr: row.psnr,
        });
    }
    Ok(SweepTable { rows })
}

/// Builds the dataset and the sweep victim, then evaluates the grid.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    cfg.validate_sweep()?;
    let (train, test) = cfg.dataset.generate()?;
    let spec = cfg.victim(&cfg.sweep.victim)?;
    let model = obtain_victim(spec, cfg, &train)?;
    sweep_model(cfg, &spec.name, &model, eval_slice(cfg, &test))
}
