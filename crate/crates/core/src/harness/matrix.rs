use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, VictimSpec};
use crate::attacks::{run_attack, AttackConfig, AttackKind, AttackReport};
use crate::classifier::{load_checkpoint, train_msd, train_standard, Checkpoint, LabeledExample, MlpModel};
use crate::error::{Error, Result};
use crate::metrics::{summarize, MetricSettings};
use crate::par;

/// One (victim, attack) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub victim: String,
    pub attack: String,
    pub n_examples: usize,
    pub clean_accuracy: f64,
    /// Correct before and after the attack.
    pub robust_accuracy: f64,
    pub mean_iterations: f64,
    /// Examples entering the metric means.
    pub n_evaluated: usize,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub wasserstein: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, victim: &str, attack: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.victim == victim && r.attack == attack)
    }
}

/// Per-example outcomes of one attack on one model.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub clean_correct: Vec<bool>,
    pub reports: Vec<AttackReport>,
}

impl Evaluation {
    pub fn robust_correct(&self) -> impl Iterator<Item = bool> + '_ {
        self.clean_correct.iter().zip(&self.reports).map(|(&c, r)| c && !r.success)
    }
}

/// Attacks every example; results are in input order whatever `jobs` is.
pub fn evaluate(
    model: &MlpModel,
    kind: AttackKind,
    cfg: &AttackConfig,
    examples: &[LabeledExample],
    jobs: usize,
) -> Result<Evaluation> {
    cfg.validate()?;
    let out = par::map_ordered(examples, jobs, |ex| -> Result<(bool, AttackReport)> {
        Ok((model.predict(&ex.x)? == ex.y, run_attack(kind, model, ex, cfg)?))
    });
    let (clean_correct, reports) = out.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(Evaluation { clean_correct, reports })
}

/// Collapses an evaluation into a table row.
pub fn summarize_row(
    victim: &str,
    attack: &str,
    examples: &[LabeledExample],
    eval: &Evaluation,
    settings: &MetricSettings,
) -> Result<ResultRow> {
    let n = examples.len();
    if n == 0 {
        return Err(Error::Config("no examples to evaluate".into()));
    }
    let nf = n as f64;
    let clean = eval.clean_correct.iter().filter(|&&c| c).count() as f64 / nf;
    let robust = eval.robust_correct().filter(|&c| c).count() as f64 / nf;
    let iters = eval.reports.iter().map(|r| r.iterations_used as f64).sum::<f64>() / nf;
    let m = summarize(
        examples.iter().zip(&eval.clean_correct).zip(&eval.reports).map(|((ex, &c), r)| (ex, c, r)),
        settings,
    )?;
    Ok(ResultRow {
        victim: victim.into(),
        attack: attack.into(),
        n_examples: n,
        clean_accuracy: clean,
        robust_accuracy: robust,
        mean_iterations: iters,
        n_evaluated: m.n_evaluated,
        psnr: m.psnr,
        ssim: m.ssim,
        wasserstein: m.wasserstein,
    })
}

/// Trains `spec` on `train`.
pub fn train_victim(spec: &VictimSpec, cfg: &ExperimentConfig, train: &[LabeledExample]) -> Result<Checkpoint> {
    let adversary = spec.training_adversary(cfg.dataset.dim);
    let model = match &adversary {
        None => train_standard(train, &cfg.train)?,
        Some(a) => train_msd(train, &cfg.train, a)?,
    };
    Ok(Checkpoint::new(spec.name.clone(), cfg.train.clone(), adversary, model))
}

/// Loads the victim from its checkpoint path, or trains it when none is set.
/// A configured path that does not exist is an error.
pub fn obtain_victim(spec: &VictimSpec, cfg: &ExperimentConfig, train: &[LabeledExample]) -> Result<MlpModel> {
    match &spec.checkpoint {
        Some(path) => {
            if !path.exists() {
                return Err(Error::MissingCheckpoint { victim: spec.name.clone(), path: path.clone() });
            }
            let model = load_checkpoint(path)?.model;
            if model.input_dim() != cfg.dataset.dim {
                return Err(Error::Dimension { expected: cfg.dataset.dim, got: model.input_dim() });
            }
            Ok(model)
        }
        None => Ok(train_victim(spec, cfg, train)?.model),
    }
}

/// The attacked slice of the test split.
pub fn eval_slice<'a>(cfg: &ExperimentConfig, test: &'a [LabeledExample]) -> &'a [LabeledExample] {
    &test[..cfg.eval_examples.unwrap_or(test.len()).min(test.len())]
}

/// Attacks already-built victims with every configured attack.
pub fn attack_victims(
    cfg: &ExperimentConfig,
    victims: &[(String, MlpModel)],
    examples: &[LabeledExample],
) -> Result<ResultTable> {
    let d = cfg.dataset.dim;
    let mut rows = Vec::with_capacity(victims.len() * cfg.attacks.len());
    for (name, model) in victims {
        for a in &cfg.attacks {
            let acfg = a.resolve(d, cfg.attack_seed())?;
            let eval = evaluate(model, a.kind, &acfg, examples, cfg.jobs)?;
            rows.push(summarize_row(name, &a.name, examples, &eval, &cfg.metrics)?);
        }
    }
    Ok(ResultTable { rows })
}

/// Builds the dataset and victims, then fills the (victim, attack) matrix.
pub fn run_attack_matrix(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let (train, test) = cfg.dataset.generate()?;
    let victims =
        cfg.victims.iter().map(|v| Ok((v.name.clone(), obtain_victim(v, cfg, &train)?))).collect::<Result<Vec<_>>>()?;
    attack_victims(cfg, &victims, eval_slice(cfg, &test))
}
