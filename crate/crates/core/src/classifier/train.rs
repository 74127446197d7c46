use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledExample, MlpModel, ParamGradients};
use crate::attacks::{msd_adversary, AttackConfig};
use crate::error::{Error, Result};
use crate::par;

/// Piecewise-linear learning rate over the training-progress fraction `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LrSchedule(pub Vec<(f64, f64)>);

impl LrSchedule {
    /// Rises linearly from 0 to `peak` at 40% of training, then decays linearly to 0.
    pub fn triangular(peak: f64) -> Self {
        LrSchedule(vec![(0.0, 0.0), (0.4, peak), (1.0, 0.0)])
    }

    pub fn constant(lr: f64) -> Self {
        LrSchedule(vec![(0.0, lr)])
    }

    pub fn rate(&self, t: f64) -> f64 {
        let pts = &self.0;
        match pts.len() {
            0 => 0.0,
            1 => pts[0].1,
            _ => {
                if t <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    let (t0, r0) = w[0];
                    let (t1, r1) = w[1];
                    if t <= t1 {
                        if t1 <= t0 {
                            return r1;
                        }
                        return r0 + (r1 - r0) * (t - t0) / (t1 - t0);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule::triangular(0.1)
    }
}

/// SGD-with-momentum settings shared by standard and adversarial training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_schedule: LrSchedule,
    pub seed: u64,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 128,
            momentum: 0.9,
            weight_decay: 5e-4,
            lr_schedule: LrSchedule::default(),
            seed: 0,
            hidden: vec![64, 64],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight_decay {} is negative", self.weight_decay)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// The seeded initial model for a dataset of width `d` with `classes` labels.
    pub fn initial_model(&self, d: usize, classes: usize) -> Result<MlpModel> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(d);
        dims.extend_from_slice(&self.hidden);
        dims.push(classes);
        MlpModel::kaiming_uniform(&dims, self.seed)
    }
}

fn data_shape(data: &[LabeledExample]) -> Result<(usize, usize)> {
    let first = data.first().ok_or_else(|| Error::Config("empty training set".into()))?;
    let d = first.x.len();
    if let Some(bad) = data.iter().find(|e| e.x.len() != d) {
        return Err(Error::Dimension { expected: d, got: bad.x.len() });
    }
    let classes = data.iter().map(|e| e.y).max().unwrap_or(0) + 1;
    Ok((d, classes.max(2)))
}

/// Mini-batch SGD with momentum and L2 weight decay. `make_batch` may replace
/// each batch (e.g. by adversaries) using the current parameters.
fn train_with<F>(data: &[LabeledExample], cfg: &TrainConfig, mut make_batch: F) -> Result<MlpModel>
where
    F: FnMut(&MlpModel, Vec<LabeledExample>) -> Result<Vec<LabeledExample>>,
{
    cfg.validate()?;
    let (d, classes) = data_shape(data)?;
    let mut model = cfg.initial_model(d, classes)?;
    if cfg.epochs == 0 {
        return Ok(model);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0fda_7a00);
    let mut velocity = ParamGradients::zeros_like(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let steps_per_epoch = data.len().div_ceil(cfg.batch_size);
    let total_steps = (cfg.epochs * steps_per_epoch) as f64;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let step = epoch * steps_per_epoch + b;
            let lr = cfg.lr_schedule.rate(step as f64 / total_steps);
            let batch: Vec<LabeledExample> = chunk.iter().map(|&i| data[i].clone()).collect();
            let batch = make_batch(&model, batch)?;
            let (_, grads) = model.param_gradient(&batch)?;
            sgd_step(&mut model, &mut velocity, &grads, lr, cfg.momentum, cfg.weight_decay);
        }
    }
    Ok(model)
}

fn sgd_step(
    model: &mut MlpModel,
    velocity: &mut ParamGradients,
    grads: &ParamGradients,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for (i, layer) in model.layers.iter_mut().enumerate() {
        let update = |params: &mut [f64], vel: &mut [f64], g: &[f64], decay: f64| {
            for ((w, v), &gi) in params.iter_mut().zip(vel.iter_mut()).zip(g) {
                let gi = gi + decay * *w;
                *v = momentum * *v + gi;
                *w -= lr * *v;
            }
        };
        update(&mut layer.weights, &mut velocity.weights[i], &grads.weights[i], weight_decay);
        update(&mut layer.bias, &mut velocity.bias[i], &grads.bias[i], weight_decay);
    }
}

/// Trains on clean data.
pub fn train_standard(data: &[LabeledExample], cfg: &TrainConfig) -> Result<MlpModel> {
    train_with(data, cfg, |_, batch| Ok(batch))
}

/// Adversarial training: every batch is swapped for its MSD adversaries under
/// the current parameters before the update.
pub fn train_msd(data: &[LabeledExample], cfg: &TrainConfig, atk: &AttackConfig) -> Result<MlpModel> {
    train_msd_observed(data, cfg, atk, 0, |_, _, _| {})
}

/// [`train_msd`] with a worker count for adversary generation and an observer
/// called, in batch order, with `(model, clean example, adversary)` for every
/// adversary fed to the optimizer.
pub fn train_msd_observed<O>(
    data: &[LabeledExample],
    cfg: &TrainConfig,
    atk: &AttackConfig,
    jobs: usize,
    mut observer: O,
) -> Result<MlpModel>
where
    O: FnMut(&MlpModel, &LabeledExample, &[f64]),
{
    atk.validate()?;
    train_with(data, cfg, |model, batch| {
        let advs = par::map_ordered(&batch, jobs, |ex| msd_adversary(model, ex, atk));
        batch
            .into_iter()
            .zip(advs)
            .map(|(ex, adv)| {
                let adv = adv?;
                observer(model, &ex, &adv);
                Ok(LabeledExample::new(adv, ex.y))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_schedule_shape() {
        let s = LrSchedule::triangular(0.1);
        assert_eq!(s.rate(0.0), 0.0);
        assert!((s.rate(0.2) - 0.05).abs() < 1e-15);
        assert!((s.rate(0.4) - 0.1).abs() < 1e-15);
        assert!((s.rate(0.7) - 0.05).abs() < 1e-15);
        assert_eq!(s.rate(1.0), 0.0);
        assert_eq!(s.rate(2.0), 0.0);
        assert_eq!(LrSchedule::constant(0.3).rate(0.9), 0.3);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.momentum = 1.0;
        assert!(cfg.validate().is_err());
        cfg.momentum = 0.5;
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let data = vec![LabeledExample::new(vec![0.1, 0.2, 0.3, 0.4], 0), LabeledExample::new(vec![0.9; 4], 1)];
        let cfg = TrainConfig { epochs: 0, hidden: vec![5], seed: 3, ..Default::default() };
        let trained = train_standard(&data, &cfg).unwrap();
        assert_eq!(trained, cfg.initial_model(4, 2).unwrap());
    }

    #[test]
    fn empty_data_rejected() {
        assert!(train_standard(&[], &TrainConfig::default()).is_err());
    }
}
