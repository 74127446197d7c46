//! Rectifier MLP victim with hand-written reverse-mode gradients.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use train::{train_msd, train_msd_observed, train_standard, LrSchedule, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An image flattened to `[0, 1]^d` with its class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y: usize,
}

impl LabeledExample {
    pub fn new(x: Vec<f64>, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// A dense layer `z = W a + b` followed by `activation`. `weights` is row-major `[n_out × n_in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self { n_in, n_out, activation, weights: vec![0.0; n_in * n_out], bias: vec![0.0; n_out] }
    }

    fn affine(&self, a: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ delta`.
    fn backward_input(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_in];
        for (row, &d) in self.weights.chunks_exact(self.n_in).zip(delta) {
            if d == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
        out
    }
}

/// Multilayer perceptron: rectifier hidden layers, linear output of width `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Gradient buffers with the same layout as [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl ParamGradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= s);
        }
    }
}

struct ForwardCache {
    /// Layer inputs; `inputs[0]` is x.
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

impl MlpModel {
    /// Builds a model from layer widths `[d, h1, …, C]` with every parameter set to zero.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::build(dims, |_, _| 0.0)
    }

    /// Kaiming-uniform weights `U(−√(6/fan_in), √(6/fan_in))`, zero biases.
    pub fn kaiming_uniform(dims: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(dims, |fan_in, _| {
            let bound = (6.0 / fan_in as f64).sqrt();
            rng.random_range(-bound..=bound)
        })
    }

    fn build(dims: &[usize], mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let activation = if i == last { Activation::Identity } else { Activation::Relu };
                let mut layer = Layer::zeros(w[0], w[1], activation);
                for (j, p) in layer.weights.iter_mut().enumerate() {
                    *p = weight(w[0], j);
                }
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let model = Self { layers };
        model.validate()?;
        Ok(model)
    }

    /// Checks layer shapes chain together and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("model has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(Error::Config(format!("layer {i} has inconsistent parameter shapes")));
            }
            if i > 0 && self.layers[i - 1].n_out != l.n_in {
                return Err(Error::Config(format!("layer {i} input width does not match layer {}", i - 1)));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("layer {i} holds non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn classes(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.affine(&a);
            for v in a.iter_mut() {
                *v = layer.activation.apply(*v);
            }
        }
        Ok(a)
    }

    fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&a);
            let next = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut a, next));
            pre_activations.push(z);
        }
        ForwardCache { inputs, pre_activations, logits: a }
    }

    /// Argmax of the logits, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        Ok(cross_entropy(&self.forward(x)?, y))
    }

    /// Cross-entropy loss and its gradient with respect to the input.
    pub fn loss_and_input_gradient(&self, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let cache = self.forward_cached(x);
        let loss = cross_entropy(&cache.logits, y);
        let mut delta = logit_gradient(&cache.logits, y);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation != Activation::Identity {
                for (d, &z) in delta.iter_mut().zip(&cache.pre_activations[i]) {
                    *d *= layer.activation.derivative(z);
                }
            }
            delta = layer.backward_input(&delta);
        }
        Ok((loss, delta))
    }

    pub fn input_gradient(&self, x: &[f64], y: usize) -> Result<Vec<f64>> {
        Ok(self.loss_and_input_gradient(x, y)?.1)
    }

    /// Mean cross-entropy over `batch` and its parameter gradients.
    pub fn param_gradient(&self, batch: &[LabeledExample]) -> Result<(f64, ParamGradients)> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        let mut grads = ParamGradients::zeros_like(self);
        let mut total = 0.0;
        for ex in batch {
            self.check_input(&ex.x)?;
            let cache = self.forward_cached(&ex.x);
            total += cross_entropy(&cache.logits, ex.y);
            let mut delta = logit_gradient(&cache.logits, ex.y);
            for (i, layer) in self.layers.iter().enumerate().rev() {
                if layer.activation != Activation::Identity {
                    for (d, &z) in delta.iter_mut().zip(&cache.pre_activations[i]) {
                        *d *= layer.activation.derivative(z);
                    }
                }
                let a = &cache.inputs[i];
                for ((gw_row, gb), &d) in
                    grads.weights[i].chunks_exact_mut(layer.n_in).zip(grads.bias[i].iter_mut()).zip(&delta)
                {
                    *gb += d;
                    if d != 0.0 {
                        for (g, &v) in gw_row.iter_mut().zip(a) {
                            *g += d * v;
                        }
                    }
                }
                if i > 0 {
                    delta = layer.backward_input(&delta);
                }
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grads.scale(inv);
        Ok((total * inv, grads))
    }

    /// Fraction of `data` classified correctly.
    pub fn accuracy(&self, data: &[LabeledExample]) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for ex in data {
            if self.predict(&ex.x)? == ex.y {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Softmax cross-entropy `−log softmax(logits)[y]`, evaluated with max-subtraction.
pub fn cross_entropy(logits: &[f64], y: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&z| (z - m).exp()).sum::<f64>().ln() + m;
    (lse - logits[y]).max(0.0)
}

/// ∂ loss / ∂ logits = softmax − onehot(y).
fn logit_gradient(logits: &[f64], y: usize) -> Vec<f64> {
    let mut g = softmax(logits);
    g[y] -= 1.0;
    g
}
