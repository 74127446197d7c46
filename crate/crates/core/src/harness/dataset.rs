use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledExample;
use crate::error::{Error, Result};

/// Gaussian clusters around random class prototypes in `[0.2, 0.8]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub seed: u64,
    pub classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub sigma: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self { seed: 0, classes: 4, dim: 64, n_train: 2000, n_test: 500, sigma: 0.15 }
    }
}

impl DatasetSpec {
    pub fn generate(&self) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
        generate_dataset(self.seed, self.classes, self.dim, self.n_train, self.n_test, self.sigma)
    }
}

/// Draws `classes` prototypes, then `n_train + n_test` noisy copies with
/// round-robin labels, clipped to `[0, 1]`. Each split is shuffled with the
/// same seeded generator, so the whole dataset is a function of `seed`.
pub fn generate_dataset(
    seed: u64,
    classes: usize,
    dim: usize,
    n_train: usize,
    n_test: usize,
    sigma: f64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    if classes < 2 {
        return Err(Error::Config("dataset needs at least two classes".into()));
    }
    if dim < 4 {
        return Err(Error::Config("dataset dimension must be at least 4".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!("invalid noise level {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prototypes: Vec<Vec<f64>> =
        (0..classes).map(|_| (0..dim).map(|_| rng.random_range(0.2..=0.8)).collect()).collect();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;

    let split = |n: usize, rng: &mut ChaCha8Rng| {
        let mut out: Vec<LabeledExample> = (0..n)
            .map(|i| {
                let y = i % classes;
                let x = prototypes[y]
                    .iter()
                    .map(|&p| if sigma == 0.0 { p } else { (p + noise.sample(rng)).clamp(0.0, 1.0) })
                    .collect();
                LabeledExample::new(x, y)
            })
            .collect();
        out.shuffle(rng);
        out
    };
    let train = split(n_train, &mut rng);
    let test = split(n_test, &mut rng);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_reproduces_prototypes() {
        let (train, test) = generate_dataset(3, 3, 8, 30, 9, 0.0).unwrap();
        let mut protos: Vec<Option<Vec<f64>>> = vec![None; 3];
        for ex in train.iter().chain(&test) {
            match &protos[ex.y] {
                Some(p) => assert_eq!(p, &ex.x),
                None => protos[ex.y] = Some(ex.x.clone()),
            }
            assert!(ex.x.iter().all(|v| (0.2..=0.8).contains(v)));
        }
    }

    #[test]
    fn deterministic_and_balanced() {
        let a = generate_dataset(7, 4, 16, 100, 40, 0.15).unwrap();
        let b = generate_dataset(7, 4, 16, 100, 40, 0.15).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(8, 4, 16, 100, 40, 0.15).unwrap();
        assert_ne!(a, c);
        for y in 0..4 {
            assert_eq!(a.0.iter().filter(|e| e.y == y).count(), 25);
            assert_eq!(a.1.iter().filter(|e| e.y == y).count(), 10);
        }
        assert!(a.0.iter().all(|e| e.x.iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(generate_dataset(0, 1, 8, 10, 10, 0.1).is_err());
        assert!(generate_dataset(0, 2, 3, 10, 10, 0.1).is_err());
        assert!(generate_dataset(0, 2, 8, 10, 10, -1.0).is_err());
    }
}
