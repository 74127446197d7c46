use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::DatasetSpec;
use crate::attacks::{AttackConfig, AttackKind};
use crate::classifier::TrainConfig;
use crate::error::{Error, Result};
use crate::lp_geometry::NormId;
use crate::metrics::MetricSettings;

/// How a victim is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VictimKind {
    /// Plain cross-entropy training.
    Standard,
    /// Adversarial training on MSD adversaries over `norms`.
    Msd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimSpec {
    pub name: String,
    pub kind: VictimKind,
    /// Norm set of the training adversary; defaults to all three.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<Vec<NormId>>,
    /// Full adversary override; budgets otherwise follow the dataset width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AttackConfig>,
    /// Load the victim from here instead of training it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl VictimSpec {
    pub fn standard(name: &str) -> Self {
        Self { name: name.into(), kind: VictimKind::Standard, norms: None, adversary: None, checkpoint: None }
    }

    pub fn msd(name: &str, norms: &[NormId]) -> Self {
        Self {
            name: name.into(),
            kind: VictimKind::Msd,
            norms: Some(norms.to_vec()),
            adversary: None,
            checkpoint: None,
        }
    }

    /// Adversary used during training, or `None` for standard victims.
    pub fn training_adversary(&self, d: usize) -> Option<AttackConfig> {
        match self.kind {
            VictimKind::Standard => None,
            VictimKind::Msd => Some(self.adversary.clone().unwrap_or_else(|| {
                let norms = self.norms.clone().unwrap_or_else(|| NormId::ALL.to_vec());
                AttackConfig::mpa_defaults(d).with_norms(&norms, d)
            })),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub name: String,
    pub kind: AttackKind,
    /// PGD norm; ignored when `config` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormId>,
    /// Full configuration; otherwise desk defaults for the dataset width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<AttackConfig>,
}

impl AttackSpec {
    pub fn pgd(norm: NormId) -> Self {
        Self { name: format!("pgd-{norm}"), kind: AttackKind::Pgd, norm: Some(norm), config: None }
    }

    pub fn mpa() -> Self {
        Self { name: "mpa".into(), kind: AttackKind::Mpa, norm: None, config: None }
    }

    pub fn resolve(&self, d: usize, seed: u64) -> Result<AttackConfig> {
        let cfg = match (&self.config, self.kind, self.norm) {
            (Some(c), _, _) => c.clone(),
            (None, AttackKind::Pgd, Some(p)) => AttackConfig { seed, ..AttackConfig::single(p, d) },
            (None, AttackKind::Pgd, None) => {
                return Err(Error::Config(format!("pgd attack '{}' needs a norm or a config", self.name)))
            }
            (None, AttackKind::Mpa, _) => AttackConfig { seed, ..AttackConfig::mpa_defaults(d) },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Grid for the coefficient-optimization sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub victim: String,
    pub temperatures: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub reuse: Vec<bool>,
    /// MPA settings the grid overrides; desk defaults when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<AttackConfig>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            victim: "msd".into(),
            temperatures: vec![0.01],
            inner_iterations: vec![1, 5, 10, 15, 20],
            reuse: vec![true, false],
            base: None,
        }
    }
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<(f64, usize, bool)> {
        let mut out = Vec::new();
        for &t in &self.temperatures {
            for &n in &self.inner_iterations {
                for &r in &self.reuse {
                    out.push((t, n, r));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub dir: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl OutputPaths {
    pub fn checkpoint(&self, victim: &str) -> PathBuf {
        self.dir.join("checkpoints").join(format!("{victim}.json"))
    }
}

/// One JSON document describing a complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub train: TrainConfig,
    pub victims: Vec<VictimSpec>,
    pub attacks: Vec<AttackSpec>,
    /// Test examples attacked; `None` uses the whole test split.
    pub eval_examples: Option<usize>,
    pub sweep: SweepGrid,
    pub metrics: MetricSettings,
    pub output: OutputPaths,
    /// Worker threads; 0 lets the runtime decide, 1 runs sequentially.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            train: TrainConfig::default(),
            victims: vec![
                VictimSpec::standard("standard"),
                VictimSpec::msd("msd", &NormId::ALL),
                VictimSpec::msd("linf-at", &[NormId::LInf]),
            ],
            attacks: vec![
                AttackSpec::pgd(NormId::L1),
                AttackSpec::pgd(NormId::L2),
                AttackSpec::pgd(NormId::LInf),
                AttackSpec::mpa(),
            ],
            eval_examples: None,
            sweep: SweepGrid::default(),
            metrics: MetricSettings { skip_wasserstein: true, ..MetricSettings::default() },
            output: OutputPaths::default(),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Reseeds the dataset, training and every attack.
    pub fn reseed(&mut self, seed: u64) {
        self.dataset.seed = seed;
        self.train.seed = seed;
        for a in &mut self.attacks {
            if let Some(c) = &mut a.config {
                c.seed = seed;
            }
        }
        if let Some(b) = &mut self.sweep.base {
            b.seed = seed;
        }
        for v in &mut self.victims {
            if let Some(c) = &mut v.adversary {
                c.seed = seed;
            }
        }
    }

    /// Seed for attacks without an explicit config.
    pub fn attack_seed(&self) -> u64 {
        self.dataset.seed
    }

    pub fn victim(&self, name: &str) -> Result<&VictimSpec> {
        self.victims.iter().find(|v| v.name == name).ok_or_else(|| Error::Config(format!("unknown victim '{name}'")))
    }

    pub fn attack(&self, name: &str) -> Result<&AttackSpec> {
        self.attacks.iter().find(|a| a.name == name).ok_or_else(|| Error::Config(format!("unknown attack '{name}'")))
    }

    /// Keeps only the named victims, in the given order.
    pub fn select_victims(&mut self, names: &[String]) -> Result<()> {
        self.victims = names.iter().map(|n| self.victim(n).cloned()).collect::<Result<_>>()?;
        Ok(())
    }

    pub fn select_attacks(&mut self, names: &[String]) -> Result<()> {
        self.attacks = names.iter().map(|n| self.attack(n).cloned()).collect::<Result<_>>()?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let d = self.dataset.dim;
        for (i, v) in self.victims.iter().enumerate() {
            if self.victims[..i].iter().any(|o| o.name == v.name) {
                return Err(Error::Config(format!("duplicate victim name '{}'", v.name)));
            }
            if let Some(a) = v.training_adversary(d) {
                a.validate()?;
            }
        }
        for (i, a) in self.attacks.iter().enumerate() {
            if self.attacks[..i].iter().any(|o| o.name == a.name) {
                return Err(Error::Config(format!("duplicate attack name '{}'", a.name)));
            }
            a.resolve(d, self.attack_seed())?;
        }
        Ok(())
    }

    /// Checks the sweep grid before a sweep run.
    pub fn validate_sweep(&self) -> Result<()> {
        let g = &self.sweep;
        if g.temperatures.is_empty() || g.inner_iterations.is_empty() || g.reuse.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if g.temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("sweep temperatures must be positive".into()));
        }
        self.victim(&g.victim)?;
        Ok(())
    }

    pub fn sweep_base(&self) -> AttackConfig {
        self.sweep.base.clone().unwrap_or_else(|| AttackConfig {
            seed: self.attack_seed(),
            ..AttackConfig::mpa_defaults(self.dataset.dim)
        })
    }
}
