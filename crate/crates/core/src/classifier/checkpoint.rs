//! Self-describing JSON model checkpoints.
//!
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! `save → load → save` reproduces the same bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MlpModel, TrainConfig};
use crate::attacks::AttackConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "mpa-mlp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub victim: String,
    pub train_config: TrainConfig,
    /// Inner adversary used during training, if any.
    pub adversary: Option<AttackConfig>,
    pub model: MlpModel,
}

impl Checkpoint {
    pub fn new(
        victim: impl Into<String>,
        train_config: TrainConfig,
        adversary: Option<AttackConfig>,
        model: MlpModel,
    ) -> Self {
        Self { format: CHECKPOINT_FORMAT.to_string(), victim: victim.into(), train_config, adversary, model }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(s)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!("unsupported checkpoint format `{}`", ckpt.format)));
        }
        ckpt.model.validate()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, ckpt.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&s)
}
