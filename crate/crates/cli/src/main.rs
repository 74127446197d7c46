//! `mpa`: train victims, run attack matrices and sweeps, report metrics.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mpa::classifier::{load_checkpoint, save_checkpoint};
use mpa::harness::{
    attack_victims, emit_reports, emit_sweep, emit_table, eval_slice, obtain_victim, sweep_model, train_victim,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "mpa", version, about = "Multi-norm adversarial attack experiments on a synthetic benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON); built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reseed dataset, training and attacks
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated victim names to keep
    #[arg(long, value_delimiter = ',')]
    victims: Option<Vec<String>>,
    /// Comma-separated attack names to keep
    #[arg(long, value_delimiter = ',')]
    attacks: Option<Vec<String>>,
    /// Worker threads (0 = all cores, 1 = sequential)
    #[arg(long)]
    jobs: Option<usize>,
    /// Load victims from `<dir>/<name>.json` instead of training them
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train victims and write their checkpoints
    Train(Common),
    /// Robust-accuracy matrix over victims × attacks
    Attack(Common),
    /// Temperature × inner-iterations × reuse sweep of MPA
    Sweep(Common),
    /// Success-filtered PSNR/SSIM/WD of each attack against one checkpoint
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Model checkpoint to attack
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print the effective config as JSON
    Config(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.reseed(seed);
    }
    if let Some(out) = &c.out {
        cfg.output.dir = out.clone();
    }
    if let Some(v) = &c.victims {
        cfg.select_victims(v)?;
    }
    if let Some(a) = &c.attacks {
        cfg.select_attacks(a)?;
    }
    if let Some(j) = c.jobs {
        cfg.jobs = j;
    }
    if let Some(dir) = &c.checkpoints {
        for v in &mut cfg.victims {
            v.checkpoint = Some(dir.join(format!("{}.json", v.name)));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn train(cfg: &ExperimentConfig) -> Result<()> {
    let (train, _) = cfg.dataset.generate()?;
    for v in &cfg.victims {
        let t = Instant::now();
        let ckpt = train_victim(v, cfg, &train)?;
        let path = cfg.output.checkpoint(&v.name);
        save_checkpoint(&path, &ckpt)?;
        eprintln!("trained {} in {:.1?}: {}", v.name, t.elapsed(), path.display());
    }
    Ok(())
}

fn attack(cfg: &ExperimentConfig) -> Result<()> {
    let (train, test) = cfg.dataset.generate()?;
    let mut victims = Vec::with_capacity(cfg.victims.len());
    for v in &cfg.victims {
        let t = Instant::now();
        victims.push((v.name.clone(), obtain_victim(v, cfg, &train)?));
        eprintln!("victim {} ready in {:.1?}", v.name, t.elapsed());
    }
    let table = attack_victims(cfg, &victims, eval_slice(cfg, &test))?;
    report_written(&emit_reports(&table, &cfg.output.dir)?);
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate_sweep()?;
    let (train, test) = cfg.dataset.generate()?;
    let spec = cfg.victim(&cfg.sweep.victim)?;
    let model = obtain_victim(spec, cfg, &train)?;
    let table = sweep_model(cfg, &spec.name, &model, eval_slice(cfg, &test))?;
    report_written(&emit_sweep(&table, &cfg.output.dir)?);
    Ok(())
}

fn metrics(cfg: &mut ExperimentConfig, checkpoint: &Path) -> Result<()> {
    if !checkpoint.exists() {
        bail!("checkpoint {} does not exist", checkpoint.display());
    }
    let ckpt = load_checkpoint(checkpoint)?;
    if ckpt.model.input_dim() != cfg.dataset.dim {
        bail!("checkpoint expects {} inputs, dataset has {}", ckpt.model.input_dim(), cfg.dataset.dim);
    }
    cfg.metrics.skip_wasserstein = false;
    let (_, test) = cfg.dataset.generate()?;
    let table = attack_victims(cfg, &[(ckpt.victim.clone(), ckpt.model)], eval_slice(cfg, &test))?;
    report_written(&emit_table(&table, &cfg.output.dir, "metrics")?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(c) => train(&load_config(&c)?),
        Command::Attack(c) => attack(&load_config(&c)?),
        Command::Sweep(c) => sweep(&load_config(&c)?),
        Command::Metrics { common, checkpoint } => metrics(&mut load_config(&common)?, &checkpoint),
        Command::Config(c) => {
            print!("{}", load_config(&c)?.to_json()?);
            Ok(())
        }
    }
}
