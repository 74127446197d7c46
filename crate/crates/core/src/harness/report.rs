//! CSV and JSON renditions of result tables.
//!
//! Matrix CSV header:
//! `victim,attack,n_examples,clean_accuracy,robust_accuracy,mean_iterations,n_evaluated,psnr,ssim,wasserstein`.
//! Sweep CSV header:
//! `victim,temperature,inner_iterations,reuse,n_examples,clean_accuracy,robust_accuracy,n_evaluated,psnr`.
//! Missing metrics are empty fields. Floats use shortest round-trip formatting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::{ResultRow, ResultTable};
use super::sweep::SweepTable;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str =
    "victim,attack,n_examples,clean_accuracy,robust_accuracy,mean_iterations,n_evaluated,psnr,ssim,wasserstein";
pub const SWEEP_HEADER: &str =
    "victim,temperature,inner_iterations,reuse,n_examples,clean_accuracy,robust_accuracy,n_evaluated,psnr";

fn to_csv<T: Serialize>(header: &str, rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    let mut out = format!("{header}\n");
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Config(format!("csv: {e}")))?);
    Ok(out)
}

pub fn results_csv(table: &ResultTable) -> Result<String> {
    to_csv(RESULTS_HEADER, &table.rows)
}

pub fn sweep_csv(table: &SweepTable) -> Result<String> {
    to_csv(SWEEP_HEADER, &table.rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Nested {
    victims: Vec<VictimBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VictimBlock {
    victim: String,
    attacks: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Cell {
    attack: String,
    n_examples: usize,
    clean_accuracy: f64,
    robust_accuracy: f64,
    mean_iterations: f64,
    n_evaluated: usize,
    psnr: Option<f64>,
    ssim: Option<f64>,
    wasserstein: Option<f64>,
}

/// JSON nested victim → attack. Victims appear in order of first occurrence.
pub fn results_json(table: &ResultTable) -> Result<String> {
    let mut victims: Vec<VictimBlock> = Vec::new();
    for r in &table.rows {
        let cell = Cell {
            attack: r.attack.clone(),
            n_examples: r.n_examples,
            clean_accuracy: r.clean_accuracy,
            robust_accuracy: r.robust_accuracy,
            mean_iterations: r.mean_iterations,
            n_evaluated: r.n_evaluated,
            psnr: r.psnr,
            ssim: r.ssim,
            wasserstein: r.wasserstein,
        };
        match victims.iter_mut().find(|v| v.victim == r.victim) {
            Some(v) => v.attacks.push(cell),
            None => victims.push(VictimBlock { victim: r.victim.clone(), attacks: vec![cell] }),
        }
    }
    Ok(serde_json::to_string_pretty(&Nested { victims })? + "\n")
}

/// Inverse of [`results_json`] for victim-major tables.
pub fn parse_results_json(s: &str) -> Result<ResultTable> {
    let nested: Nested = serde_json::from_str(s)?;
    let rows = nested
        .victims
        .into_iter()
        .flat_map(|v| {
            let victim = v.victim;
            v.attacks.into_iter().map(move |c| ResultRow {
                victim: victim.clone(),
                attack: c.attack,
                n_examples: c.n_examples,
                clean_accuracy: c.clean_accuracy,
                robust_accuracy: c.robust_accuracy,
                mean_iterations: c.mean_iterations,
                n_evaluated: c.n_evaluated,
                psnr: c.psnr,
                ssim: c.ssim,
                wasserstein: c.wasserstein,
            })
        })
        .collect();
    Ok(ResultTable { rows })
}

pub fn sweep_json(table: &SweepTable) -> Result<String> {
    Ok(serde_json::to_string_pretty(table)? + "\n")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `results.csv` and `results.json` under `dir`.
pub fn emit_reports(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    emit_table(table, dir, "results")
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn emit_table(table: &ResultTable, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, &format!("{stem}.csv"), &results_csv(table)?)?,
        write(dir, &format!("{stem}.json"), &results_json(table)?)?,
    ])
}

/// Writes `sweep.csv` and `sweep.json` under `dir`.
pub fn emit_sweep(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(vec![write(dir, "sweep.csv", &sweep_csv(table)?)?, write(dir, "sweep.json", &sweep_json(table)?)?])
}
