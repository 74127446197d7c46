//! Experiment driver: synthetic data, victims, attack matrices, sweeps and reports.

mod config;
mod dataset;
mod matrix;
mod report;
mod sweep;

pub use config::{AttackSpec, ExperimentConfig, OutputPaths, SweepGrid, VictimKind, VictimSpec};
pub use dataset::{generate_dataset, DatasetSpec};
pub use matrix::{
    attack_victims, eval_slice, evaluate, obtain_victim, run_attack_matrix, summarize_row, train_victim, Evaluation,
    ResultRow, ResultTable,
};
pub use report::{
    emit_reports, emit_sweep, emit_table, parse_results_json, results_csv, results_json, sweep_csv, sweep_json,
    RESULTS_HEADER, SWEEP_HEADER,
};
pub use sweep::{run_sweep, sweep_model, SweepRow, SweepTable};
