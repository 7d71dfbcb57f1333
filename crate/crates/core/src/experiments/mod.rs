//! Configurable experiment pipelines and their CSV outputs.

mod config;
mod output;
mod runner;

pub use config::{ConfigOverrides, ExperimentConfig, ExperimentKind, Hypers, Strategy};
pub use output::{csv_header, write_fill_study, write_mcmc, write_run, CSV_VERSION};
pub use runner::{
    pilot_chain, resolve_hypers, run_fill_study, run_mcmc, run_rate_study, run_repeated,
    run_single, Aggregate, ConcentrationReport, FailedRepetition, FillRecord, FillStudyResult,
    FillSummary, McmcResult, Record, RunResult, StrategyRate, INTERVAL_PROBS,
};
