//! Configuration-driven experiment runner behind the `symsample` CLI.

mod config;
pub mod output;
mod runner;

pub use config::{
    AisConfig, ExperimentConfig, ModelSpec, OracleConfig, PathChoice, SymmetrySpec, TtConfig,
    DEFAULT_TT_PROBABILITY, DEFAULT_WARMUP_SWEEPS,
};
pub use output::ComparisonRow;
pub use runner::{
    build_action, build_model, run_experiment, with_workers, AisStats, Command, ModelStats,
    OracleStats, RunSummary, SymmetryStats, TtStats,
};
