//! End-to-end commands: `train`, `benchmark` and `explain`.
//!
//! Every stage error is wrapped with the stage name, and a failed command
//! removes the files it had already written.

pub mod benchmark;
pub mod config;
pub mod explain;
pub mod report;
pub mod train;

pub use benchmark::{cmd_benchmark, run_benchmark, training_cells, BenchmarkOutcome, TrainingCell};
pub use config::{DataSource, RunConfig};
pub use explain::{
    cmd_explain, explain_in, feature_deltas, validate_indicators, BankInput, Direction, ExplainOptions,
    ExplanationDocument, ExplanationStatus, FeatureDelta, FieldError, Subject,
};
pub use report::{emit_report, OutputSet, ReportBundle, ReportFormat};
pub use train::{cmd_train, evaluate_partitions, fit_model, prepare_data, train_in_memory, PreparedData, TrainOutcome};

pub const STAGE_INGEST: &str = "ingest";
pub const STAGE_LABEL: &str = "label";
pub const STAGE_SELECT: &str = "select";
pub const STAGE_SPLIT: &str = "split";
pub const STAGE_BALANCE: &str = "balance";
pub const STAGE_FIT: &str = "fit";
pub const STAGE_EVALUATE: &str = "evaluate";
pub const STAGE_BENCHMARK: &str = "benchmark";
pub const STAGE_WRITE: &str = "write";

/// Seeds derived from the master seed, one stream per purpose.
pub mod seeds {
    use crate::balancing::StrategyTag;
    use crate::rng::derive;
    use crate::trees::ModelKind;

    pub fn split(master: u64) -> u64 {
        derive(master, 1)
    }

    pub fn balance(seed: u64) -> u64 {
        derive(seed, 2)
    }

    pub fn fit(seed: u64) -> u64 {
        derive(seed, 3)
    }

    /// Seed for one model × strategy benchmark cell.
    pub fn cell(master: u64, model: ModelKind, strategy: StrategyTag) -> u64 {
        let m = ModelKind::ALL.iter().position(|&k| k == model).unwrap_or(0) as u64;
        let s = StrategyTag::ALL.iter().position(|&k| k == strategy).unwrap_or(0) as u64;
        derive(master, 100 + 10 * m + s)
    }

    /// MOC seed for the `i`-th factual of a cell.
    pub fn factual(cell_seed: u64, i: usize) -> u64 {
        derive(cell_seed, 1000 + i as u64)
    }
}
