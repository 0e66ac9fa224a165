//! Metrics, split protocols and experiment orchestration.

mod experiment;
mod metrics;
mod split;
mod tuning;

use std::error::Error as StdError;

use thiserror::Error;

pub use experiment::{
    ablation_steps, calibration_table, feature_label, run_experiment, score_model, sentence_and_document_tables,
    write_report, CalibrationRow, DocumentRow, ExperimentConfig, ExperimentInputs, ExperimentReport, HeldOutScores,
    LanguageRow, RunManifest, CALIBRATION_TABLE, DOCUMENT_TABLE, SENTENCE_TABLE,
};
pub use metrics::{average_ranks, micro_f, pearson, pooled_counts, spearman, PooledCounts};
pub use split::{make_split, Split, SplitKind, SplitSpec};
pub use tuning::{tune, TuningGrid, TuningReport, TuningStep};

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "POLYSCALE_THREADS";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no items to score")]
    Empty,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty {0} partition")]
    EmptyPartition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
}

impl EvalError {
    /// True for errors caused by bad input rather than a failing stage.
    pub fn is_validation(&self) -> bool {
        !matches!(self, EvalError::Stage { .. } | EvalError::Io { .. })
    }
}

pub(crate) fn stage<E: StdError + Send + Sync + 'static>(name: &'static str) -> impl Fn(E) -> EvalError {
    move |e| EvalError::Stage { stage: name, source: Box::new(e) }
}

/// Sizes the global worker pool from `POLYSCALE_THREADS`, if set. Returns
/// the requested count.
pub fn configure_threads() -> Result<Option<usize>, EvalError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| EvalError::Config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist (tests, embedding callers); keep it then.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[cfg(test)]
mod tests;
