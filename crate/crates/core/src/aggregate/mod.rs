//! Resample-aggregate procedures over synthetic replicates: selection
//! frequencies and active sets, EBIC tuning, averaged p-values and
//! aggregated neighbourhood selection.

mod generator;
mod graph;
mod inference;
mod selection;

pub use generator::{Generator, GeneratorKind, ReplicateSource};
pub use graph::{edge_set, run_graph_selection, GraphOptions, GraphResult, GraphRule};
pub use inference::{average_pvalues, run_inference, InferenceResult};
pub use selection::{
    active_set, run_selection, selection_frequencies, tune_selection, tune_with_fid, Candidate, LambdaMode,
    ReplicateRecord, SelectionOptions, SelectionResult, TuningEntry, DEFAULT_THRESHOLDS,
};

use crate::data::DataError;
use crate::diffusion::DiffusionError;
use crate::numerics::NumericsError;
use crate::selectors::SelectorError;
use crate::simbench::SimError;

#[derive(Debug, thiserror::Error)]
pub enum AggregateError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("replicate {b} failed: {source}")]
    Replicate {
        b: usize,
        #[source]
        source: Box<AggregateError>,
    },
    #[error("no tuning candidates")]
    NoCandidates,
    #[error("every tuning candidate has an infeasible refit")]
    AllCandidatesInfeasible,
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Runs `task(b)` for `b = 1..=count` and returns results in index order.
/// The first failing index (smallest `b`) is reported regardless of scheduling.
pub(crate) fn map_replicates<T, F>(count: usize, task: F) -> Result<Vec<T>, AggregateError>
where
    T: Send,
    F: Fn(usize) -> Result<T, AggregateError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<T, AggregateError>> = {
        use rayon::prelude::*;
        (1..=count).into_par_iter().map(&task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<T, AggregateError>> = (1..=count).map(&task).collect();

    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| AggregateError::Replicate {
                b: i + 1,
                source: Box::new(e),
            })
        })
        .collect()
}
