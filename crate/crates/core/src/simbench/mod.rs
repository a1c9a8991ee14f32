//! Simulation designs, ground truths, baselines and the experiment runner.

mod cpss;
mod design;
mod experiment;
mod graph;
mod metrics;

pub use cpss::{
    complementary_halves, cpss_baseline, cpss_frequencies, default_q_keep, entry_order, CpssOptions,
};
pub use design::{
    make_design, make_true_model, min_eigenvalue, sample_dataset, sample_design, DesignKind, DesignSpec, Link,
    Scenario, ScenarioOptions, TrueModel,
};
pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentReport, Method, MethodSummary, TrialRow, CSV_HEADER,
};
pub use graph::{make_chain, make_empty_graph, make_small_world, GraphTruth};
pub use metrics::{score_edges, score_selection, symmetric_difference, Metrics};

use crate::data::DataError;
use crate::numerics::NumericsError;
use crate::selectors::SelectorError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid cpss options: {0}")]
    InvalidCpss(String),
    #[error("invalid experiment config key '{key}': {message}")]
    InvalidExperiment { key: String, message: String },
    #[error("trial {trial}, method {method}: {source}")]
    Trial {
        trial: usize,
        method: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
}
