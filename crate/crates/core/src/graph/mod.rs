//! The multi-task graph, pseudo-label store, and the consensus-shift
//! iteration driver with its graph-level experiments.

mod dataset;
mod driver;
mod experiments;
mod store;
mod task_graph;

pub use dataset::{Dataset, DatasetConfig, MANIFEST};
pub use driver::{
    edge_seed, ensemble_destination, evaluate_test, train_phase, ensemble_phase, init_from_experts, run_cshift, run_iteration, store_l1,
    train_one_edge, DestEnsemble, EdgeOutcome, ExpertBank, IterationConfig, IterationOutput, RunDir, RunResult,
    RunSummary, Selection, MAX_FAILED_EDGE_SHARE,
};
pub use experiments::*;
pub use store::PseudoLabelStore;
pub use task_graph::{edge_file, ordered_pairs, EdgePredictor, TaskGraph};
