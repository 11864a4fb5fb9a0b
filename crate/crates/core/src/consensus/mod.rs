//! Per-pixel selection ensembles over a destination's candidate set.

mod median;
mod metric;
mod select;
mod weights;

pub use median::weighted_median;
pub use metric::{distance_map, MetricKind, PSNR_MAX};
pub use select::{cshift_select, mean_ensemble, median_with_weights};
pub use weights::{compute_weights, Candidate, CandidateSet, EnsembleWeights, KernelKind, WeightInput, SIM_EPS};
