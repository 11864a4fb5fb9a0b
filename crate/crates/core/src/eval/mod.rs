//! Metrics, alignment, domain-gap measurement and report emission.

mod histogram;
mod metrics;
mod mmd;
mod report;
pub mod svg;

pub use histogram::histogram_specification;
pub use metrics::{candidate_variance, l1_x100, mean_l1_x100};
pub use mmd::{mmd2_unbiased, Bandwidth};
pub use report::{
    comparison_csv, consensus_variance_curve, edge_improvement_csv, edge_improvement_report, edge_metrics_csv,
    parse_edge_metrics, variance_csv, write_text, CandidateSnapshot, EdgeImprovement, EdgeMetric, Method,
    MetricRow, MetricTable, VariancePoint, EDGE_METRICS_HEADER, METRICS_HEADER,
};
