//! Confusion matrices, accuracy/precision/recall/F-score and the Wilcoxon
//! signed-rank test used to compare runs.

mod compare;
mod confusion;
mod metrics;
mod wilcoxon;

pub use compare::{compare_grids, ComparisonCell, MetricGrid, MetricPoint, TestOutcome};
pub use confusion::{confusion, ConfusionMatrix};
pub use metrics::{evaluate, f_score, metrics, truncate_to, Averaging, ClassScores, Metric, MetricsReport};
pub use wilcoxon::{wilcoxon_exact_p, wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};
