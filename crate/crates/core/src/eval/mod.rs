//! Metrics, reports and experiment orchestration.

mod experiments;
mod metrics;
mod report;

pub use experiments::{
    default_subsets, measure_latency, rate_trend, run_ablation, run_rate_sweep, score_model, simulate_frames,
    train_and_score, AblationRow, ExperimentReport, FeatureSubset, RateRow, RateTrend, Scored, Split,
};
pub use metrics::{score_events, score_tracking, ConfusionMatrix, ErrorCdf};
pub use report::{emit_ablation, emit_rate_sweep, emit_report, report_records};
