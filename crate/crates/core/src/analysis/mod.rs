//! Evaluation metrics, learning curves, feature ranking and timing.

mod curves;
mod metrics;
mod ranking;
mod timing;

pub use curves::{
    available_training_days, curve_csv, learning_curve_features, learning_curve_training_size, CurvePoint,
    CurveSetup,
};
pub use metrics::{
    evaluate, evaluate_ma, evaluate_predictions, ma_decisions, roc_area, AggregateMetrics, ClassMetrics,
    EvaluationReport,
};
pub use ranking::{
    equal_frequency_bins, pca, rank_features, rank_features_info_gain, FeatureGain, FeatureRanking, PcaResult,
    PrincipalComponent,
};
pub use timing::{time_train_test, TimingReport};
