//! Evaluation protocol: prediction filtering and color, geometry, semantic
//! and confidence metrics.

mod evaluate;
mod scores;

pub use evaluate::{
    evaluate, filter_valid, EvalFrame, EvalOptions, EvalReport, FieldPredictor, FrameReport, GroundTruthPredictor,
    ModelPredictor, EVAL_POOL,
};
pub use scores::{
    classification_metrics, color_from_errors, color_metrics, ece, geometry_metrics, ClassificationMetrics, ColorMetrics,
    GeometryMetrics, ECE_BINS,
};
