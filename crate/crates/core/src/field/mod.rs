//! Multi-head implicit field: encoders, trunk, heads, loss and trainer.

mod config;
mod grid;
mod loss;
mod model;
mod params;
pub mod tape;
mod train;

pub use config::{HeadEnable, ModelConfig, TrainConfig};
pub use grid::{query_grid, GridPrediction, GridSpec3};
pub use loss::{loss_from_predictions, LossBreakdown};
pub use model::{FieldModel, FrameFeatures, FrameInput, PREDICT_CHUNK};
pub use params::{ParamStore, Tensor};
pub use train::{evaluate_loss, loss_and_gradients, train, Adam, TrainReport, TrainingFrame};
