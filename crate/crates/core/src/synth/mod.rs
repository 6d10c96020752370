//! Procedural scenes and simulated multimodal sensor streams.

mod dataset;
mod lidar;
mod sensors;
mod world;

pub use dataset::*;
pub use lidar::*;
pub use sensors::*;
pub use world::*;
