//! Shared domain types: geometry, colors, frames and labeled samples.

pub mod color;
mod geometry;
mod types;

pub use color::{
    bin_center, bins_to_normalized, denormalize_lab, lab_to_bins, lab_to_rgb, normalize_lab, rgb_to_lab, Lab, Rgb8, COLOR_BINS,
};
pub use geometry::{q32, Point3, Pose};
pub use types::*;
