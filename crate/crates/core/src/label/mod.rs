//! Ground-truth labels: SDF and confidence along LiDAR rays, and the
//! per-frame traversability score.

mod kdtree;
mod rays;
mod traversability;

pub use kdtree::{Nearest, SurfaceIndex, LEAF_SIZE};
pub use rays::{assign_sdf_confidence, negative_confidence, sample_ray, RayLabelConfig, MIN_SDF_MAGNITUDE};
pub use traversability::*;

use crate::error::{Error, Result};
use crate::scene::{q32, Frame, QuerySample};

/// Labels of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFrame {
    pub frame_id: u32,
    pub samples: Vec<QuerySample>,
    pub traversability: f64,
}

/// Samples every ray of the frame's cloud and scores its traversability.
pub fn label_frame(
    frame: &Frame,
    config: &RayLabelConfig,
    calibration: &TraversabilityCalibration,
) -> Result<LabeledFrame> {
    let index = SurfaceIndex::build(&frame.cloud.positions())?;
    let origin = frame.cloud.sensor_origin;
    let per_ray = config.n_free + config.n_neg + 1;
    let mut samples = Vec::with_capacity(frame.cloud.len() * per_ray);
    for p in &frame.cloud.points {
        let positioned = sample_ray(origin, p.position, config.n_free, config.n_neg, config.max_neg_depth)?;
        samples.extend(assign_sdf_confidence(&positioned, &index, &frame.cloud, config.decay_k));
    }
    for (i, s) in samples.iter().enumerate() {
        s.check().map_err(|message| Error::Validation { index: i, message })?;
    }
    let traversability = q32(traversability_score(&frame.imu, &frame.tactile, calibration)?);
    Ok(LabeledFrame { frame_id: frame.id, samples, traversability })
}
