//! Ray sampling and SDF/confidence labels relative to the observed surface.

use serde::{Deserialize, Serialize};

use super::kdtree::SurfaceIndex;
use crate::error::{Error, Result};
use crate::scene::{color, q32, PointCloud, Point3, QuerySample, SampleKind};

/// Smallest label magnitude given to free or negative samples, so their sign
/// survives a sample that coincides with an observed point.
pub const MIN_SDF_MAGNITUDE: f64 = 1e-6;

/// Positions along one LiDAR ray: `n_free` points at `t = k/(n_free+1)`
/// between origin and hit, the hit itself, then `n_neg` points at depths
/// `max_neg_depth * k / n_neg` beyond the hit.
pub fn sample_ray(
    origin: Point3,
    hit: Point3,
    n_free: usize,
    n_neg: usize,
    max_neg_depth: f64,
) -> Result<Vec<(Point3, SampleKind)>> {
    let ray = hit - origin;
    let Some(dir) = ray.normalized() else {
        return Err(Error::input("degenerate ray: origin equals hit point"));
    };
    if !(max_neg_depth >= 0.0) {
        return Err(Error::input("max_neg_depth must be nonnegative"));
    }
    let mut out = Vec::with_capacity(n_free + n_neg + 1);
    for k in 1..=n_free {
        let t = k as f64 / (n_free + 1) as f64;
        out.push((origin + ray * t, SampleKind::Free));
    }
    out.push((hit, SampleKind::Surface));
    for k in 1..=n_neg {
        let depth = max_neg_depth * k as f64 / n_neg as f64;
        out.push((hit + dir * depth, SampleKind::Negative));
    }
    Ok(out)
}

/// Confidence of a negative sample at penetration depth `depth`.
pub fn negative_confidence(depth: f64, decay_k: f64) -> f64 {
    (-decay_k * depth.abs()).exp()
}

/// Labels positioned samples from the nearest observed surface point.
/// `cloud` must be the point set `index` was built from.
pub fn assign_sdf_confidence(
    samples: &[(Point3, SampleKind)],
    index: &SurfaceIndex,
    cloud: &PointCloud,
    decay_k: f64,
) -> Vec<QuerySample> {
    samples
        .iter()
        .map(|&(position, kind)| {
            let position = position.quantized();
            let nearest = index.nearest(position);
            let src = &cloud.points[nearest.index];
            let bins = Some(color::lab_to_bins(src.color));
            match kind {
                SampleKind::Free => QuerySample {
                    position,
                    sdf: q32(nearest.distance.max(MIN_SDF_MAGNITUDE)),
                    confidence: 1.0,
                    color_bins: None,
                    semantic: None,
                    kind,
                },
                SampleKind::Negative => {
                    let sdf = q32(-nearest.distance.max(MIN_SDF_MAGNITUDE));
                    QuerySample {
                        position,
                        sdf,
                        confidence: q32(negative_confidence(sdf, decay_k)),
                        color_bins: bins,
                        semantic: src.semantic,
                        kind,
                    }
                }
                SampleKind::Surface => QuerySample {
                    position,
                    sdf: 0.0,
                    confidence: 1.0,
                    color_bins: bins,
                    semantic: src.semantic,
                    kind,
                },
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayLabelConfig {
    pub n_free: usize,
    pub n_neg: usize,
    pub max_neg_depth: f64,
    /// Confidence decay rate behind surfaces, 1/m.
    pub decay_k: f64,
}

impl Default for RayLabelConfig {
    fn default() -> Self {
        RayLabelConfig { n_free: 4, n_neg: 2, max_neg_depth: 0.5, decay_k: 5.0 }
    }
}
