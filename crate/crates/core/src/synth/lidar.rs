//! Ray-cast LiDAR emulation by sphere tracing the scene SDF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::Scene;
use crate::scene::{PointCloud, Point3, Pose, SemanticTable, SurfacePoint};

pub const MAX_TRACE_STEPS: usize = 128;
pub const HIT_TOLERANCE: f64 = 1e-4;

/// How ray directions are laid out in the sensor frame (+x forward).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanGenerator {
    /// Two counter-rotating prisms with incommensurate rates.
    Rosette { rate_a: f64, rate_b: f64, radius_deg: f64, pitch_deg: f64 },
    /// Directions drawn uniformly over an azimuth/elevation window.
    Uniform { half_azimuth_deg: f64, min_elevation_deg: f64, max_elevation_deg: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarPattern {
    pub n_rays: usize,
    pub generator: ScanGenerator,
    pub range_noise_sigma: f64,
    pub max_range: f64,
}

impl Default for LidarPattern {
    fn default() -> Self {
        LidarPattern {
            n_rays: 2048,
            generator: ScanGenerator::Rosette {
                rate_a: 1.0,
                rate_b: -(5f64.sqrt() - 1.0) / 2.0 * 37.0,
                radius_deg: 36.0,
                pitch_deg: -24.0,
            },
            range_noise_sigma: 0.0,
            max_range: 15.0,
        }
    }
}

fn direction(azimuth: f64, elevation: f64) -> Point3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Point3::new(ce * ca, ce * sa, se)
}

impl LidarPattern {
    /// Unit ray directions in the sensor frame.
    pub fn directions(&self) -> Vec<Point3> {
        match self.generator {
            ScanGenerator::Rosette { rate_a, rate_b, radius_deg, pitch_deg } => {
                let r = radius_deg.to_radians() / 2.0;
                let pitch = pitch_deg.to_radians();
                (0..self.n_rays)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64;
                        let (sa, ca) = (rate_a * t / 97.0).sin_cos();
                        let (sb, cb) = (rate_b * t / 97.0).sin_cos();
                        let u = r * (ca + cb);
                        let v = r * (sa + sb);
                        direction(u, pitch + v)
                    })
                    .collect()
            }
            ScanGenerator::Uniform { half_azimuth_deg, min_elevation_deg, max_elevation_deg, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ha = half_azimuth_deg.to_radians();
                let (lo, hi) = (min_elevation_deg.to_radians().sin(), max_elevation_deg.to_radians().sin());
                (0..self.n_rays)
                    .map(|_| {
                        let az = rng.random_range(-ha..=ha);
                        // Uniform in sin(elevation) gives uniform density on the sphere.
                        let el = rng.random_range(lo..=hi).asin();
                        direction(az, el)
                    })
                    .collect()
            }
        }
    }
}

/// Marches along `dir` from `origin`; returns the ray parameter of the first
/// hit within `max_range`.
pub fn sphere_trace(scene: &Scene, origin: Point3, dir: Point3, max_range: f64) -> Option<f64> {
    let lipschitz = scene.lipschitz();
    let mut t = 0.0;
    for _ in 0..MAX_TRACE_STEPS {
        let d = scene.sdf(origin + dir * t);
        if d < 0.0 && t == 0.0 {
            return None;
        }
        if d.abs() < HIT_TOLERANCE {
            return Some(t);
        }
        t += d / lipschitz;
        if t > max_range {
            return None;
        }
    }
    None
}

/// Simulates one scan from `pose`. Misses are omitted; each hit is perturbed
/// along its ray by Gaussian range noise.
pub fn simulate_lidar(
    scene: &Scene,
    pose: &Pose,
    pattern: &LidarPattern,
    table: &SemanticTable,
    seed: u64,
) -> PointCloud {
    let origin = pose.position;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, pattern.range_noise_sigma.max(0.0)).expect("finite sigma");
    let mut points = Vec::with_capacity(pattern.n_rays);
    for local in pattern.directions() {
        let dir = pose.rotate(local);
        let Some(t) = sphere_trace(scene, origin, dir, pattern.max_range) else {
            continue;
        };
        let hit = origin + dir * t;
        let (color, semantic) = scene.surface_attributes(hit, table);
        let t_noisy = if pattern.range_noise_sigma > 0.0 { t + noise.sample(&mut rng) } else { t };
        points.push(SurfacePoint {
            position: origin + dir * t_noisy,
            color,
            semantic: Some(semantic),
        });
    }
    PointCloud { points, sensor_origin: origin }
}
