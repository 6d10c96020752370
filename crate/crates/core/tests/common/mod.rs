#![allow(dead_code)]

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wildfusion::audio::MelStack;
use wildfusion::field::{FrameInput, TrainingFrame};
use wildfusion::scene::{Point3, QuerySample, SampleKind};

/// Relative error with a floor on the magnitude, so entries that are both
/// essentially zero compare by absolute difference.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn random_points(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Point3>, Vec<[f64; 3]>) {
    let xyz = (0..n)
        .map(|_| Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)))
        .collect();
    let lab = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    (xyz, lab)
}

pub fn random_stack(bands: usize, frames: usize, rng: &mut ChaCha8Rng) -> MelStack {
    MelStack(Array3::from_shape_simple_fn((4, bands, frames), || rng.random_range(-10.0f32..5.0)))
}

pub fn random_sample(rng: &mut ChaCha8Rng, n_classes: u16) -> QuerySample {
    let kind = [SampleKind::Surface, SampleKind::Free, SampleKind::Negative][rng.random_range(0..3)];
    let surface_like = kind != SampleKind::Free;
    QuerySample {
        position: Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)),
        sdf: match kind {
            SampleKind::Surface => 0.0,
            SampleKind::Free => rng.random_range(0.01..1.0),
            SampleKind::Negative => -rng.random_range(0.01..0.5),
        },
        confidence: if kind == SampleKind::Free { 1.0 } else { rng.random_range(0.0..1.0) },
        color_bins: surface_like.then(|| [rng.random_range(0..16), rng.random_range(0..16), rng.random_range(0..16)]),
        semantic: surface_like.then(|| rng.random_range(0..n_classes)),
        kind,
    }
}

/// A small frame with `points` cloud points and `queries` labeled samples.
pub fn tiny_frame(points: usize, queries: usize, seed: u64) -> TrainingFrame<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xyz, lab) = random_points(points, &mut rng);
    let stack = random_stack(16, 8, &mut rng);
    TrainingFrame {
        input: FrameInput::new(&xyz, &lab, &stack).unwrap(),
        samples: (0..queries).map(|_| random_sample(&mut rng, 9)).collect(),
        traversability: rng.random_range(0.0..1.0),
    }
}

pub fn rotation_z(theta: f64) -> Array2<f64> {
    let (s, c) = theta.sin_cos();
    ndarray::arr2(&[[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}
