//! Proprioceptive and acoustic signal synthesis per terrain class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scene::{ImuSample, TactileSample, TerrainClass};

/// Contact-microphone sample rate; its Nyquist frequency equals the
/// 8,192 Hz mel ceiling.
pub const AUDIO_SAMPLE_RATE: u32 = 16_384;
pub const IMU_RATE_HZ: f64 = 200.0;
pub const TACTILE_RATE_HZ: f64 = 100.0;
pub const GRAVITY: f64 = 9.81;
/// Accelerometer noise standard deviation per unit roughness, m/s^2.
pub const ACCEL_NOISE_PER_ROUGHNESS: f64 = 3.0;
/// Robot weight carried by the four feet, newtons.
pub const ROBOT_WEIGHT_N: f64 = 147.0;
/// Balanced standing force fractions, FL, FR, RL, RR.
pub const IDEAL_FORCE_FRACTIONS: [f64; 4] = [0.25, 0.25, 0.25, 0.25];

struct Acoustics {
    resonance_hz: f64,
    decay_s: f64,
    band_hz: f64,
    band_q: f64,
    band_level: f64,
}

fn acoustics(class: TerrainClass) -> Acoustics {
    let (resonance_hz, decay_s, band_hz, band_q, band_level) = match class {
        TerrainClass::Mud => (160.0, 0.060, 250.0, 2.0, 0.30),
        TerrainClass::Grass => (520.0, 0.030, 700.0, 2.5, 0.25),
        TerrainClass::Vegetation => (1100.0, 0.025, 1400.0, 3.0, 0.25),
        TerrainClass::Leaves => (2100.0, 0.020, 2500.0, 3.0, 0.30),
        TerrainClass::Gravel => (3400.0, 0.012, 4000.0, 3.5, 0.35),
        TerrainClass::Concrete => (5200.0, 0.008, 6000.0, 4.0, 0.20),
    };
    Acoustics { resonance_hz, decay_s, band_hz, band_q, band_level }
}

fn check_duration(duration_s: f64) -> Result<()> {
    if duration_s > 0.0 && duration_s.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("duration must be positive, got {duration_s}")))
    }
}

/// RBJ band-pass biquad (constant 0 dB peak gain).
struct BandPass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl BandPass {
    fn new(center_hz: f64, q: f64, sample_rate: f64) -> Self {
        let w0 = std::f64::consts::TAU * center_hz / sample_rate;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        BandPass {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Contact-microphone waveform at [`AUDIO_SAMPLE_RATE`]: footstep impulses
/// at `gait_rate_hz` ringing a class resonance, over class band noise.
pub fn synth_audio(class: TerrainClass, duration_s: f64, gait_rate_hz: f64, seed: u64) -> Result<Vec<f32>> {
    check_duration(duration_s)?;
    if !(gait_rate_hz > 0.0) {
        return Err(Error::input("gait rate must be positive"));
    }
    let sr = AUDIO_SAMPLE_RATE as f64;
    let n = (duration_s * sr).round() as usize;
    let ac = acoustics(class);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = vec![0.0f64; n];
    let mut band = BandPass::new(ac.band_hz, ac.band_q, sr);
    for v in out.iter_mut() {
        let w: f64 = StandardNormal.sample(&mut rng);
        *v = ac.band_level * band.step(w) * 2.0;
    }

    let period = 1.0 / gait_rate_hz;
    let mut t0 = rng.random_range(0.0..period);
    let ring = (ac.decay_s * 8.0 * sr) as usize;
    let omega = std::f64::consts::TAU * ac.resonance_hz / sr;
    while t0 < duration_s {
        let amp = rng.random_range(0.7..1.0);
        let start = (t0 * sr) as usize;
        for k in 0..ring.min(n.saturating_sub(start)) {
            let tk = k as f64 / sr;
            out[start + k] += amp * (-tk / ac.decay_s).exp() * (omega * k as f64).sin();
        }
        t0 += period * rng.random_range(0.95..1.05);
    }
    Ok(out.into_iter().map(|v| v as f32).collect())
}

/// Accelerometer series: gravity plus roughness-scaled noise.
pub fn synth_imu(class: TerrainClass, duration_s: f64, seed: u64) -> Result<Vec<ImuSample>> {
    synth_imu_with_roughness(class.roughness(), duration_s, seed)
}

pub fn synth_imu_with_roughness(roughness: f64, duration_s: f64, seed: u64) -> Result<Vec<ImuSample>> {
    check_duration(duration_s)?;
    let n = (duration_s * IMU_RATE_HZ).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = roughness * ACCEL_NOISE_PER_ROUGHNESS;
    Ok((0..n)
        .map(|i| {
            let mut a = [0.0f32; 3];
            for (axis, v) in a.iter_mut().enumerate() {
                let w: f64 = StandardNormal.sample(&mut rng);
                let g = if axis == 2 { GRAVITY } else { 0.0 };
                *v = (g + sigma * w) as f32;
            }
            ImuSample { t: (i as f64 / IMU_RATE_HZ) as f32, accel: a }
        })
        .collect())
}

/// Foot-force series for a class on ground of the given fore-aft slope.
pub fn synth_tactile(class: TerrainClass, slope: f64, duration_s: f64, seed: u64) -> Result<Vec<TactileSample>> {
    synth_tactile_with_roughness(class.roughness(), slope, duration_s, seed)
}

/// Balanced distribution perturbed by noise proportional to `roughness` and
/// a fore-aft weight shift proportional to `slope`.
pub fn synth_tactile_with_roughness(
    roughness: f64,
    slope: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<TactileSample>> {
    check_duration(duration_s)?;
    let n = (duration_s * TACTILE_RATE_HZ).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const SHIFT: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];
    Ok((0..n)
        .map(|i| {
            let mut forces = [0.0f32; 4];
            for (leg, f) in forces.iter_mut().enumerate() {
                let w: f64 = StandardNormal.sample(&mut rng);
                let frac = IDEAL_FORCE_FRACTIONS[leg] * (1.0 + 0.8 * roughness * w) + 0.25 * slope * SHIFT[leg];
                *f = (ROBOT_WEIGHT_N * frac.max(0.005)) as f32;
            }
            TactileSample { t: (i as f64 / TACTILE_RATE_HZ) as f32, forces }
        })
        .collect())
}
