use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::stft::stft;
use crate::error::{Error, Result};
use crate::scene::LEG_COUNT;

/// Added to Mel power before the natural log.
pub const LOG_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
    pub segment_s: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            fmin: 0.0,
            fmax: 8192.0,
            sample_rate: crate::synth::AUDIO_SAMPLE_RATE,
            segment_s: 0.5,
        }
    }
}

impl MelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 2 || self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::config(format!("invalid STFT geometry n_fft={} hop={}", self.n_fft, self.hop)));
        }
        if self.n_mels == 0 {
            return Err(Error::config("n_mels must be positive"));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= self.sample_rate as f64 / 2.0) {
            return Err(Error::config(format!(
                "mel range [{}, {}] Hz invalid for sample rate {}",
                self.fmin, self.fmax, self.sample_rate
            )));
        }
        if !(self.segment_s > 0.0) || self.segment_samples() < self.n_fft {
            return Err(Error::config(format!("segment of {} s is shorter than one FFT window", self.segment_s)));
        }
        Ok(())
    }

    pub fn segment_samples(&self) -> usize {
        (self.segment_s * self.sample_rate as f64).round() as usize
    }

    /// Frames per log-mel matrix.
    pub fn frames(&self) -> usize {
        super::stft_frame_count(self.segment_samples(), self.n_fft, self.hop)
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular unit-peak filters, shape `[n_mels, n_fft/2 + 1]`.
pub fn mel_filterbank(config: &MelConfig) -> Result<Array2<f64>> {
    config.validate()?;
    let bins = config.n_fft / 2 + 1;
    let (lo, hi) = (hz_to_mel(config.fmin), hz_to_mel(config.fmax));
    let edges: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect();
    let bin_hz = config.sample_rate as f64 / config.n_fft as f64;
    let mut fb = Array2::zeros((config.n_mels, bins));
    for m in 0..config.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut any = false;
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let w = ((f - left) / (center - left)).min((right - f) / (right - center));
            if w > 0.0 {
                fb[[m, k]] = w;
                any = true;
            }
        }
        if !any {
            return Err(Error::config(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; reduce n_mels or raise n_fft"
            )));
        }
    }
    Ok(fb)
}

/// Center frequency of each Mel filter in Hz.
pub fn mel_centers(config: &MelConfig) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(config.fmin), hz_to_mel(config.fmax));
    (1..=config.n_mels)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect()
}

fn log_mel_with(waveform: &[f32], config: &MelConfig, fb: &Array2<f64>) -> Result<Array2<f32>> {
    let n = config.segment_samples();
    if waveform.len() < n {
        return Err(Error::input(format!(
            "waveform of {} samples is shorter than the {n}-sample segment",
            waveform.len()
        )));
    }
    let power = stft(&waveform[..n], config.n_fft, config.hop)?.mapv(|m| m * m);
    Ok(fb.dot(&power).mapv(|p| (p + LOG_EPSILON).ln() as f32))
}

/// Log-Mel matrix `[n_mels, T]` over the first `segment_s` seconds.
pub fn mel_spectrogram(waveform: &[f32], config: &MelConfig) -> Result<Array2<f32>> {
    let fb = mel_filterbank(config)?;
    log_mel_with(waveform, config, &fb)
}

/// Per-leg log-Mel matrices stacked as `[legs, n_mels, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MelStack(pub Array3<f32>);

impl MelStack {
    /// Computes the stack for all legs of a frame, reusing one filterbank.
    pub fn from_waveforms(legs: &[Vec<f32>], config: &MelConfig) -> Result<Self> {
        let fb = mel_filterbank(config)?;
        let mats = legs
            .iter()
            .map(|w| log_mel_with(w, config, &fb))
            .collect::<Result<Vec<_>>>()?;
        stack_legs(&mats)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.0.dim()
    }
}

/// Stacks matrices in leg order front-left, front-right, rear-left, rear-right.
pub fn stack_legs(mats: &[Array2<f32>]) -> Result<MelStack> {
    if mats.len() != LEG_COUNT {
        return Err(Error::input(format!("expected {LEG_COUNT} leg spectrograms, got {}", mats.len())));
    }
    let dim = mats[0].dim();
    if let Some(bad) = mats.iter().position(|m| m.dim() != dim) {
        return Err(Error::input(format!("leg {bad} spectrogram shape {:?} differs from {dim:?}", mats[bad].dim())));
    }
    let mut out = Array3::zeros((LEG_COUNT, dim.0, dim.1));
    for (leg, m) in mats.iter().enumerate() {
        out.index_axis_mut(ndarray::Axis(0), leg).assign(m);
    }
    Ok(MelStack(out))
}
