use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Number of frames produced without padding.
pub fn stft_frame_count(len: usize, n_fft: usize, hop: usize) -> usize {
    if len < n_fft || hop == 0 {
        0
    } else {
        1 + (len - n_fft) / hop
    }
}

/// One-sided magnitude spectrogram, shape `[n_fft/2 + 1, T]`.
pub fn stft(waveform: &[f32], n_fft: usize, hop: usize) -> Result<Array2<f64>> {
    if n_fft < 2 || hop == 0 || hop > n_fft {
        return Err(Error::config(format!("invalid STFT geometry n_fft={n_fft} hop={hop}")));
    }
    if waveform.len() < n_fft {
        return Err(Error::input(format!(
            "waveform of {} samples is shorter than n_fft={n_fft}",
            waveform.len()
        )));
    }
    let frames = stft_frame_count(waveform.len(), n_fft, hop);
    let bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut out = Array2::zeros((bins, frames));
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for t in 0..frames {
        let start = t * hop;
        for (i, c) in buf.iter_mut().enumerate() {
            *c = Complex::new(waveform[start + i] as f64 * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            out[[k, t]] = buf[k].norm();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft_magnitudes(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &x) in frame.iter().enumerate() {
                    let phase = -2.0 * PI * (k * i % n) as f64 / n as f64;
                    re += x * phase.cos();
                    im += x * phase.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn zero_input_gives_zero_magnitudes() {
        let s = stft(&vec![0.0; 4096], 2048, 512).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_count_formula() {
        let s = stft(&vec![0.0; 8192], 2048, 512).unwrap();
        assert_eq!(s.dim(), (1025, 13));
        assert_eq!(stft_frame_count(2048, 2048, 512), 1);
        assert_eq!(stft_frame_count(2047, 2048, 512), 0);
    }

    #[test]
    fn short_waveform_is_rejected() {
        assert!(stft(&[0.0; 100], 2048, 512).is_err());
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let window = hann_window(2048);
        for _ in 0..5 {
            let x: Vec<f32> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = stft(&x, 2048, 512).unwrap();
            let windowed: Vec<f64> = x.iter().zip(&window).map(|(&a, &w)| a as f64 * w).collect();
            let oracle = naive_dft_magnitudes(&windowed);
            for k in 0..1025 {
                assert!((s[[k, 0]] - oracle[k]).abs() < 1e-5, "bin {k}");
            }
        }
    }

    #[test]
    fn bin_center_sine_concentrates_energy() {
        let k0 = 100;
        let x: Vec<f32> = (0..2048)
            .map(|i| (2.0 * PI * k0 as f64 * i as f64 / 2048.0).sin() as f32)
            .collect();
        let s = stft(&x, 2048, 512).unwrap();
        let power: Vec<f64> = s.column(0).iter().map(|m| m * m).collect();
        let total: f64 = power.iter().sum();
        // Hann spreads a bin-centered tone over k-1, k, k+1.
        let main: f64 = power[k0 - 1..=k0 + 1].iter().sum();
        assert!(main / total > 0.99);
        let argmax = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
        assert_eq!(argmax, k0);
    }

    #[test]
    fn parseval_holds_for_windowed_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f32> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = stft(&x, 2048, 512).unwrap();
        let window = hann_window(2048);
        let energy: f64 = x.iter().zip(&window).map(|(&a, &w)| (a as f64 * w).powi(2)).sum();
        let n = 2048;
        let mut spectral = 0.0;
        for k in 0..=n / 2 {
            let p = s[[k, 0]].powi(2);
            spectral += if k == 0 || k == n / 2 { p } else { 2.0 * p };
        }
        spectral /= n as f64;
        assert!((spectral - energy).abs() / energy < 1e-6);
    }
}
