//! Contact-microphone features: STFT, Mel filterbank and per-leg stacking.

mod mel;
mod stft;

pub use mel::{hz_to_mel, mel_centers, mel_filterbank, mel_spectrogram, mel_to_hz, stack_legs, MelConfig, MelStack, LOG_EPSILON};
pub use stft::{hann_window, stft, stft_frame_count};
