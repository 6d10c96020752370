use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Number of random Fourier frequencies `m`.
    pub fourier_features: usize,
    pub fourier_sigma: f64,
    pub include_input: bool,
    /// Per-point widths: first stage, middle stage, global feature.
    pub point_widths: [usize; 3],
    /// T-Net widths: two per-point layers then one fully connected layer.
    pub tnet_widths: [usize; 3],
    pub audio_channels: [usize; 3],
    pub audio_dim: usize,
    pub trunk_width: usize,
    pub head_width: usize,
    pub traversability_width: usize,
    /// SDF output bound in meters.
    pub s_max: f64,
    /// Semantic classes, excluding the NULL class.
    pub n_classes: usize,
    pub color_bins: usize,
    pub dropout: f64,
    pub softplus_beta: f64,
    /// Multiplier applied to log-Mel inputs.
    pub audio_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            fourier_features: 64,
            fourier_sigma: 2.0,
            include_input: true,
            point_widths: [64, 128, 512],
            tnet_widths: [64, 128, 64],
            audio_channels: [16, 32, 64],
            audio_dim: 128,
            trunk_width: 256,
            head_width: 128,
            traversability_width: 64,
            s_max: 3.0,
            n_classes: 9,
            color_bins: crate::scene::COLOR_BINS,
            dropout: 0.1,
            softplus_beta: 10.0,
            audio_scale: 0.1,
        }
    }
}

impl ModelConfig {
    /// Width-`w` model with `m` Fourier features, for tests.
    pub fn tiny(w: usize, m: usize) -> Self {
        ModelConfig {
            fourier_features: m,
            point_widths: [w, w, w],
            tnet_widths: [w, w, w],
            audio_channels: [w, w, w],
            audio_dim: w,
            trunk_width: w,
            head_width: w,
            traversability_width: w,
            ..ModelConfig::default()
        }
    }

    pub fn encoding_dim(&self) -> usize {
        2 * self.fourier_features + if self.include_input { 3 } else { 0 }
    }

    pub fn frame_dim(&self) -> usize {
        self.point_widths[2] + self.audio_dim
    }

    pub fn semantic_outputs(&self) -> usize {
        self.n_classes + 1
    }

    pub fn validate(&self) -> Result<()> {
        let widths = self
            .point_widths
            .iter()
            .chain(&self.tnet_widths)
            .chain(&self.audio_channels)
            .chain([&self.audio_dim, &self.trunk_width, &self.head_width, &self.traversability_width]);
        if widths.into_iter().any(|&w| w == 0) {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.encoding_dim() == 0 {
            return Err(Error::config("query encoding is empty"));
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::config(format!("s_max must be positive, got {}", self.s_max)));
        }
        if !(self.fourier_sigma >= 0.0) || !(self.softplus_beta > 0.0) || !self.audio_scale.is_finite() {
            return Err(Error::config("fourier_sigma, softplus_beta and audio_scale must be valid"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if self.n_classes == 0 || self.color_bins < 2 {
            return Err(Error::config("need at least one semantic class and two color bins"));
        }
        Ok(())
    }
}

/// Which prediction heads are trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadEnable {
    /// Also gates the Eikonal term.
    pub sdf: bool,
    pub confidence: bool,
    pub semantics: bool,
    pub color: bool,
    pub traversability: bool,
}

impl Default for HeadEnable {
    fn default() -> Self {
        HeadEnable { sdf: true, confidence: true, semantics: true, color: true, traversability: true }
    }
}

/// Loss weights and optimizer settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TrainFields", into = "TrainFields")]
pub struct TrainConfig {
    /// Weights of (sdf, eikonal, confidence, semantics, color, traversability).
    pub lambda: [f64; 6],
    pub alpha: f64,
    pub beta: f64,
    pub huber_delta: f64,
    pub learning_rate: f64,
    pub batch_queries: usize,
    pub epochs: usize,
    pub seed: u64,
    pub heads: HeadEnable,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: [1.0, 0.01, 0.5, 1.0, 0.5, 1.0],
            alpha: 0.5,
            beta: 2.0,
            huber_delta: 0.1,
            learning_rate: 1e-3,
            batch_queries: 1024,
            epochs: 100,
            seed: 0,
            heads: HeadEnable::default(),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Serialized form of [`TrainConfig`] with one key per loss weight.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrainFields {
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
    lambda4: f64,
    lambda5: f64,
    lambda6: f64,
    alpha: f64,
    beta: f64,
    huber_delta: f64,
    learning_rate: f64,
    batch_queries: usize,
    epochs: usize,
    seed: u64,
    heads: HeadEnable,
    adam_beta1: f64,
    adam_beta2: f64,
    adam_eps: f64,
}

impl Default for TrainFields {
    fn default() -> Self {
        TrainConfig::default().into()
    }
}

impl From<TrainConfig> for TrainFields {
    fn from(c: TrainConfig) -> Self {
        let [lambda1, lambda2, lambda3, lambda4, lambda5, lambda6] = c.lambda;
        TrainFields {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
            lambda5,
            lambda6,
            alpha: c.alpha,
            beta: c.beta,
            huber_delta: c.huber_delta,
            learning_rate: c.learning_rate,
            batch_queries: c.batch_queries,
            epochs: c.epochs,
            seed: c.seed,
            heads: c.heads,
            adam_beta1: c.adam_beta1,
            adam_beta2: c.adam_beta2,
            adam_eps: c.adam_eps,
        }
    }
}

impl From<TrainFields> for TrainConfig {
    fn from(f: TrainFields) -> Self {
        TrainConfig {
            lambda: [f.lambda1, f.lambda2, f.lambda3, f.lambda4, f.lambda5, f.lambda6],
            alpha: f.alpha,
            beta: f.beta,
            huber_delta: f.huber_delta,
            learning_rate: f.learning_rate,
            batch_queries: f.batch_queries,
            epochs: f.epochs,
            seed: f.seed,
            heads: f.heads,
            adam_beta1: f.adam_beta1,
            adam_beta2: f.adam_beta2,
            adam_eps: f.adam_eps,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::config(format!("loss weights must be finite and nonnegative: {:?}", self.lambda)));
        }
        if self.batch_queries == 0 {
            return Err(Error::config("batch_queries must be positive"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.huber_delta > 0.0) {
            return Err(Error::config("alpha, beta must be nonnegative and huber_delta positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2) && self.adam_eps > 0.0) {
            return Err(Error::config("Adam moments must lie in [0, 1) with positive epsilon"));
        }
        Ok(())
    }
}
