use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{read_file, write_file};
use crate::audio::MelConfig;
use crate::error::{Error, Result};
use crate::field::{ModelConfig, TrainConfig};
use crate::label::RayLabelConfig;
use crate::metrics::EVAL_POOL;
use crate::nav::NavParams;
use crate::synth::{DatasetConfig, SceneConfig};

/// File name of the resolved configuration written into output directories.
pub const CONFIG_SNAPSHOT: &str = "config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub scene_seed: u64,
    pub trajectory_seed: u64,
    pub frames: usize,
    /// Extra frames recorded in a second scene for the unseen-scene split.
    pub unseen_frames: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { scene_seed: 0, trajectory_seed: 1, frames: 100, unseen_frames: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub pool: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { pool: EVAL_POOL, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    /// Field lattice resolution along x, y, z.
    pub resolution: [usize; 3],
    /// Height of the exported SDF slice, meters above the sensor.
    pub slice_z: f64,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection { resolution: [64, 64, 24], slice_z: -0.4 }
    }
}

/// Every tunable of the pipeline, one section per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub synth: SynthSection,
    pub scene: SceneConfig,
    pub dataset: DatasetConfig,
    pub label: RayLabelConfig,
    pub audio: MelConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub nav: NavParams,
    pub eval: EvalSection,
    pub export: ExportSection,
}

fn section(name: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        other => Error::Config(format!("{name}: {other}")),
    })
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("{key}: {what}")))
            }
        };
        check(self.synth.frames > 0, "synth.frames", "must be positive")?;
        section("scene", self.scene.validate())?;
        let d = &self.dataset;
        check(d.lidar.n_rays > 0, "dataset.lidar.n_rays", "must be positive")?;
        check(d.lidar.max_range > 0.0, "dataset.lidar.max_range", "must be positive")?;
        check(d.lidar.range_noise_sigma >= 0.0, "dataset.lidar.range_noise_sigma", "must be nonnegative")?;
        check(d.audio_duration_s > 0.0, "dataset.audio_duration_s", "must be positive")?;
        check(d.gait_rate_hz > 0.0, "dataset.gait_rate_hz", "must be positive")?;
        check(
            d.train_ratio >= 0.0 && d.val_ratio >= 0.0 && d.train_ratio + d.val_ratio <= 1.0,
            "dataset.train_ratio",
            "train and val ratios must be nonnegative and sum to at most 1",
        )?;
        check(self.label.max_neg_depth > 0.0, "label.max_neg_depth", "must be positive")?;
        check(self.label.decay_k > 0.0, "label.decay_k", "must be positive")?;
        section("audio", self.audio.validate())?;
        check(
            self.audio.segment_s <= d.audio_duration_s,
            "audio.segment_s",
            "must not exceed dataset.audio_duration_s",
        )?;
        section("model", self.model.validate())?;
        section("train", self.train.validate())?;
        section("nav", self.nav.validate())?;
        check(self.eval.pool > 0, "eval.pool", "must be positive")?;
        check(self.export.resolution.iter().all(|&n| n >= 2), "export.resolution", "needs at least 2 per axis")?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| line_of(text, s.start));
        Error::Config(format!("line {line}: {}", e.message()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::config(format!("{} is not UTF-8", path.display())))?;
    parse_config(text)
}

/// Writes the resolved configuration into `dir`.
pub fn write_config_snapshot(dir: &Path, cfg: &PipelineConfig) -> Result<()> {
    write_file(&dir.join(CONFIG_SNAPSHOT), cfg.to_toml()?.as_bytes())
}
