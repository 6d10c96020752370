use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::binary::{read_file, write_file};
use crate::error::{Error, Result};
use crate::synth::Split;

pub const MANIFEST_VERSION: u32 = 1;

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// SHA-256 of a value's TOML serialization.
pub fn toml_digest<T: Serialize>(value: &T) -> Result<String> {
    let text = toml::to_string(value).map_err(|e| Error::config(e.to_string()))?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn digest_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_file(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFrame {
    pub id: u32,
    pub split: Split,
    /// Frame file, relative to the manifest directory.
    pub file: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub scene_seed: u64,
    /// Seed of the scene behind the unseen-scene test frames.
    pub unseen_scene_seed: u64,
    pub scene_config_sha256: String,
    pub sample_rate: u32,
    pub accumulation_window: f32,
    pub color_bins: usize,
    pub frames: Vec<ManifestFrame>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::input(format!("unsupported manifest version {}", self.version)));
        }
        let mut ids = HashSet::new();
        for f in &self.frames {
            if !ids.insert(f.id) {
                return Err(Error::input(format!("frame {} is listed twice", f.id)));
            }
            if f.labels.is_some() != f.labels_sha256.is_some() {
                return Err(Error::input(format!("frame {} has labels without a digest", f.id)));
            }
        }
        Ok(())
    }

    pub fn ids(&self, split: Split) -> Vec<u32> {
        self.frames.iter().filter(|f| f.split == split).map(|f| f.id).collect()
    }

    pub fn frame(&self, id: u32) -> Option<&ManifestFrame> {
        self.frames.iter().find(|f| f.id == id)
    }

    /// Recomputes every referenced file's digest under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for f in &self.frames {
            let pairs = std::iter::once((&f.file, &f.sha256)).chain(f.labels.as_ref().zip(f.labels_sha256.as_ref()));
            for (file, want) in pairs {
                let got = digest_file(&dir.join(file))?;
                if &got != want {
                    return Err(Error::input(format!("digest mismatch for {file}: manifest {want}, file {got}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: DatasetManifest = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    write_file(path, manifest.to_toml()?.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::config(format!("{} is not UTF-8", path.display())))?;
    DatasetManifest::from_toml(text)
}
