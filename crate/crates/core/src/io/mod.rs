//! On-disk formats: binary frames, labels and checkpoints, dataset
//! manifests, pipeline configuration and visual exports.
//!
//! Binary files share a layout: a four-byte magic, a little-endian `u16`
//! version, then little-endian `u32` counts and `f32` payloads.

mod binary;
mod checkpoint;
mod config;
mod export;
mod frame;
mod labels;
mod manifest;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{
    load_config, parse_config, write_config_snapshot, EvalSection, ExportSection, PipelineConfig, SynthSection,
    CONFIG_SNAPSHOT,
};
pub use export::{
    costmap_csv, encode_pgm, encode_ply, eval_report_csv, eval_report_text, field_point_cloud, field_slice, loss_log_csv,
    parse_path_csv, path_csv, traversability_csv, write_pgm, write_ply, LOSS_LOG_HEADER,
};
pub use frame::{decode_frame, encode_frame, read_frame, write_frame, FRAME_MAGIC, FRAME_VERSION, NULL_SEMANTIC};
pub use labels::{decode_labels, encode_labels, read_labels, write_labels, LABEL_MAGIC, LABEL_VERSION, NULL_COLOR};
pub use manifest::{digest_file, read_manifest, sha256_hex, toml_digest, write_manifest, DatasetManifest, ManifestFrame, MANIFEST_VERSION};
