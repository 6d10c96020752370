//! Multimodal implicit mapping for legged robots.
//!
//! Synthetic multimodal sensing ([`synth`]), ground-truth labeling
//! ([`label`]), audio features ([`audio`]), a multi-head implicit field with
//! its trainer ([`field`]), traversability costmaps and A* ([`nav`]),
//! evaluation metrics ([`metrics`]) and on-disk formats ([`io`]).

pub mod audio;
pub mod error;
pub mod field;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};
pub mod io;
pub mod label;
pub mod metrics;
pub mod nav;
