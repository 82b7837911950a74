//! Training, distillation, evaluation and file formats on top of
//! [`mvat_core`].
//!
//! - [`io`]: WAV and corpus-manifest files
//! - [`config`]: the sectioned run configuration
//! - [`checkpoint`]: checkpoint files
//! - [`trainer`]: training, distillation and evaluation loops
//! - [`export`]: temporal-attention-map dumps and metric reports

pub mod checkpoint;
pub mod config;
mod error;
pub mod export;
pub mod io;
pub mod trainer;

pub use error::{Error, Result};
pub use mvat_core as core;
