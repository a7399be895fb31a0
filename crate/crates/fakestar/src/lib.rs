//! File formats, ingestion and the `fakestar` command-line pipeline built on
//! `fakestar-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
#[cfg(feature = "live")]
pub mod live;
pub mod parallel;

pub use config::PipelineConfig;
pub use error::{AppError, AppResult};
pub use fakestar_core as core;
