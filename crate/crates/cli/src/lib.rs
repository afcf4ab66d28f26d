//! Batch front end for `sectorscope`: per-stage subcommands and a configured
//! end-to-end pipeline that writes CSV, JSON and SVG artifacts with a hashed
//! manifest.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod plots;
pub mod svg;
pub mod tables;

pub use bundle::{Bundle, Manifest};
pub use config::{PipelineConfig, CONFIG_ENV};
pub use pipeline::{run_pipeline, PipelineError, Stage};
