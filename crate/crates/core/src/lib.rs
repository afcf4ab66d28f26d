//! Correlation eigenspectra, sector clustering, spectral changepoints and
//! sector-rotation backtests for multivariate asset-price panels.
//!
//! The crate is organised as a pipeline of small stages:
//!
//! * [`ingest`] loads price snapshots and sector maps into aligned log-return panels.
//! * [`rollcorr`] computes rolling-window correlation matrices.
//! * [`rmt`] extracts eigenspectra and compares them with the Marchenko-Pastur law.
//! * [`sectors`] tracks per-sector explanatory variance and clusters sectors.
//! * [`changepoint`] runs a reversible-jump sampler over piecewise-stationary spectra.
//! * [`spectra`] turns sampler output into time-varying log-power surfaces.
//! * [`mjw`] measures distances between sets of changepoint distributions.
//! * [`portfolio`] simulates the security-selection and sector-allocation strategies.

pub mod changepoint;
pub mod error;
pub mod ingest;
pub mod mjw;
pub mod portfolio;
pub mod rmt;
pub mod rollcorr;
pub mod sectors;
pub mod spectra;

pub use error::{Error, Result};
