//! Spectral changepoint detection by reversible-jump MCMC.
//!
//! A series is modelled as `m` stationary segments, each with a log-spectrum
//! expanded in a cosine basis and scored by the Whittle likelihood. The
//! sampler moves between partitions through birth, death and relocation
//! proposals whose coefficients come from Gaussian approximations to the
//! segment posteriors, and refreshes the amplitude parameters by Gibbs
//! sampling.

mod config;
mod moves;
mod posterior;
mod sampler;
pub mod whittle;

pub use config::RjmcmcConfig;
pub use moves::{log_target, relocation_probability, ChainState, MoveKind, Proposal, SegmentModel};
pub use posterior::{extract_posterior, map_segments, ChangepointPosterior, MapSegment, PosteriorReport};
pub use sampler::{derive_seed, run_many, run_rjmcmc, sweep, Chain, MoveStats, TraceRow};
pub use whittle::{beta_mode_and_hessian, periodogram, segment_loglik, GaussianApprox};
