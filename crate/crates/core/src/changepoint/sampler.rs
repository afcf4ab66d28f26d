use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RjmcmcConfig;
use super::moves::{ChainState, MoveKind, SegmentModel};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub m: usize,
    pub log_posterior: f64,
}

/// Proposal and acceptance counts per move kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub birth: (usize, usize),
    pub death: (usize, usize),
    pub within: (usize, usize),
    pub refresh: (usize, usize),
    /// Sweeps where neither a birth nor a death was available.
    pub skipped_between: usize,
}

impl MoveStats {
    fn record(&mut self, kind: MoveKind, accepted: bool) {
        let slot = match kind {
            MoveKind::Birth => &mut self.birth,
            MoveKind::Death => &mut self.death,
            MoveKind::Within => &mut self.within,
            MoveKind::Refresh => &mut self.refresh,
        };
        slot.0 += 1;
        slot.1 += accepted as usize;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub series_len: usize,
    /// Post burn-in states, one per sweep.
    pub samples: Vec<SegmentModel>,
    /// Every sweep, burn-in included.
    pub trace: Vec<TraceRow>,
    pub stats: MoveStats,
}

/// One sweep: a birth or death, a relocation (or a coefficient refresh when
/// `m = 1`), then the Gibbs update of every `τ²`. Returns whether the birth
/// or death was accepted.
pub fn sweep(state: &mut ChainState, stats: &mut MoveStats) -> Result<bool> {
    let jumped = between(state, stats)?;
    let attempts = state.config().relocations;
    within(state, stats, attempts)?;
    state.gibbs_tau2();
    Ok(jumped)
}

fn between(state: &mut ChainState, stats: &mut MoveStats) -> Result<bool> {
    let model = state.model().clone();
    let birth = state.birth_probability(&model);
    let death = state.death_probability(&model);
    if birth + death > 0.0 {
        let draw: f64 = state.rng().random();
        let proposal = if draw < birth {
            state.propose_birth()?
        } else {
            state.propose_death()?
        };
        if let Some(p) = proposal {
            let kind = p.kind;
            let accepted = state.accept_or_reject(p);
            stats.record(kind, accepted);
            return Ok(accepted);
        }
    } else {
        stats.skipped_between += 1;
    }
    Ok(false)
}

fn within(state: &mut ChainState, stats: &mut MoveStats, attempts: usize) -> Result<()> {
    for _ in 0..attempts {
        let p = if state.model().m() > 1 {
            state.propose_within()?
        } else {
            Some(state.propose_refresh(0)?)
        };
        if let Some(p) = p {
            let kind = p.kind;
            let accepted = state.accept_or_reject(p);
            stats.record(kind, accepted);
        }
    }
    Ok(())
}

/// Runs the sampler on `x` and keeps every post burn-in state.
///
/// During burn-in every accepted birth or death is followed by
/// `burnin_settle` extra relocations, so a freshly placed changepoint can
/// reach its mode before the next one is born next to it.
pub fn run_rjmcmc(x: &[f64], cfg: &RjmcmcConfig) -> Result<Chain> {
    let mut state = ChainState::new(x.to_vec(), cfg)?;
    let mut stats = MoveStats::default();
    let mut samples = Vec::with_capacity(cfg.iterations - cfg.burnin);
    let mut trace = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let jumped = sweep(&mut state, &mut stats)?;
        if jumped && i < cfg.burnin {
            within(&mut state, &mut stats, cfg.burnin_settle)?;
        }
        state.model().validate(x.len(), cfg)?;
        trace.push(TraceRow {
            sweep: i,
            m: state.model().m(),
            log_posterior: state.log_target(),
        });
        if i >= cfg.burnin {
            samples.push(state.model().clone());
        }
    }
    Ok(Chain {
        series_len: x.len(),
        samples,
        trace,
        stats,
    })
}

/// Independent seed for the `index`-th series under a master seed (SplitMix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one chain per series in parallel, seeding each from `cfg.seed` and its index.
pub fn run_many(series: &[Vec<f64>], cfg: &RjmcmcConfig) -> Result<Vec<Chain>> {
    series
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let cfg = RjmcmcConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            run_rjmcmc(x, &cfg)
        })
        .collect()
}
