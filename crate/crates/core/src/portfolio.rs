//! Security-selection and sector-allocation backtests.
//!
//! Both strategies rank candidates each day by a risk-adjusted return: the
//! trailing sum of `S + 1` daily log returns divided by their variance over
//! the same window. The in-sample variant scores day `t` with the very
//! window it ranked on; the out-of-sample variant ranks on the window ending
//! at `t` and realises the next day's return.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::ReturnsPanel;

/// Sector name to column indices of its members.
pub type SectorMembers = BTreeMap<String, Vec<usize>>;

/// Members of every sector, columns in panel order.
pub fn sector_members(returns: &ReturnsPanel) -> SectorMembers {
    let mut out = SectorMembers::new();
    for (j, a) in returns.assets().iter().enumerate() {
        for s in &a.sectors {
            out.entry(s.clone()).or_default().push(j);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub window: usize,
    pub best: usize,
    pub out_of_sample: bool,
}

impl SimConfig {
    pub fn new(window: usize, best: usize) -> Self {
        Self {
            window,
            best,
            out_of_sample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Return-row index of each evaluated day.
    pub times: Vec<usize>,
    pub per_t: Vec<f64>,
    pub total: f64,
    /// Chosen tickers (strategy 1) or sectors (strategy 2) per day.
    pub selections: Vec<Vec<String>>,
    /// Candidates skipped for having no variance in their window.
    pub excluded: usize,
}

struct WindowStats {
    sum: f64,
    var: f64,
}

impl WindowStats {
    fn rankable(&self, mean_sq: f64) -> bool {
        self.var > f64::EPSILON * mean_sq && self.var > 0.0
    }
}

fn window_stats(values: impl Iterator<Item = f64> + Clone) -> (WindowStats, f64) {
    let n = values.clone().count() as f64;
    let sum: f64 = values.clone().sum();
    let mean = sum / n;
    let var = values.clone().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mean_sq = values.map(|v| v * v).sum::<f64>() / n;
    (WindowStats { sum, var }, mean_sq)
}

fn check(returns: &ReturnsPanel, sectors: &SectorMembers, cfg: &SimConfig) -> Result<std::ops::RangeInclusive<usize>> {
    if cfg.window < 2 {
        return Err(Error::InvalidParameter(format!("window {} must be at least 2", cfg.window)));
    }
    if cfg.best == 0 {
        return Err(Error::InvalidParameter("best must be at least 1".into()));
    }
    if sectors.is_empty() {
        return Err(Error::InvalidParameter("no sectors".into()));
    }
    for (name, cols) in sectors {
        if cols.is_empty() {
            return Err(Error::DegenerateSector(name.clone()));
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= returns.n_assets()) {
            return Err(Error::DimensionMismatch {
                expected: returns.n_assets(),
                actual: c,
            });
        }
    }
    let n = returns.len();
    let last = if cfg.out_of_sample { n.checked_sub(2) } else { n.checked_sub(1) };
    match last {
        Some(last) if last >= cfg.window => Ok(cfg.window..=last),
        _ => Err(Error::InvalidParameter(format!(
            "window {} leaves no evaluation days in {n} returns",
            cfg.window
        ))),
    }
}

/// Top-`best` candidates by descending score, ties by ascending name.
fn top<'a>(mut scored: Vec<(f64, &'a str, usize)>, best: usize) -> Vec<(f64, &'a str, usize)> {
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.truncate(best);
    scored
}

/// Picks the best securities in every sector and averages their trailing returns.
pub fn algo1_security_selection(returns: &ReturnsPanel, sectors: &SectorMembers, cfg: &SimConfig) -> Result<SimResult> {
    let days = check(returns, sectors, cfg)?;
    let r = returns.returns();
    let tickers: Vec<&str> = returns.assets().iter().map(|a| a.ticker.as_str()).collect();
    let mut out = SimResult {
        times: Vec::new(),
        per_t: Vec::new(),
        total: 0.0,
        selections: Vec::new(),
        excluded: 0,
    };
    for t in days {
        let mut sector_returns = Vec::with_capacity(sectors.len());
        let mut chosen = Vec::new();
        for (name, cols) in sectors {
            let mut scored = Vec::new();
            let mut sums = BTreeMap::new();
            for &c in cols {
                let (st, mean_sq) = window_stats((t - cfg.window..=t).map(|d| r[[d, c]]));
                sums.insert(c, st.sum);
                if st.rankable(mean_sq) {
                    scored.push((st.sum / st.var, tickers[c], c));
                } else {
                    warn!("{} has no variance in the window ending at {t}; not ranked", tickers[c]);
                    out.excluded += 1;
                }
            }
            let picked: Vec<usize> = if scored.is_empty() {
                warn!("sector {name} has no rankable security at {t}; using ticker order");
                let mut fallback: Vec<usize> = cols.clone();
                fallback.sort_by_key(|&c| tickers[c]);
                fallback.truncate(cfg.best);
                fallback
            } else {
                top(scored, cfg.best).into_iter().map(|(_, _, c)| c).collect()
            };
            let realised: f64 = if cfg.out_of_sample {
                picked.iter().map(|&c| r[[t + 1, c]]).sum::<f64>()
            } else {
                picked.iter().map(|c| sums[c]).sum::<f64>()
            };
            sector_returns.push(realised / picked.len() as f64);
            chosen.extend(picked.iter().map(|&c| tickers[c].to_string()));
        }
        let z = sector_returns.iter().sum::<f64>() / sector_returns.len() as f64;
        out.times.push(t);
        out.per_t.push(z);
        out.selections.push(chosen);
    }
    out.total = out.per_t.iter().sum();
    Ok(out)
}

/// Scores equally weighted sectors and averages the best ones.
pub fn algo2_sector_allocation(returns: &ReturnsPanel, sectors: &SectorMembers, cfg: &SimConfig) -> Result<SimResult> {
    let days = check(returns, sectors, cfg)?;
    let r = returns.returns();
    let mut out = SimResult {
        times: Vec::new(),
        per_t: Vec::new(),
        total: 0.0,
        selections: Vec::new(),
        excluded: 0,
    };
    for t in days {
        let mut scored = Vec::new();
        let mut sums = BTreeMap::new();
        for (idx, (name, cols)) in sectors.iter().enumerate() {
            let w = 1.0 / cols.len() as f64;
            // wᵀΣw is the variance of the weighted daily sector return.
            let (st, mean_sq) = window_stats((t - cfg.window..=t).map(|d| cols.iter().map(|&c| w * r[[d, c]]).sum::<f64>()));
            sums.insert(idx, st.sum);
            if st.rankable(mean_sq) {
                scored.push((st.sum / st.var, name.as_str(), idx));
            } else {
                warn!("sector {name} has no variance in the window ending at {t}; not ranked");
                out.excluded += 1;
            }
        }
        let picked: Vec<usize> = if scored.is_empty() {
            warn!("no rankable sector at {t}; using name order");
            (0..sectors.len().min(cfg.best)).collect()
        } else {
            top(scored, cfg.best).into_iter().map(|(_, _, i)| i).collect()
        };
        let names: Vec<&String> = sectors.keys().collect();
        let cols: Vec<&Vec<usize>> = sectors.values().collect();
        let z = picked
            .iter()
            .map(|&i| {
                if cfg.out_of_sample {
                    cols[i].iter().map(|&c| r[[t + 1, c]]).sum::<f64>() / cols[i].len() as f64
                } else {
                    sums[&i]
                }
            })
            .sum::<f64>()
            / picked.len() as f64;
        out.times.push(t);
        out.per_t.push(z);
        out.selections.push(picked.iter().map(|&i| names[i].clone()).collect());
    }
    out.total = out.per_t.iter().sum();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub window: usize,
    pub best: usize,
    pub algo1_total: f64,
    pub algo2_total: f64,
}

/// Both strategies over the grid, rows ordered by window then best.
pub fn sweep(
    returns: &ReturnsPanel,
    sectors: &SectorMembers,
    windows: &[usize],
    bests: &[usize],
    out_of_sample: bool,
) -> Result<Vec<SweepRow>> {
    let mut ws = windows.to_vec();
    ws.sort_unstable();
    ws.dedup();
    let mut bs = bests.to_vec();
    bs.sort_unstable();
    bs.dedup();
    let cells: Vec<(usize, usize)> = ws.iter().flat_map(|&s| bs.iter().map(move |&b| (s, b))).collect();
    cells
        .par_iter()
        .map(|&(window, best)| {
            let cfg = SimConfig {
                window,
                best,
                out_of_sample,
            };
            Ok(SweepRow {
                window,
                best,
                algo1_total: algo1_security_selection(returns, sectors, &cfg)?.total,
                algo2_total: algo2_sector_allocation(returns, sectors, &cfg)?.total,
            })
        })
        .collect()
}
