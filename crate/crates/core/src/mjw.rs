//! Distances between sets of changepoint-location distributions.
//!
//! Each member of a set is a discrete distribution over time indices. The
//! distance between two sets matches every member to its nearest member in
//! the other set under the 1-D Wasserstein metric, averages the matched
//! distances raised to the power `o` over both directions, and takes the
//! `o`-th root. It is symmetric and vanishes on equal sets but need not
//! satisfy the triangle inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::changepoint::PosteriorReport;
use crate::error::{Error, Result};
use crate::sectors::DistanceMatrix;

/// Probability mass per time index.
pub type Distribution = BTreeMap<usize, f64>;

const NORMALISATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSet {
    pub label: String,
    pub series_len: usize,
    /// Empty when the series has no changepoint.
    pub members: Vec<Distribution>,
}

impl DistributionSet {
    pub fn from_report(report: &PosteriorReport) -> Self {
        Self {
            label: report.label.clone(),
            series_len: report.series_len,
            members: report.distributions.clone(),
        }
    }
}

fn check(d: &Distribution) -> Result<()> {
    if d.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidParameter("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = d.values().sum();
    if (total - 1.0).abs() > NORMALISATION_TOL {
        return Err(Error::Unnormalized(total));
    }
    Ok(())
}

/// First Wasserstein distance on the integer line, `Σ_t |F(t) − G(t)|`.
pub fn wasserstein_1d(f: &Distribution, g: &Distribution) -> Result<f64> {
    check(f)?;
    check(g)?;
    let mut support: Vec<usize> = f.keys().chain(g.keys()).copied().collect();
    support.sort_unstable();
    support.dedup();
    let (mut cf, mut cg, mut total) = (0.0, 0.0, 0.0);
    for w in support.windows(2) {
        cf += f.get(&w[0]).copied().unwrap_or(0.0);
        cg += g.get(&w[0]).copied().unwrap_or(0.0);
        total += (cf - cg).abs() * (w[1] - w[0]) as f64;
    }
    Ok(total)
}

fn nearest(d: &Distribution, set: &[Distribution]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for other in set {
        best = best.min(wasserstein_1d(d, other)?);
    }
    Ok(best)
}

/// Set distance of order `o ≥ 1` between two non-empty sets.
pub fn mjw_distance(s: &[Distribution], t: &[Distribution], order: f64) -> Result<f64> {
    if !(order >= 1.0 && order.is_finite()) {
        return Err(Error::InvalidParameter(format!("order {order} must be at least 1")));
    }
    if s.is_empty() {
        return Err(Error::EmptySet("S".into()));
    }
    if t.is_empty() {
        return Err(Error::EmptySet("T".into()));
    }
    let mut from_t = 0.0;
    for g in t {
        from_t += nearest(g, s)?.powf(order);
    }
    let mut from_s = 0.0;
    for f in s {
        from_s += nearest(f, t)?.powf(order);
    }
    let inner = from_t / (2.0 * t.len() as f64) + from_s / (2.0 * s.len() as f64);
    Ok(inner.powf(1.0 / order))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MjwOptions {
    pub order: f64,
    /// Distance between an empty and a non-empty set; defaults to the series length.
    pub empty_penalty: Option<f64>,
    /// Divide ground distances (and the default penalty) by the series length.
    pub normalize: bool,
}

impl Default for MjwOptions {
    fn default() -> Self {
        Self {
            order: 1.0,
            empty_penalty: None,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MjwMatrix {
    pub matrix: DistanceMatrix,
    /// Labels whose sets were empty and therefore scored with the penalty.
    pub empty_labels: Vec<String>,
    pub penalty: f64,
}

/// Pairwise set distances. Two empty sets are at distance zero; an empty
/// and a non-empty set are at the configured penalty.
pub fn mjw_matrix(sets: &[DistributionSet], opts: &MjwOptions) -> Result<MjwMatrix> {
    let len = sets.iter().map(|s| s.series_len).max().unwrap_or(0);
    if opts.normalize && sets.iter().any(|s| s.series_len != len) {
        return Err(Error::GridMismatch("normalised distances need equal series lengths".into()));
    }
    let scale = if opts.normalize && len > 0 { 1.0 / len as f64 } else { 1.0 };
    let penalty = opts.empty_penalty.unwrap_or(len as f64 * scale);
    for s in sets {
        s.members.iter().try_for_each(check)?;
    }
    let labels = sets.iter().map(|s| s.label.clone()).collect();
    let matrix = DistanceMatrix::from_pairs(labels, |i, j| {
        let (a, b) = (&sets[i].members, &sets[j].members);
        match (a.is_empty(), b.is_empty()) {
            (true, true) => Ok(0.0),
            (true, false) | (false, true) => Ok(penalty),
            (false, false) => Ok(mjw_distance(a, b, opts.order)? * scale),
        }
    })?;
    Ok(MjwMatrix {
        matrix,
        empty_labels: sets
            .iter()
            .filter(|s| s.members.is_empty())
            .map(|s| s.label.clone())
            .collect(),
        penalty,
    })
}
