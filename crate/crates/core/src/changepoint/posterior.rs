use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::moves::SegmentModel;
use super::sampler::Chain;
use crate::error::{Error, Result};

/// Modal segment count and, for each of its changepoints, the empirical
/// distribution of its location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangepointPosterior {
    pub map_m: usize,
    /// Share of samples at each segment count.
    pub m_probabilities: BTreeMap<usize, f64>,
    pub distributions: Vec<BTreeMap<usize, f64>>,
}

impl ChangepointPosterior {
    /// Most probable location of each changepoint, smallest index on ties.
    pub fn modal_locations(&self) -> Vec<usize> {
        self.distributions
            .iter()
            .map(|d| {
                d.iter()
                    .fold(None::<(usize, f64)>, |best, (&t, &p)| match best {
                        Some((_, bp)) if bp >= p => best,
                        _ => Some((t, p)),
                    })
                    .map(|(t, _)| t)
                    .expect("non-empty distribution")
            })
            .collect()
    }
}

/// Selects the modal `m` (smallest on ties) and histograms its changepoints.
pub fn extract_posterior(samples: &[SegmentModel]) -> Result<ChangepointPosterior> {
    if samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(s.m()).or_default() += 1;
    }
    let total = samples.len() as f64;
    let map_m = counts
        .iter()
        .fold((0, 0), |best, (&m, &c)| if c > best.1 { (m, c) } else { best })
        .0;
    let selected: Vec<&SegmentModel> = samples.iter().filter(|s| s.m() == map_m).collect();
    let n_sel = selected.len() as f64;
    let mut distributions = vec![BTreeMap::new(); map_m - 1];
    for s in &selected {
        for (j, &xi) in s.changepoints().iter().enumerate() {
            *distributions[j].entry(xi).or_insert(0.0) += 1.0;
        }
    }
    for d in &mut distributions {
        d.values_mut().for_each(|v| *v /= n_sel);
    }
    Ok(ChangepointPosterior {
        map_m,
        m_probabilities: counts.into_iter().map(|(m, c)| (m, c as f64 / total)).collect(),
        distributions,
    })
}

/// A segment of the summary model: bounds and posterior-mean coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSegment {
    pub start: usize,
    pub end: usize,
    pub beta: Vec<f64>,
}

/// Segments bounded by the modal changepoint locations, each carrying the
/// mean `β` of that segment over samples with `m = map_m`.
pub fn map_segments(samples: &[SegmentModel], post: &ChangepointPosterior, len: usize) -> Result<Vec<MapSegment>> {
    let selected: Vec<&SegmentModel> = samples.iter().filter(|s| s.m() == post.map_m).collect();
    if selected.is_empty() {
        return Err(Error::EmptyChain);
    }
    if selected.iter().any(|s| s.xi.last() != Some(&len)) {
        return Err(Error::GridMismatch(format!(
            "samples do not describe a series of length {len}"
        )));
    }
    let mut bounds = vec![0];
    let mut modes = post.modal_locations();
    modes.sort_unstable();
    bounds.extend(modes);
    bounds.push(len);
    let dim = selected[0].beta[0].len();
    let n = selected.len() as f64;
    Ok((0..post.map_m)
        .map(|j| {
            let mut beta = vec![0.0; dim];
            for s in &selected {
                for (acc, v) in beta.iter_mut().zip(&s.beta[j]) {
                    *acc += v;
                }
            }
            beta.iter_mut().for_each(|v| *v /= n);
            MapSegment {
                start: bounds[j],
                end: bounds[j + 1],
                beta,
            }
        })
        .collect())
}

/// Serialisable summary of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub label: String,
    pub series_len: usize,
    pub n_basis: usize,
    pub map_m: usize,
    pub m_probabilities: BTreeMap<usize, f64>,
    pub distributions: Vec<BTreeMap<usize, f64>>,
    pub map_segments: Vec<MapSegment>,
}

impl PosteriorReport {
    pub fn from_chain(label: impl Into<String>, chain: &Chain) -> Result<Self> {
        let post = extract_posterior(&chain.samples)?;
        let map_segments = map_segments(&chain.samples, &post, chain.series_len)?;
        Ok(Self {
            label: label.into(),
            series_len: chain.series_len,
            n_basis: map_segments[0].beta.len() - 1,
            map_m: post.map_m,
            m_probabilities: post.m_probabilities,
            distributions: post.distributions,
            map_segments,
        })
    }

    pub fn posterior(&self) -> ChangepointPosterior {
        ChangepointPosterior {
            map_m: self.map_m,
            m_probabilities: self.m_probabilities.clone(),
            distributions: self.distributions.clone(),
        }
    }
}
