//! Per-sector explanatory-variance paths and distances between them.

mod cluster;

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

pub use cluster::{agglomerative_cluster, Dendrogram, Linkage, Merge};

use crate::error::{Error, Result};
use crate::ingest::ReturnsPanel;
use crate::rmt::eigen_spectrum;
use crate::rollcorr::rolling_correlation_series;

/// `λ̃₁` of one sector's rolling correlation matrix, one value per window end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariancePath {
    pub sector: String,
    pub times: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn variance_path(sector: &str, panel: &ReturnsPanel, window: usize) -> Result<VariancePath> {
    if panel.n_assets() < 2 {
        return Err(Error::DegenerateSector(sector.to_string()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for m in rolling_correlation_series(panel, window)? {
        let m = m?;
        times.push(m.t);
        values.push(eigen_spectrum(&m)?.explained());
    }
    Ok(VariancePath {
        sector: sector.to_string(),
        times,
        values,
    })
}

/// One path per sector, in sector-name order.
pub fn variance_paths(sector_panels: &BTreeMap<String, ReturnsPanel>, window: usize) -> Result<Vec<VariancePath>> {
    let items: Vec<(&String, &ReturnsPanel)> = sector_panels.iter().collect();
    items
        .into_par_iter()
        .map(|(name, panel)| variance_path(name, panel, window))
        .collect()
}

/// Mean absolute difference between two aligned paths.
pub fn l1_path_distance(a: &VariancePath, b: &VariancePath) -> Result<f64> {
    if a.times != b.times || a.values.len() != b.values.len() {
        return Err(Error::GridMismatch(format!(
            "paths {} and {} are not aligned",
            a.sector, b.sector
        )));
    }
    if a.values.is_empty() {
        return Err(Error::GridMismatch("empty paths".into()));
    }
    let total: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.values.len() as f64)
}

/// Labelled symmetric matrix of nonnegative distances with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = labels.len();
        if values.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: values.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFiniteDistance(i, j));
                }
                if v < 0.0 {
                    return Err(Error::InvalidParameter(format!("negative distance at ({i}, {j})")));
                }
            }
            if values[[i, i]] != 0.0 {
                return Err(Error::InvalidParameter(format!("non-zero diagonal at {i}")));
            }
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (values[[i, j]], values[[j, i]]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidParameter(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { labels, values })
    }

    /// Fills a matrix from a symmetric pairwise function evaluated on `i < j`.
    pub fn from_pairs<F>(labels: Vec<String>, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let n = labels.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let vals: Vec<f64> = pairs.par_iter().map(|&(i, j)| f(i, j)).collect::<Result<_>>()?;
        let mut values = Array2::zeros((n, n));
        for (&(i, j), v) in pairs.iter().zip(vals) {
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
        Self::new(labels, values)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }
}

pub fn l1_distance_matrix(paths: &[VariancePath]) -> Result<DistanceMatrix> {
    let labels = paths.iter().map(|p| p.sector.clone()).collect();
    DistanceMatrix::from_pairs(labels, |i, j| l1_path_distance(&paths[i], &paths[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(name: &str, values: Vec<f64>) -> VariancePath {
        VariancePath {
            sector: name.into(),
            times: (0..values.len()).collect(),
            values,
        }
    }

    #[test]
    fn identical_paths_zero() {
        let a = path("a", vec![0.3, 0.4, 0.5]);
        assert_eq!(l1_path_distance(&a, &a.clone()).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let a = path("a", vec![0.3, 0.4, 0.5]);
        let b = path("b", vec![0.4, 0.5, 0.6]);
        assert!((l1_path_distance(&a, &b).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn misaligned_rejected() {
        let a = path("a", vec![0.3, 0.4, 0.5]);
        let b = path("b", vec![0.4, 0.5]);
        assert!(l1_path_distance(&a, &b).is_err());
    }

    #[test]
    fn nan_rejected() {
        let mut v = Array2::zeros((2, 2));
        v[[0, 1]] = f64::NAN;
        v[[1, 0]] = f64::NAN;
        assert!(matches!(
            DistanceMatrix::new(vec!["a".into(), "b".into()], v),
            Err(Error::NonFiniteDistance(0, 1))
        ));
    }

    #[test]
    fn single_asset_sector_rejected() {
        let p = ReturnsPanel::from_matrix(Array2::zeros((10, 1)), &["S"]).unwrap();
        assert!(matches!(variance_path("S", &p, 5), Err(Error::DegenerateSector(_))));
    }
}
