#![allow(dead_code)]

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sectorscope::ingest::ReturnsPanel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_simple_fn((rows, cols), || 0.01 * normal(&mut r))
}

/// Columns share one common factor with pairwise correlation `rho`.
pub fn equicorrelated(rows: usize, cols: usize, rho: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let mut out = Array2::zeros((rows, cols));
    for i in 0..rows {
        let f = normal(&mut r);
        for j in 0..cols {
            out[[i, j]] = rho.sqrt() * f + (1.0 - rho).sqrt() * normal(&mut r);
        }
    }
    out
}

pub fn panel(returns: Array2<f64>, sectors: &[&str]) -> ReturnsPanel {
    ReturnsPanel::from_matrix(returns, sectors).unwrap()
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| normal(&mut r)).collect()
}

/// AR(1) with coefficient `phis[0]` before `switch` and `phis[1]` after.
pub fn ar_switch(n: usize, switch: usize, phis: (f64, f64), seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut prev = 0.0;
    (0..n)
        .map(|t| {
            let phi = if t < switch { phis.0 } else { phis.1 };
            prev = phi * prev + normal(&mut r);
            prev
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
