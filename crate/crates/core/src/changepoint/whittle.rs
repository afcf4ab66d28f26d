//! Whittle likelihood for one stationary segment.
//!
//! The log-spectrum of a segment is `g(ν) = β₀ + Σ_s β_s √2 cos(2πsν)` and the
//! Whittle log-likelihood over the Fourier frequencies `ν_k = k/n`,
//! `k = 1..⌊(n−1)/2⌋`, is `−Σ_k [g(ν_k) + I(ν_k)·e^{−g(ν_k)}]`.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-8;

/// Number of Fourier frequencies used for a segment of `n` points.
pub fn n_frequencies(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

/// `[1, √2 cos(2πν), …, √2 cos(2πJν)]`.
pub fn basis_row(nu: f64, n_basis: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n_basis + 1);
    row.push(1.0);
    row.extend((1..=n_basis).map(|s| SQRT_2 * (2.0 * PI * s as f64 * nu).cos()));
    row
}

/// Log power at frequency `nu` for coefficients `beta`.
pub fn log_spectrum(beta: &[f64], nu: f64) -> f64 {
    basis_row(nu, beta.len() - 1).iter().zip(beta).map(|(p, b)| p * b).sum()
}

/// Reusable FFT plans and basis tables keyed by segment length.
pub struct SpectralWorkspace {
    n_basis: usize,
    planner: FftPlanner<f64>,
    bases: HashMap<usize, Arc<Vec<f64>>>,
    buffer: Vec<Complex<f64>>,
}

impl SpectralWorkspace {
    pub fn new(n_basis: usize) -> Self {
        Self {
            n_basis,
            planner: FftPlanner::new(),
            bases: HashMap::new(),
            buffer: Vec::new(),
        }
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    /// Periodogram of the demeaned segment at `k = 1..⌊(n−1)/2⌋`.
    pub fn periodogram(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n < 4 {
            return Err(Error::ShortSegment {
                start: 0,
                end: n,
                message: "a periodogram needs at least 4 points".into(),
            });
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        self.buffer.clear();
        self.buffer.extend(x.iter().map(|v| Complex::new(v - mean, 0.0)));
        self.planner.plan_fft_forward(n).process(&mut self.buffer);
        Ok(self.buffer[1..=n_frequencies(n)]
            .iter()
            .map(|c| c.norm_sqr() / n as f64)
            .collect())
    }

    fn basis(&mut self, n: usize) -> Arc<Vec<f64>> {
        let n_basis = self.n_basis;
        self.bases
            .entry(n)
            .or_insert_with(|| {
                let k_max = n_frequencies(n);
                let mut table = Vec::with_capacity(k_max * (n_basis + 1));
                for k in 1..=k_max {
                    table.extend(basis_row(k as f64 / n as f64, n_basis));
                }
                Arc::new(table)
            })
            .clone()
    }

    /// Prepares `x[start..end]` of `series` for likelihood evaluation.
    pub fn segment(&mut self, series: &[f64], start: usize, end: usize) -> Result<WhittleSegment> {
        let pgram = self.periodogram(&series[start..end]).map_err(|_| Error::ShortSegment {
            start,
            end,
            message: "a periodogram needs at least 4 points".into(),
        })?;
        Ok(WhittleSegment {
            start,
            end,
            dim: self.n_basis + 1,
            basis: self.basis(end - start),
            pgram,
        })
    }
}

/// Periodogram of a segment, demeaned first.
pub fn periodogram(x: &[f64]) -> Result<Vec<f64>> {
    SpectralWorkspace::new(0).periodogram(x)
}

/// Periodogram and basis table for one segment.
#[derive(Debug, Clone)]
pub struct WhittleSegment {
    pub start: usize,
    pub end: usize,
    dim: usize,
    basis: Arc<Vec<f64>>,
    pgram: Vec<f64>,
}

impl WhittleSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn periodogram(&self) -> &[f64] {
        &self.pgram
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.basis[k * self.dim..(k + 1) * self.dim]
    }

    fn g(&self, k: usize, beta: &[f64]) -> f64 {
        self.row(k).iter().zip(beta).map(|(p, b)| p * b).sum()
    }

    pub fn loglik(&self, beta: &[f64]) -> f64 {
        debug_assert_eq!(beta.len(), self.dim);
        self.pgram
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let g = self.g(k, beta);
                -(g + i * (-g).exp())
            })
            .sum()
    }

    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        for (k, &i) in self.pgram.iter().enumerate() {
            let c = i * (-self.g(k, beta)).exp() - 1.0;
            for (gr, p) in grad.iter_mut().zip(self.row(k)) {
                *gr += c * p;
            }
        }
        grad
    }

    /// Hessian of [`loglik`](Self::loglik); negative semi-definite.
    pub fn hessian(&self, beta: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for (k, &i) in self.pgram.iter().enumerate() {
            let w = i * (-self.g(k, beta)).exp();
            let row = self.row(k);
            for r in 0..d {
                let wr = w * row[r];
                for s in r..d {
                    h[(r, s)] -= wr * row[s];
                }
            }
        }
        for r in 0..d {
            for s in 0..r {
                h[(r, s)] = h[(s, r)];
            }
        }
        h
    }

    fn grad_hess(&self, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut grad = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        for (k, &i) in self.pgram.iter().enumerate() {
            let row = self.row(k);
            let w = i * (-self.g(k, beta)).exp();
            for r in 0..d {
                grad[r] += (w - 1.0) * row[r];
                let wr = w * row[r];
                for s in r..d {
                    h[(r, s)] -= wr * row[s];
                }
            }
        }
        for r in 0..d {
            for s in 0..r {
                h[(r, s)] = h[(s, r)];
            }
        }
        (grad, h)
    }

    fn initial_beta(&self) -> Vec<f64> {
        let mean = self.pgram.iter().sum::<f64>() / self.pgram.len().max(1) as f64;
        let mut beta = vec![0.0; self.dim];
        beta[0] = if mean > 0.0 { mean.ln() } else { 0.0 };
        beta
    }
}

/// Gaussian prior on `β`: `β₀ ~ N(0, σ₀²)`, `β_s ~ N(0, τ²)`.
pub fn log_prior_beta(beta: &[f64], tau2: f64, sigma0_sq: f64) -> f64 {
    let ln2pi = (2.0 * PI).ln();
    let j = (beta.len() - 1) as f64;
    let ss: f64 = beta[1..].iter().map(|b| b * b).sum();
    -0.5 * (beta[0] * beta[0] / sigma0_sq + sigma0_sq.ln() + ln2pi) - 0.5 * (ss / tau2 + j * (tau2.ln() + ln2pi))
}

/// Gaussian approximation `N(mode, (−H)⁻¹)` to the conditional posterior of `β`.
#[derive(Debug, Clone)]
pub struct GaussianApprox {
    pub mode: Vec<f64>,
    /// Negative Hessian of the log posterior at the mode.
    pub precision: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl GaussianApprox {
    fn new(mode: Vec<f64>, precision: DMatrix<f64>, start: usize, end: usize) -> Result<Self> {
        let chol = Cholesky::new(precision.clone()).ok_or(Error::NotPositiveDefinite { start, end })?;
        let d = mode.len() as f64;
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        Ok(Self {
            mode,
            precision,
            chol,
            log_norm: log_det_half - 0.5 * d * (2.0 * PI).ln(),
        })
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn log_density(&self, beta: &[f64]) -> f64 {
        let l = self.chol.l_dirty();
        let d = self.mode.len();
        // ‖Lᵀ(β − μ)‖²
        let mut q = 0.0;
        for i in 0..d {
            let mut acc = 0.0;
            for k in i..d {
                acc += l[(k, i)] * (beta[k] - self.mode[k]);
            }
            q += acc * acc;
        }
        self.log_norm - 0.5 * q
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mode.len();
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let v = self
            .chol
            .l_dirty()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        self.mode.iter().zip(v.iter()).map(|(m, x)| m + x).collect()
    }
}

/// Newton search for the posterior mode of `β` given `τ²`, with the
/// Gaussian approximation built from the Hessian there.
pub fn fit_segment(
    seg: &WhittleSegment,
    tau2: f64,
    sigma0_sq: f64,
    warm_start: Option<&[f64]>,
) -> Result<GaussianApprox> {
    let d = seg.dim;
    let prior_prec = |r: usize| if r == 0 { 1.0 / sigma0_sq } else { 1.0 / tau2 };
    let log_post = |b: &[f64]| {
        let ss: f64 = b[1..].iter().map(|x| x * x).sum();
        seg.loglik(b) - 0.5 * b[0] * b[0] / sigma0_sq - 0.5 * ss / tau2
    };
    let mut beta = match warm_start {
        Some(b) if b.len() == d && b.iter().all(|v| v.is_finite()) => b.to_vec(),
        _ => seg.initial_beta(),
    };
    let posterior_grad_hess = |b: &[f64]| {
        let (mut grad, mut h) = seg.grad_hess(b);
        for r in 0..d {
            grad[r] -= prior_prec(r) * b[r];
            h[(r, r)] -= prior_prec(r);
        }
        (grad, -h)
    };
    let mut current = log_post(&beta);
    for _ in 0..NEWTON_MAX_ITER {
        let (grad, neg_h) = posterior_grad_hess(&beta);
        let chol = Cholesky::new(neg_h.clone()).ok_or(Error::NotPositiveDefinite {
            start: seg.start,
            end: seg.end,
        })?;
        let step = chol.solve(&grad);
        if grad.norm() < NEWTON_TOL {
            // One undamped step past the tolerance brings the mode to round-off.
            let polished: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + s).collect();
            let (g2, h2) = posterior_grad_hess(&polished);
            if g2.norm() <= grad.norm() {
                return GaussianApprox::new(polished, h2, seg.start, seg.end);
            }
            return GaussianApprox::new(beta, neg_h, seg.start, seg.end);
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            let value = log_post(&trial);
            if value.is_finite() && value >= current - 1e-12 * current.abs().max(1.0) {
                beta = trial;
                current = value;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NewtonNonConvergence {
                    start: seg.start,
                    end: seg.end,
                    iterations: NEWTON_MAX_ITER,
                });
            }
        }
    }
    Err(Error::NewtonNonConvergence {
        start: seg.start,
        end: seg.end,
        iterations: NEWTON_MAX_ITER,
    })
}

/// Whittle log-likelihood of a whole segment under coefficients `beta`.
pub fn segment_loglik(x: &[f64], beta: &[f64]) -> Result<f64> {
    if beta.is_empty() {
        return Err(Error::InvalidParameter("beta must hold at least the intercept".into()));
    }
    let mut ws = SpectralWorkspace::new(beta.len() - 1);
    Ok(ws.segment(x, 0, x.len())?.loglik(beta))
}

/// Posterior mode of `β` for a segment and the Gaussian approximation around it.
pub fn beta_mode_and_hessian(x: &[f64], tau2: f64, sigma0_sq: f64, n_basis: usize) -> Result<GaussianApprox> {
    if !(tau2 > 0.0) {
        return Err(Error::InvalidParameter(format!("tau2 = {tau2} must be positive")));
    }
    let mut ws = SpectralWorkspace::new(n_basis);
    let seg = ws.segment(x, 0, x.len())?;
    fit_segment(&seg, tau2, sigma0_sq, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_line() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 0.25 * t as f64).cos()).collect();
        let p = periodogram(&x).unwrap();
        let (k_max, _) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(k_max + 1, 16);
        let rest: f64 = p.iter().enumerate().filter(|(k, _)| *k != 15).map(|(_, v)| v).sum();
        assert!(rest < 1e-20);
    }

    #[test]
    fn short_segment_rejected() {
        assert!(periodogram(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn intercept_shift_identity() {
        let x: Vec<f64> = (0..50).map(|t| ((t * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let beta = vec![0.2, -0.1, 0.05];
        let c = 0.7;
        let mut shifted = beta.clone();
        shifted[0] += c;
        let mut ws = SpectralWorkspace::new(2);
        let seg = ws.segment(&x, 0, x.len()).unwrap();
        let expected: f64 = seg
            .periodogram()
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let g = log_spectrum(&beta, (k + 1) as f64 / x.len() as f64);
                -(c + i * (-g).exp() * ((-c).exp() - 1.0))
            })
            .sum();
        let diff = seg.loglik(&shifted) - seg.loglik(&beta);
        assert!((diff - expected).abs() < 1e-10 * expected.abs().max(1.0));
    }

    #[test]
    fn mode_is_stationary_and_hessian_symmetric() {
        let x: Vec<f64> = (0..200).map(|t| ((t * 7919 % 101) as f64 - 50.0) / 29.0).collect();
        let approx = beta_mode_and_hessian(&x, 1.0, 100.0, 6).unwrap();
        let p = &approx.precision;
        assert!((p - p.transpose()).norm() < 1e-10);
        let mut ws = SpectralWorkspace::new(6);
        let seg = ws.segment(&x, 0, x.len()).unwrap();
        let mut g = seg.gradient(&approx.mode);
        g[0] -= approx.mode[0] / 100.0;
        for s in 1..g.len() {
            g[s] -= approx.mode[s];
        }
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn gaussian_density_normalised_in_one_dimension() {
        let x: Vec<f64> = (0..80).map(|t| ((t * 13 % 17) as f64 - 8.0) / 5.0).collect();
        let approx = beta_mode_and_hessian(&x, 1.0, 100.0, 0).unwrap();
        let sd = approx.covariance()[(0, 0)].sqrt();
        let (lo, hi) = (approx.mode[0] - 10.0 * sd, approx.mode[0] + 10.0 * sd);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let area: f64 = (0..steps)
            .map(|i| approx.log_density(&[lo + (i as f64 + 0.5) * h]).exp() * h)
            .sum();
        assert!((area - 1.0).abs() < 1e-6);
    }
}
