//! Chain state and the birth, death, within-model and Gibbs updates.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::config::RjmcmcConfig;
use super::whittle::{fit_segment, log_prior_beta, GaussianApprox, SpectralWorkspace, WhittleSegment};
use crate::error::{Error, Result};

const U_CLAMP: f64 = 1e-12;

/// A partition into `m` segments with per-segment coefficients and amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentModel {
    /// `0 = ξ₀ < ξ₁ < … < ξ_m = T`; segment `j` covers `ξ_j..ξ_{j+1}`.
    pub xi: Vec<usize>,
    pub beta: Vec<Vec<f64>>,
    pub tau2: Vec<f64>,
}

impl SegmentModel {
    pub fn m(&self) -> usize {
        self.xi.len() - 1
    }

    /// Interior changepoints `ξ₁..ξ_{m−1}`.
    pub fn changepoints(&self) -> &[usize] {
        &self.xi[1..self.xi.len() - 1]
    }

    pub fn segment_len(&self, j: usize) -> usize {
        self.xi[j + 1] - self.xi[j]
    }

    /// Checks the hard constraints for a series of length `len`.
    pub fn validate(&self, len: usize, cfg: &RjmcmcConfig) -> Result<()> {
        let m = self.m();
        if m == 0 || m > cfg.max_segments {
            return Err(Error::InvalidParameter(format!("segment count {m} outside [1, {}]", cfg.max_segments)));
        }
        if self.xi[0] != 0 || self.xi[m] != len {
            return Err(Error::InvalidParameter("partition must span the whole series".into()));
        }
        for j in 0..m {
            if self.xi[j + 1] < self.xi[j] + cfg.t_min {
                return Err(Error::ShortSegment {
                    start: self.xi[j],
                    end: self.xi[j + 1],
                    message: format!("shorter than t_min = {}", cfg.t_min),
                });
            }
        }
        if self.beta.len() != m || self.tau2.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.beta.len().min(self.tau2.len()),
            });
        }
        if let Some(b) = self.beta.iter().find(|b| b.len() != cfg.n_basis + 1) {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_basis + 1,
                actual: b.len(),
            });
        }
        if self.tau2.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("tau2 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Birth,
    Death,
    Within,
    Refresh,
}

/// A proposed model with its log acceptance ratio; adopt it with [`ChainState::accept`].
#[derive(Debug, Clone)]
pub struct Proposal {
    pub kind: MoveKind,
    pub model: SegmentModel,
    pub log_ratio: f64,
    segments: Vec<Arc<WhittleSegment>>,
    logliks: Vec<f64>,
}

impl Proposal {
    /// `min(1, e^{log_ratio})`.
    pub fn acceptance_probability(&self) -> f64 {
        if self.log_ratio >= 0.0 {
            1.0
        } else {
            self.log_ratio.exp()
        }
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn log_inv_gamma(x: f64, a: f64, b: f64) -> f64 {
    a * b.ln() - libm::lgamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Sampler state: the current model, cached segment likelihoods and the RNG.
pub struct ChainState {
    cfg: RjmcmcConfig,
    series: Arc<Vec<f64>>,
    model: SegmentModel,
    segments: Vec<Arc<WhittleSegment>>,
    logliks: Vec<f64>,
    ws: SpectralWorkspace,
    rng: ChaCha8Rng,
    /// Approximations keyed by segment bounds and `τ²` bits; cleared by the Gibbs step.
    approx_cache: HashMap<(usize, usize, u64), GaussianApprox>,
    /// Last mode found per segment, used to warm-start Newton.
    mode_cache: HashMap<(usize, usize), Vec<f64>>,
}

impl ChainState {
    /// Single-segment start with `τ² = 1` and `β` at its conditional mode.
    pub fn new(series: Vec<f64>, cfg: &RjmcmcConfig) -> Result<Self> {
        cfg.validate(series.len())?;
        let mut ws = SpectralWorkspace::new(cfg.n_basis);
        let seg = ws.segment(&series, 0, series.len())?;
        let approx = fit_segment(&seg, 1.0, cfg.sigma0_sq, None)?;
        let model = SegmentModel {
            xi: vec![0, series.len()],
            beta: vec![approx.mode],
            tau2: vec![1.0],
        };
        Self::assemble(Arc::new(series), cfg, model, ws, cfg.seed)
    }

    /// State at an arbitrary valid model, with its own RNG stream.
    pub fn from_model(series: Vec<f64>, cfg: &RjmcmcConfig, model: SegmentModel, seed: u64) -> Result<Self> {
        cfg.validate(series.len())?;
        let ws = SpectralWorkspace::new(cfg.n_basis);
        Self::assemble(Arc::new(series), cfg, model, ws, seed)
    }

    fn assemble(
        series: Arc<Vec<f64>>,
        cfg: &RjmcmcConfig,
        model: SegmentModel,
        mut ws: SpectralWorkspace,
        seed: u64,
    ) -> Result<Self> {
        model.validate(series.len(), cfg)?;
        let segments = (0..model.m())
            .map(|j| ws.segment(&series, model.xi[j], model.xi[j + 1]).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let logliks = segments.iter().zip(&model.beta).map(|(s, b)| s.loglik(b)).collect();
        Ok(Self {
            cfg: cfg.clone(),
            series,
            model,
            segments,
            logliks,
            ws,
            rng: ChaCha8Rng::seed_from_u64(seed),
            approx_cache: HashMap::new(),
            mode_cache: HashMap::new(),
        })
    }

    pub fn model(&self) -> &SegmentModel {
        &self.model
    }

    pub fn config(&self) -> &RjmcmcConfig {
        &self.cfg
    }

    pub fn series(&self) -> &[f64] {
        &self.series
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn cached_logliks(&self) -> &[f64] {
        &self.logliks
    }

    /// Largest gap between cached and freshly computed segment log-likelihoods.
    pub fn cache_error(&self) -> f64 {
        let mut ws = SpectralWorkspace::new(self.cfg.n_basis);
        (0..self.model.m())
            .map(|j| {
                let seg = ws
                    .segment(&self.series, self.model.xi[j], self.model.xi[j + 1])
                    .expect("valid segment");
                (seg.loglik(&self.model.beta[j]) - self.logliks[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sum of per-segment Whittle log-likelihoods.
    pub fn loglik(&self) -> f64 {
        self.logliks.iter().sum()
    }

    /// Log of likelihood times prior, up to a constant independent of the model.
    pub fn log_target(&self) -> f64 {
        log_target(&self.cfg, self.series.len(), &self.model, &self.logliks)
    }

    fn n_splittable(&self, model: &SegmentModel) -> usize {
        (0..model.m()).filter(|&j| model.segment_len(j) >= 2 * self.cfg.t_min).count()
    }

    /// Probability of proposing a birth from `model`.
    pub fn birth_probability(&self, model: &SegmentModel) -> f64 {
        let m = model.m();
        let m2 = self.n_splittable(model);
        if m2 == 0 || m >= self.cfg.max_segments {
            0.0
        } else if m == 1 {
            1.0
        } else {
            0.5
        }
    }

    /// Probability of proposing a death from `model`.
    pub fn death_probability(&self, model: &SegmentModel) -> f64 {
        if model.m() == 1 {
            0.0
        } else {
            1.0 - self.birth_probability(model)
        }
    }

    fn fit(&mut self, seg: &WhittleSegment, tau2: f64, warm: &[f64]) -> Result<GaussianApprox> {
        let key = (seg.start, seg.end, tau2.to_bits());
        if let Some(a) = self.approx_cache.get(&key) {
            return Ok(a.clone());
        }
        let start = self.mode_cache.get(&(seg.start, seg.end)).map(Vec::as_slice).unwrap_or(warm);
        let approx = fit_segment(seg, tau2, self.cfg.sigma0_sq, Some(start))?;
        if self.mode_cache.len() > 100_000 {
            self.mode_cache.clear();
        }
        self.mode_cache.insert((seg.start, seg.end), approx.mode.clone());
        self.approx_cache.insert(key, approx.clone());
        Ok(approx)
    }

    fn replace(
        &self,
        kind: MoveKind,
        first: usize,
        removed: usize,
        xi_inner: &[usize],
        beta: Vec<Vec<f64>>,
        tau2: Vec<f64>,
        segs: Vec<Arc<WhittleSegment>>,
    ) -> Proposal {
        let mut model = self.model.clone();
        model.xi.splice(first + 1..first + removed, xi_inner.iter().copied());
        let new_ll: Vec<f64> = segs.iter().zip(&beta).map(|(s, b)| s.loglik(b)).collect();
        model.beta.splice(first..first + removed, beta);
        model.tau2.splice(first..first + removed, tau2);
        let mut segments = self.segments.clone();
        segments.splice(first..first + removed, segs);
        let mut logliks = self.logliks.clone();
        logliks.splice(first..first + removed, new_ll);
        Proposal {
            kind,
            model,
            log_ratio: f64::NAN,
            segments,
            logliks,
        }
    }

    /// Log ratio of a birth from `small` to `big` that splits segment `k` at
    /// `big.xi[k+1]` with split variable `u`. The matching death uses its negation.
    #[allow(clippy::too_many_arguments)]
    fn birth_log_ratio(
        &self,
        small: (&SegmentModel, &[f64]),
        big: (&SegmentModel, &[f64]),
        k: usize,
        u: f64,
        merged_q: f64,
        split_q: f64,
    ) -> f64 {
        let len = self.series.len();
        let (sm, sl) = small;
        let (bm, bl) = big;
        let tau_old = sm.tau2[k];
        let n_k = sm.segment_len(k);
        let m2 = self.n_splittable(sm) as f64;
        let position = ((n_k - 2 * self.cfg.t_min + 1) as f64).ln();
        log_target(&self.cfg, len, bm, bl) - log_target(&self.cfg, len, sm, sl)
            + self.death_probability(bm).ln()
            - ((bm.m() - 1) as f64).ln()
            + merged_q
            - self.birth_probability(sm).ln()
            + m2.ln()
            + position
            - split_q
            + (2.0 * tau_old / (u * (1.0 - u))).ln()
    }

    /// Birth proposal with every random choice fixed. `betas` overrides the
    /// draws from the Gaussian approximations of the two new segments.
    pub fn propose_birth_at(
        &mut self,
        k: usize,
        t: usize,
        u: f64,
        betas: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Proposal> {
        let (start, end) = (self.model.xi[k], self.model.xi[k + 1]);
        let t_min = self.cfg.t_min;
        if end - start < 2 * t_min || t < start + t_min || t > end - t_min {
            return Err(Error::InvalidParameter(format!(
                "cannot split segment [{start}, {end}) at {t} with t_min = {t_min}"
            )));
        }
        let u = u.clamp(U_CLAMP, 1.0 - U_CLAMP);
        let tau_old = self.model.tau2[k];
        let (tau_l, tau_r) = (u / (1.0 - u) * tau_old, (1.0 - u) / u * tau_old);
        let seg_l = Arc::new(self.ws.segment(&self.series, start, t)?);
        let seg_r = Arc::new(self.ws.segment(&self.series, t, end)?);
        let warm = self.model.beta[k].clone();
        let approx_l = self.fit(&seg_l, tau_l, &warm)?;
        let approx_r = self.fit(&seg_r, tau_r, &warm)?;
        let current = self.segments[k].clone();
        let merged = self.fit(&current, tau_old, &warm)?;
        let (beta_l, beta_r) = match betas {
            Some(b) => b,
            None => (approx_l.sample(&mut self.rng), approx_r.sample(&mut self.rng)),
        };
        let split_q = approx_l.log_density(&beta_l) + approx_r.log_density(&beta_r);
        let merged_q = merged.log_density(&self.model.beta[k]);
        let mut p = self.replace(
            MoveKind::Birth,
            k,
            1,
            &[t],
            vec![beta_l, beta_r],
            vec![tau_l, tau_r],
            vec![seg_l, seg_r],
        );
        p.log_ratio = self.birth_log_ratio(
            (&self.model, &self.logliks),
            (&p.model, &p.logliks),
            k,
            u,
            merged_q,
            split_q,
        );
        Ok(p)
    }

    /// Random birth: segment uniform among the splittable ones, split point
    /// uniform over its admissible positions, `u ~ U(0, 1)`.
    pub fn propose_birth(&mut self) -> Result<Option<Proposal>> {
        let t_min = self.cfg.t_min;
        let splittable: Vec<usize> = (0..self.model.m())
            .filter(|&j| self.model.segment_len(j) >= 2 * t_min)
            .collect();
        if splittable.is_empty() || self.model.m() >= self.cfg.max_segments {
            return Ok(None);
        }
        let k = splittable[self.rng.random_range(0..splittable.len())];
        let (start, end) = (self.model.xi[k], self.model.xi[k + 1]);
        let t = self.rng.random_range(start + t_min..=end - t_min);
        let u: f64 = self.rng.random();
        self.propose_birth_at(k, t, u, None).map(Some)
    }

    /// Death proposal removing changepoint `xi[k+1]`, merging segments `k`
    /// and `k+1`. `beta` overrides the draw for the merged segment.
    pub fn propose_death_at(&mut self, k: usize, beta: Option<Vec<f64>>) -> Result<Proposal> {
        let m = self.model.m();
        if m < 2 || k + 1 >= m {
            return Err(Error::InvalidParameter(format!("no changepoint {k} to remove from {m} segments")));
        }
        let (tau_l, tau_r) = (self.model.tau2[k], self.model.tau2[k + 1]);
        let tau_m = (tau_l * tau_r).sqrt();
        let (rl, rr) = (tau_l.sqrt(), tau_r.sqrt());
        let u = (rl / (rl + rr)).clamp(U_CLAMP, 1.0 - U_CLAMP);
        let (start, end) = (self.model.xi[k], self.model.xi[k + 2]);
        let seg_m = Arc::new(self.ws.segment(&self.series, start, end)?);
        let warm: Vec<f64> = self.model.beta[k]
            .iter()
            .zip(&self.model.beta[k + 1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let approx_m = self.fit(&seg_m, tau_m, &warm)?;
        let (seg_l, seg_r) = (self.segments[k].clone(), self.segments[k + 1].clone());
        let warm_l = self.model.beta[k].clone();
        let warm_r = self.model.beta[k + 1].clone();
        let approx_l = self.fit(&seg_l, tau_l, &warm_l)?;
        let approx_r = self.fit(&seg_r, tau_r, &warm_r)?;
        let beta_m = beta.unwrap_or_else(|| approx_m.sample(&mut self.rng));
        let merged_q = approx_m.log_density(&beta_m);
        let split_q = approx_l.log_density(&self.model.beta[k]) + approx_r.log_density(&self.model.beta[k + 1]);
        let mut p = self.replace(MoveKind::Death, k, 2, &[], vec![beta_m], vec![tau_m], vec![seg_m]);
        p.log_ratio = -self.birth_log_ratio(
            (&p.model, &p.logliks),
            (&self.model, &self.logliks),
            k,
            u,
            merged_q,
            split_q,
        );
        Ok(p)
    }

    /// Random death: changepoint uniform among the `m − 1` interior ones.
    pub fn propose_death(&mut self) -> Result<Option<Proposal>> {
        let m = self.model.m();
        if m < 2 {
            return Ok(None);
        }
        let k = self.rng.random_range(0..m - 1);
        self.propose_death_at(k, None).map(Some)
    }

    /// Admissible span `[lo, hi]` for relocating changepoint `xi[k+1]`.
    pub fn relocation_span(&self, k: usize) -> (usize, usize) {
        (self.model.xi[k] + self.cfg.t_min, self.model.xi[k + 2] - self.cfg.t_min)
    }

    /// Probability that the relocation mixture proposes `t` from `current`.
    pub fn relocation_probability(&self, k: usize, current: usize, t: usize) -> f64 {
        relocation_probability(self.relocation_span(k), self.cfg.mix_pi, current, t)
    }

    /// Moves changepoint `xi[k+1]` to `t` and redraws both neighbouring
    /// coefficient vectors (or uses `betas`).
    pub fn propose_within_at(
        &mut self,
        k: usize,
        t: usize,
        betas: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Proposal> {
        let m = self.model.m();
        if m < 2 || k + 1 >= m {
            return Err(Error::InvalidParameter(format!("no changepoint {k} to move among {m} segments")));
        }
        let (lo, hi) = self.relocation_span(k);
        if t < lo || t > hi {
            return Err(Error::InvalidParameter(format!("relocation target {t} outside [{lo}, {hi}]")));
        }
        let current = self.model.xi[k + 1];
        let (start, end) = (self.model.xi[k], self.model.xi[k + 2]);
        let (tau_l, tau_r) = (self.model.tau2[k], self.model.tau2[k + 1]);
        let (warm_l, warm_r) = (self.model.beta[k].clone(), self.model.beta[k + 1].clone());
        let (old_l, old_r) = (self.segments[k].clone(), self.segments[k + 1].clone());
        let cur_l = self.fit(&old_l, tau_l, &warm_l)?;
        let cur_r = self.fit(&old_r, tau_r, &warm_r)?;
        let (new_l, new_r, prop_l, prop_r) = if t == current {
            (old_l, old_r, cur_l.clone(), cur_r.clone())
        } else {
            let sl = Arc::new(self.ws.segment(&self.series, start, t)?);
            let sr = Arc::new(self.ws.segment(&self.series, t, end)?);
            let pl = self.fit(&sl, tau_l, &warm_l)?;
            let pr = self.fit(&sr, tau_r, &warm_r)?;
            (sl, sr, pl, pr)
        };
        let (beta_l, beta_r) = match betas {
            Some(b) => b,
            None => (prop_l.sample(&mut self.rng), prop_r.sample(&mut self.rng)),
        };
        let sigma0_sq = self.cfg.sigma0_sq;
        let q_forward = prop_l.log_density(&beta_l) + prop_r.log_density(&beta_r);
        let q_reverse = cur_l.log_density(&warm_l) + cur_r.log_density(&warm_r);
        let prior_new = log_prior_beta(&beta_l, tau_l, sigma0_sq) + log_prior_beta(&beta_r, tau_r, sigma0_sq);
        let prior_old = log_prior_beta(&warm_l, tau_l, sigma0_sq) + log_prior_beta(&warm_r, tau_r, sigma0_sq);
        let loc = (self.relocation_probability(k, t, current) / self.relocation_probability(k, current, t)).ln();
        let old_ll = self.logliks[k] + self.logliks[k + 1];
        let mut p = self.replace(
            MoveKind::Within,
            k,
            2,
            &[t],
            vec![beta_l, beta_r],
            vec![tau_l, tau_r],
            vec![new_l, new_r],
        );
        let new_ll = p.logliks[k] + p.logliks[k + 1];
        p.log_ratio = new_ll + prior_new + q_reverse - old_ll - prior_old - q_forward + loc;
        Ok(p)
    }

    /// Random relocation: changepoint uniform among `m − 1`, position from
    /// the mixture of a uniform jump and a ±1 walk.
    pub fn propose_within(&mut self) -> Result<Option<Proposal>> {
        let m = self.model.m();
        if m < 2 {
            return Ok(None);
        }
        let k = self.rng.random_range(0..m - 1);
        let (lo, hi) = self.relocation_span(k);
        let current = self.model.xi[k + 1];
        let t = if self.rng.random::<f64>() < self.cfg.mix_pi {
            self.rng.random_range(lo..=hi)
        } else {
            let near: Vec<usize> = local_moves(lo, hi, current);
            near[self.rng.random_range(0..near.len())]
        };
        self.propose_within_at(k, t, None).map(Some)
    }

    /// Independence Metropolis-Hastings redraw of segment `j`'s coefficients.
    pub fn propose_refresh(&mut self, j: usize) -> Result<Proposal> {
        let tau = self.model.tau2[j];
        let warm = self.model.beta[j].clone();
        let seg = self.segments[j].clone();
        let approx = self.fit(&seg, tau, &warm)?;
        let beta = approx.sample(&mut self.rng);
        let s0 = self.cfg.sigma0_sq;
        let ll_new = seg.loglik(&beta);
        let log_ratio = ll_new + log_prior_beta(&beta, tau, s0) + approx.log_density(&warm)
            - self.logliks[j]
            - log_prior_beta(&warm, tau, s0)
            - approx.log_density(&beta);
        let mut p = self.replace(MoveKind::Refresh, j, 1, &[], vec![beta], vec![tau], vec![seg]);
        p.log_ratio = log_ratio;
        Ok(p)
    }

    /// Metropolis-Hastings decision; returns whether the proposal was adopted.
    pub fn accept_or_reject(&mut self, p: Proposal) -> bool {
        let accept = p.log_ratio >= 0.0 || self.rng.random::<f64>().ln() < p.log_ratio;
        if accept {
            self.accept(p);
        }
        accept
    }

    pub fn accept(&mut self, p: Proposal) {
        self.model = p.model;
        self.segments = p.segments;
        self.logliks = p.logliks;
        debug_assert!(self.model.validate(self.series.len(), &self.cfg).is_ok());
        debug_assert!(self.cache_error() < 1e-8 * (1.0 + self.loglik().abs()));
    }

    /// Draws every `τ²_j` from `IG(a + J/2, b + Σ_{s≥1} β_s²/2)`.
    pub fn gibbs_tau2(&mut self) {
        let (a, b) = self.cfg.prior_tau;
        let j = self.cfg.n_basis as f64;
        for seg in 0..self.model.m() {
            let ss: f64 = self.model.beta[seg][1..].iter().map(|v| v * v).sum();
            let shape = a + 0.5 * j;
            let rate = b + 0.5 * ss;
            let gamma = Gamma::new(shape, 1.0 / rate).expect("positive shape and rate");
            let draw: f64 = gamma.sample(&mut self.rng);
            self.model.tau2[seg] = (1.0 / draw).clamp(f64::MIN_POSITIVE, f64::MAX);
        }
        self.approx_cache.clear();
    }
}

/// `{current − 1, current, current + 1} ∩ [lo, hi]`.
pub(crate) fn local_moves(lo: usize, hi: usize, current: usize) -> Vec<usize> {
    (current.saturating_sub(1)..=current + 1)
        .filter(|&t| t >= lo && t <= hi)
        .collect()
}

/// Mixture `π·q₁ + (1 − π)·q₂` for relocating a changepoint within `[lo, hi]`.
pub fn relocation_probability(span: (usize, usize), mix_pi: f64, current: usize, t: usize) -> f64 {
    let (lo, hi) = span;
    if t < lo || t > hi {
        return 0.0;
    }
    let q1 = 1.0 / (hi - lo + 1) as f64;
    let near = local_moves(lo, hi, current);
    let q2 = if near.contains(&t) { 1.0 / near.len() as f64 } else { 0.0 };
    mix_pi * q1 + (1.0 - mix_pi) * q2
}

/// Log likelihood plus log prior for a model with the given segment log-likelihoods.
pub fn log_target(cfg: &RjmcmcConfig, len: usize, model: &SegmentModel, logliks: &[f64]) -> f64 {
    let m = model.m();
    let (a, b) = cfg.prior_tau;
    let mut total: f64 = logliks.iter().sum();
    for j in 0..m {
        total += log_prior_beta(&model.beta[j], model.tau2[j], cfg.sigma0_sq);
        total += log_inv_gamma(model.tau2[j], a, b);
    }
    // Uniform over partitions with every segment at least t_min long.
    total -= ln_choose(len - m * cfg.t_min + m - 1, m - 1);
    total -= (cfg.max_segments as f64).ln();
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_walk_cases() {
        assert_eq!(local_moves(10, 20, 15), vec![14, 15, 16]);
        assert_eq!(local_moves(10, 20, 10), vec![10, 11]);
        assert_eq!(local_moves(10, 20, 20), vec![19, 20]);
        assert_eq!(local_moves(10, 10, 10), vec![10]);
    }

    #[test]
    fn both_neighbours_at_minimum_stay_put() {
        // Neighbours of exactly t_min leave a one-point span.
        assert_eq!(relocation_probability((50, 50), 0.8, 50, 50), 1.0);
    }

    #[test]
    fn mixture_normalised() {
        for current in [10, 11, 15, 19, 20] {
            let total: f64 = (0..40).map(|t| relocation_probability((10, 20), 0.3, current, t)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_choose_small() {
        assert!((ln_choose(5, 2) - 10f64.ln()).abs() < 1e-12);
        assert_eq!(ln_choose(7, 0), 0.0);
    }
}
