mod common;

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sectorscope::changepoint::whittle::{fit_segment, SpectralWorkspace};
use sectorscope::changepoint::*;

fn small_cfg() -> RjmcmcConfig {
    RjmcmcConfig {
        iterations: 400,
        burnin: 200,
        ..Default::default()
    }
}

fn random_beta(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| if i == 0 { r.random_range(-1.0..1.0) } else { r.random_range(-0.3..0.3) })
        .collect()
}

/// A valid random model on a series of `len` points.
fn random_model(r: &mut ChaCha8Rng, len: usize, cfg: &RjmcmcConfig) -> SegmentModel {
    loop {
        let m = r.random_range(1..=4);
        let mut cuts: Vec<usize> = (0..m - 1).map(|_| r.random_range(cfg.t_min..=len - cfg.t_min)).collect();
        cuts.sort_unstable();
        let mut xi = vec![0];
        xi.extend(cuts);
        xi.push(len);
        let model = SegmentModel {
            beta: (0..m).map(|_| random_beta(r, cfg.n_basis + 1)).collect(),
            tau2: (0..m).map(|_| r.random_range(0.05..5.0)).collect(),
            xi,
        };
        if model.validate(len, cfg).is_ok() {
            return model;
        }
    }
}

fn dft_periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    (1..=(n - 1) / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = 2.0 * PI * (k * t) as f64 / n as f64;
                re += (v - mean) * a.cos();
                im -= (v - mean) * a.sin();
            }
            (re * re + im * im) / n as f64
        })
        .collect()
}

#[test]
fn periodogram_matches_direct_dft() {
    let x = common::white_noise(255, 1);
    let fast = periodogram(&x).unwrap();
    let slow = dft_periodogram(&x);
    assert_eq!(fast.len(), 127);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-9 * (1.0 + b));
    }
}

#[test]
fn parseval_odd_length() {
    let x = common::white_noise(255, 2);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let total: f64 = periodogram(&x).unwrap().iter().map(|i| 2.0 * i / n).sum();
    assert!((total - var).abs() < 1e-10);
}

#[test]
fn white_noise_periodogram_mean_near_variance() {
    let (mut pg, mut var) = (0.0, 0.0);
    for seed in 0..100 {
        let x = common::white_noise(256, 1000 + seed);
        let p = periodogram(&x).unwrap();
        pg += p.iter().sum::<f64>() / p.len() as f64;
        let m = x.iter().sum::<f64>() / 256.0;
        var += x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 255.0;
    }
    assert!((pg / var - 1.0).abs() < 0.1);
}

#[test]
fn intercept_only_argmax_is_log_mean_power() {
    let x = common::white_noise(300, 3).iter().map(|v| 1.7 * v).collect::<Vec<_>>();
    let p = periodogram(&x).unwrap();
    let target = (p.iter().sum::<f64>() / p.len() as f64).ln();
    // Golden-section search on the one-dimensional likelihood.
    let f = |b: f64| segment_loglik(&x, &[b]).unwrap();
    let (mut lo, mut hi) = (-5.0f64, 5.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(c) > f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    assert!((0.5 * (lo + hi) - target).abs() < 1e-7);
}

#[test]
fn gradient_and_hessian_match_finite_differences() {
    let mut r = common::rng(9);
    let mut ws = SpectralWorkspace::new(10);
    for case in 0..50 {
        let n = r.random_range(40..400);
        let x = common::white_noise(n, 500 + case);
        let seg = ws.segment(&x, 0, n).unwrap();
        let beta = random_beta(&mut r, 11);
        let g = seg.gradient(&beta);
        let h = seg.hessian(&beta);
        let step = 1e-5;
        let mut g_err = 0.0f64;
        let mut h_err = 0.0f64;
        for i in 0..11 {
            let mut bp = beta.clone();
            let mut bm = beta.clone();
            bp[i] += step;
            bm[i] -= step;
            let fd = (seg.loglik(&bp) - seg.loglik(&bm)) / (2.0 * step);
            g_err = g_err.max((fd - g[i]).abs() / g[i].abs().max(1.0));
            let (gp, gm) = (seg.gradient(&bp), seg.gradient(&bm));
            for j in 0..11 {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                h_err = h_err.max((fd - h[(i, j)]).abs() / h[(i, j)].abs().max(1.0));
            }
        }
        assert!(g_err < 1e-5, "case {case}: gradient {g_err}");
        assert!(h_err < 1e-5, "case {case}: hessian {h_err}");
    }
}

#[test]
fn white_noise_mode_near_log_variance() {
    let x: Vec<f64> = common::white_noise(1000, 4).iter().map(|v| 2.0 * v).collect();
    let approx = beta_mode_and_hessian(&x, 1e-6, 100.0, 10).unwrap();
    assert!((approx.mode[0] - 4f64.ln()).abs() < 0.15);
    assert!(approx.mode[1..].iter().all(|b| b.abs() < 0.01));
    let c = approx.covariance();
    assert!((&c - c.transpose()).norm() < 1e-10);
}

#[test]
fn birth_splits_tau_symmetrically_at_half() {
    let cfg = RjmcmcConfig::default();
    let x = common::white_noise(400, 5);
    let mut s = ChainState::new(x, &cfg).unwrap();
    let tau = s.model().tau2[0];
    let p = s.propose_birth_at(0, 200, 0.5, None).unwrap();
    assert_eq!(p.model.tau2, vec![tau, tau]);
    let a = p.acceptance_probability();
    assert!((0.0..=1.0).contains(&a));
}

#[test]
fn death_merges_tau_geometrically() {
    let cfg = RjmcmcConfig::default();
    let x = common::white_noise(400, 6);
    let mut r = common::rng(6);
    for ((tl, tr), expect) in [((4.0, 4.0), 4.0), ((1.0, 9.0), 3.0)] {
        let model = SegmentModel {
            xi: vec![0, 200, 400],
            beta: vec![random_beta(&mut r, 11), random_beta(&mut r, 11)],
            tau2: vec![tl, tr],
        };
        let mut s = ChainState::from_model(x.clone(), &cfg, model, 0).unwrap();
        let p = s.propose_death_at(0, None).unwrap();
        assert_eq!(p.model.tau2, vec![expect]);
    }
}

#[test]
fn birth_and_matching_death_are_reciprocal() {
    let cfg = RjmcmcConfig::default();
    let len = 400;
    let x = common::white_noise(len, 7);
    let mut r = common::rng(70);
    let mut checked = 0;
    while checked < 100 {
        let model = random_model(&mut r, len, &cfg);
        let splittable: Vec<usize> = (0..model.m()).filter(|&j| model.segment_len(j) >= 2 * cfg.t_min).collect();
        if splittable.is_empty() {
            continue;
        }
        let k = splittable[r.random_range(0..splittable.len())];
        let t = r.random_range(model.xi[k] + cfg.t_min..=model.xi[k + 1] - cfg.t_min);
        let u = r.random_range(0.05..0.95);
        let betas = (random_beta(&mut r, 11), random_beta(&mut r, 11));
        let mut small = ChainState::from_model(x.clone(), &cfg, model.clone(), 1).unwrap();
        let birth = small.propose_birth_at(k, t, u, Some(betas)).unwrap();
        let mut big = ChainState::from_model(x.clone(), &cfg, birth.model.clone(), 2).unwrap();
        let death = big.propose_death_at(k, Some(model.beta[k].clone())).unwrap();
        assert_eq!(death.model.xi, model.xi);
        assert!((death.model.tau2[k] - model.tau2[k]).abs() < 1e-12 * model.tau2[k]);
        let sum = birth.log_ratio + death.log_ratio;
        assert!(sum.abs() < 1e-8, "state {checked}: {} + {} = {sum}", birth.log_ratio, death.log_ratio);
        checked += 1;
    }
}

#[test]
fn gibbs_mean_matches_inverse_gamma() {
    let cfg = RjmcmcConfig::default();
    let x = common::white_noise(400, 8);
    let beta: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
    let ss: f64 = beta[1..].iter().map(|b| b * b).sum();
    let model = SegmentModel {
        xi: vec![0, 400],
        beta: vec![beta],
        tau2: vec![1.0],
    };
    let mut s = ChainState::from_model(x, &cfg, model, 3).unwrap();
    let n = 100_000;
    let mut total = 0.0;
    for _ in 0..n {
        s.gibbs_tau2();
        let t = s.model().tau2[0];
        assert!(t > 0.0);
        total += t;
    }
    let (a, b) = cfg.prior_tau;
    let mean = (b + 0.5 * ss) / (a + 5.0 - 1.0);
    assert!((total / n as f64 / mean - 1.0).abs() < 0.02);
}

#[test]
fn gibbs_without_basis_draws_from_prior() {
    let cfg = RjmcmcConfig {
        n_basis: 0,
        t_min: 10,
        prior_tau: (3.0, 2.0),
        ..Default::default()
    };
    let model = SegmentModel {
        xi: vec![0, 200],
        beta: vec![vec![0.0]],
        tau2: vec![1.0],
    };
    let mut s = ChainState::from_model(common::white_noise(200, 9), &cfg, model, 4).unwrap();
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|_| {
            s.gibbs_tau2();
            s.model().tau2[0]
        })
        .sum();
    assert!((total / n as f64 - 1.0).abs() < 0.02);
}

#[test]
fn chains_are_deterministic() {
    let x = common::ar_switch(400, 200, (0.8, -0.8), 10);
    let a = run_rjmcmc(&x, &small_cfg()).unwrap();
    let b = run_rjmcmc(&x, &small_cfg()).unwrap();
    assert_eq!(a, b);
    let c = run_rjmcmc(&x, &RjmcmcConfig { seed: 1, ..small_cfg() }).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn cache_stays_consistent_over_sweeps() {
    let cfg = small_cfg();
    let x = common::ar_switch(400, 200, (0.8, -0.8), 11);
    let mut s = ChainState::new(x.clone(), &cfg).unwrap();
    let mut stats = MoveStats::default();
    for _ in 0..300 {
        sweep(&mut s, &mut stats).unwrap();
        assert!(s.cache_error() < 1e-10);
        s.model().validate(x.len(), &cfg).unwrap();
        let mut ws = SpectralWorkspace::new(cfg.n_basis);
        let total: f64 = (0..s.model().m())
            .map(|j| ws.segment(&x, s.model().xi[j], s.model().xi[j + 1]).unwrap().loglik(&s.model().beta[j]))
            .sum();
        assert!((s.loglik() - total).abs() < 1e-10 * total.abs().max(1.0));
    }
    assert!(stats.birth.0 + stats.death.0 > 0);
}

#[test]
fn relocation_mixture_sums_to_one() {
    let cfg = RjmcmcConfig {
        max_segments: 5,
        ..Default::default()
    };
    let model = SegmentModel {
        xi: vec![0, 70, 130, 200],
        beta: vec![vec![0.0; 11]; 3],
        tau2: vec![1.0; 3],
    };
    let s = ChainState::from_model(common::white_noise(200, 12), &cfg, model, 0).unwrap();
    for k in 0..2 {
        let (lo, hi) = s.relocation_span(k);
        let current = s.model().xi[k + 1];
        let total: f64 = (0..200).map(|t| s.relocation_probability(k, current, t)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(hi - lo + 1, s.model().segment_len(k) + s.model().segment_len(k + 1) - 2 * cfg.t_min + 1);
    }
}

#[test]
fn within_move_ratio_is_symmetric_under_reversal() {
    let cfg = RjmcmcConfig::default();
    let x = common::ar_switch(400, 200, (0.7, -0.7), 13);
    let mut r = common::rng(13);
    for _ in 0..20 {
        let mut model = random_model(&mut r, 400, &cfg);
        if model.m() < 2 {
            model = SegmentModel {
                xi: vec![0, 180, 400],
                beta: vec![random_beta(&mut r, 11), random_beta(&mut r, 11)],
                tau2: vec![1.0, 2.0],
            };
        }
        let k = r.random_range(0..model.m() - 1);
        let mut a = ChainState::from_model(x.clone(), &cfg, model.clone(), 0).unwrap();
        let (lo, hi) = a.relocation_span(k);
        let t = r.random_range(lo..=hi);
        let betas = (random_beta(&mut r, 11), random_beta(&mut r, 11));
        let fwd = a.propose_within_at(k, t, Some(betas)).unwrap();
        let mut b = ChainState::from_model(x.clone(), &cfg, fwd.model.clone(), 0).unwrap();
        let back = b
            .propose_within_at(k, model.xi[k + 1], Some((model.beta[k].clone(), model.beta[k + 1].clone())))
            .unwrap();
        assert!((fwd.log_ratio + back.log_ratio).abs() < 1e-8);
    }
}

#[test]
fn short_series_rejected() {
    assert!(run_rjmcmc(&common::white_noise(60, 1), &RjmcmcConfig::default()).is_err());
}

#[test]
fn approximation_density_integrates_along_axis() {
    // The Gaussian approximation is normalised: a 1-D slice through the mode
    // integrates to the marginal-conditional constant implied by the precision.
    let x = common::white_noise(200, 14);
    let mut ws = SpectralWorkspace::new(0);
    let seg = ws.segment(&x, 0, 200).unwrap();
    let a = fit_segment(&seg, 1.0, 100.0, None).unwrap();
    let h = 1e-4;
    let total: f64 = (-100_000..100_000)
        .map(|i| a.log_density(&[a.mode[0] + i as f64 * h]).exp() * h)
        .sum();
    assert!((total - 1.0).abs() < 1e-6);
}
