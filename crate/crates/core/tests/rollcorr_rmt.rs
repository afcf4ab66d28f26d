mod common;

use ndarray::Array2;
use proptest::prelude::*;
use sectorscope::rmt::*;
use sectorscope::rollcorr::*;

/// Cyclic Jacobi rotations; returns eigenvalues in descending order.
fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[[i, j]].powi(2)).sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Integral of the density over its support after `x = c + r cos θ`, which
/// removes the square-root endpoint singularities.
fn mp_mass(b: &MpBounds) -> f64 {
    let c = 0.5 * (b.lambda_plus + b.lambda_minus);
    let r = 0.5 * (b.lambda_plus - b.lambda_minus);
    let n = 20_000;
    let h = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|i| {
            let th = (i as f64 + 0.5) * h;
            mp_density(c + r * th.cos(), b) * r * th.sin() * h
        })
        .sum()
}

#[test]
fn correlation_matches_pairwise_pearson() {
    let p = common::panel(common::gaussian_matrix(150, 10, 11), &["S"; 10]);
    let m = rolling_correlation(&p, 150, 149).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let a: Vec<f64> = p.returns().column(i).to_vec();
            let b: Vec<f64> = p.returns().column(j).to_vec();
            assert!((m.values[[i, j]] - common::pearson(&a, &b)).abs() < 1e-10);
        }
    }
}

#[test]
fn correlation_invariants_hold() {
    let p = common::panel(common::gaussian_matrix(200, 8, 5), &["S"; 8]);
    for m in rolling_correlation_series(&p, 150).unwrap() {
        let m = m.unwrap();
        for i in 0..8 {
            assert!((m.values[[i, i]] - 1.0).abs() < 1e-12);
            for j in 0..8 {
                assert_eq!(m.values[[i, j]], m.values[[j, i]]);
                assert!(m.values[[i, j]].abs() <= 1.0 + 1e-12);
            }
        }
        let s = eigen_spectrum(&m).unwrap();
        assert!(*s.eigenvalues.last().unwrap() >= -1e-8);
    }
}

#[test]
fn series_matches_single_shot() {
    let p = common::panel(common::gaussian_matrix(180, 5, 6), &["S"; 5]);
    let all = rolling_correlation_all(&p, 60).unwrap();
    assert_eq!(all.len(), 180 - 60 + 1);
    for t in [59, 100, 179] {
        let m = rolling_correlation(&p, 60, t).unwrap();
        assert_eq!(all[t - 59], m);
    }
}

#[test]
fn shifted_panel_shifts_series() {
    let m = common::gaussian_matrix(120, 4, 8);
    let p = common::panel(m.clone(), &["S"; 4]);
    let q = common::panel(m.slice(ndarray::s![1.., ..]).to_owned(), &["S"; 4]);
    let a = rolling_correlation_all(&p, 30).unwrap();
    let b = rolling_correlation_all(&q, 30).unwrap();
    for (x, y) in a[1..].iter().zip(&b) {
        assert_eq!(x.values, y.values);
    }
}

#[test]
fn eigenvalues_match_jacobi() {
    let p = common::panel(common::gaussian_matrix(60, 8, 13), &["S"; 8]);
    let m = rolling_correlation(&p, 60, 59).unwrap();
    let s = eigen_spectrum(&m).unwrap();
    for (a, b) in s.eigenvalues.iter().zip(jacobi_eigenvalues(&m.values)) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn mp_density_integrates_to_one() {
    for q in [1.5, 1.95, 3.3] {
        let mass = mp_mass(&mp_bounds(q, 1.0).unwrap());
        assert!((mass - 1.0).abs() < 1e-3, "q = {q}: {mass}");
    }
}

#[test]
fn mp_density_single_peak() {
    let b = mp_bounds(2.0, 1.0).unwrap();
    let grid: Vec<f64> = (1..1000)
        .map(|i| b.lambda_minus + (b.lambda_plus - b.lambda_minus) * i as f64 / 1000.0)
        .map(|x| mp_density(x, &b))
        .collect();
    assert!(grid.iter().all(|&v| v > 0.0));
    let peak = grid.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(grid[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(grid[peak..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn planted_factor_detected() {
    let (n, s, rho) = (20, 150, 0.6);
    for seed in 0..10 {
        let p = common::panel(common::equicorrelated(s, n, rho, seed), &["S"; 20]);
        let m = rolling_correlation(&p, s, s - 1).unwrap();
        let spectrum = eigen_spectrum(&m).unwrap();
        let b = mp_bounds(s as f64 / n as f64, m.element_variance).unwrap();
        let target = 1.0 + (n - 1) as f64 * rho;
        assert!(count_nonrandom(&spectrum, &b) >= 1);
        assert!((spectrum.lambda1() - target).abs() < 0.15 * target);
    }
}

#[test]
fn regime_switch_raises_lambda1() {
    let mut m = common::gaussian_matrix(400, 10, 21) * 100.0;
    let factor = common::equicorrelated(200, 10, 0.7, 22);
    m.slice_mut(ndarray::s![200.., ..]).assign(&factor);
    let p = common::panel(m, &["S"; 10]);
    let mats = rolling_correlation_all(&p, 100).unwrap();
    let series = time_varying_rmt(&mats, 100).unwrap();
    assert_eq!(series.len(), mats.len());
    let before = series.lambda1_path[0];
    let after = *series.lambda1_path.last().unwrap();
    assert!(after > 3.0 * before);
    assert_eq!(*series.nonrandom_counts.last().unwrap(), 1);
}

#[test]
fn trace_and_weights_every_window() {
    let p = common::panel(common::gaussian_matrix(300, 12, 30), &["S"; 12]);
    let series = time_varying_rmt(&rolling_correlation_all(&p, 150).unwrap(), 150).unwrap();
    for s in &series.spectra {
        assert!((s.eigenvalues.iter().sum::<f64>() - 12.0).abs() < 1e-8);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.weights.windows(2).all(|w| w[0] >= w[1]));
    }
    for (c, b) in series.nonrandom_counts.iter().zip(&series.bounds) {
        assert!(*c <= 12);
        assert!(b.lambda_minus <= b.lambda_plus);
    }
}

#[test]
fn equicorrelation_lambda1_increases_with_rho() {
    let spectrum = |rho: f64| {
        let m = Array2::from_shape_fn((6, 6), |(i, j)| if i == j { 1.0 } else { rho });
        symmetric_spectrum(&m).unwrap().lambda1()
    };
    let mut prev = spectrum(0.0);
    for k in 1..10 {
        let next = spectrum(k as f64 / 10.0);
        assert!(next > prev);
        prev = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn permutation_conjugates(seed in 0u64..500) {
        let m = common::gaussian_matrix(40, 5, seed);
        let perm = [3usize, 0, 4, 1, 2];
        let permuted = Array2::from_shape_fn((40, 5), |(t, j)| m[[t, perm[j]]]);
        let a = rolling_correlation(&common::panel(m, &["S"; 5]), 40, 39).unwrap();
        let b = rolling_correlation(&common::panel(permuted, &["S"; 5]), 40, 39).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert!((b.values[[i, j]] - a.values[[perm[i], perm[j]]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_scaling_invariant(seed in 0u64..500, c in 0.01f64..100.0) {
        let m = common::gaussian_matrix(40, 4, seed);
        let mut scaled = m.clone();
        scaled.column_mut(2).mapv_inplace(|v| v * c);
        let a = rolling_correlation(&common::panel(m, &["S"; 4]), 40, 39).unwrap();
        let b = rolling_correlation(&common::panel(scaled, &["S"; 4]), 40, 39).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
