mod common;

use std::collections::BTreeMap;

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use sectorscope::ingest::sector_partition;
use sectorscope::sectors::*;

fn random_matrix(n: usize, seed: u64) -> DistanceMatrix {
    let mut r = common::rng(seed);
    let mut v = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let d: f64 = r.random_range(0.1..10.0);
            v[[i, j]] = d;
            v[[j, i]] = d;
        }
    }
    let labels = (0..n).map(|i| format!("L{i}")).collect();
    DistanceMatrix::new(labels, v).unwrap()
}

/// Recomputes every cluster distance from the leaves at each step.
fn naive_cluster(d: &DistanceMatrix, linkage: Linkage) -> Vec<(Vec<usize>, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..d.len()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let pairs: Vec<f64> = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| d.get(i, j))
                    .collect();
                let v = match linkage {
                    Linkage::Single => pairs.iter().cloned().fold(f64::INFINITY, f64::min),
                    Linkage::Complete => pairs.iter().cloned().fold(0.0, f64::max),
                    Linkage::Average => pairs.iter().sum::<f64>() / pairs.len() as f64,
                };
                if v < best.2 {
                    best = (a, b, v);
                }
            }
        }
        let (a, b, h) = best;
        let mut merged = clusters[a].clone();
        merged.extend(clusters.remove(b));
        merged.sort_unstable();
        clusters[a] = merged.clone();
        out.push((merged, h));
    }
    out
}

fn kruskal_weights(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.len();
    let mut edges: Vec<(f64, usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (d.get(i, j), i, j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let mut out = Vec::new();
    for (w, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            out.push(w);
        }
    }
    out
}

#[test]
fn matches_naive_oracle_all_linkages() {
    for seed in 0..5 {
        let d = random_matrix(6, seed);
        for linkage in [Linkage::Average, Linkage::Single, Linkage::Complete] {
            let dendro = agglomerative_cluster(&d, linkage).unwrap();
            let naive = naive_cluster(&d, linkage);
            assert_eq!(dendro.merges.len(), 5);
            for (step, (m, (members, h))) in dendro.merges.iter().zip(&naive).enumerate() {
                assert!((m.height - h).abs() < 1e-12, "{linkage} step {step}");
                assert_eq!(&dendro.members(6 + step), members);
                assert_eq!(m.size, members.len());
            }
        }
    }
}

#[test]
fn single_linkage_heights_are_mst_weights() {
    for seed in 10..15 {
        let d = random_matrix(9, seed);
        let heights: Vec<f64> = agglomerative_cluster(&d, Linkage::Single)
            .unwrap()
            .merges
            .iter()
            .map(|m| m.height)
            .collect();
        assert_eq!(heights, kruskal_weights(&d));
    }
}

#[test]
fn heights_non_decreasing() {
    for linkage in [Linkage::Average, Linkage::Single, Linkage::Complete] {
        let dendro = agglomerative_cluster(&random_matrix(12, 99), linkage).unwrap();
        assert!(dendro.merges.windows(2).all(|w| w[0].height <= w[1].height));
    }
}

#[test]
fn relabeling_keeps_topology() {
    let d = random_matrix(7, 3);
    let perm = [4usize, 6, 0, 2, 1, 5, 3];
    let values = Array2::from_shape_fn((7, 7), |(i, j)| d.get(perm[i], perm[j]));
    let labels = perm.iter().map(|&p| d.labels[p].clone()).collect();
    let e = DistanceMatrix::new(labels, values).unwrap();
    let a = agglomerative_cluster(&d, Linkage::Average).unwrap();
    let b = agglomerative_cluster(&e, Linkage::Average).unwrap();
    for step in 0..6 {
        let names = |dg: &Dendrogram, id| {
            let mut v: Vec<String> = dg.members(id).iter().map(|&i| dg.labels[i].clone()).collect();
            v.sort();
            v
        };
        assert_eq!(names(&a, 7 + step), names(&b, 7 + step));
        assert_eq!(a.merges[step].height, b.merges[step].height);
    }
}

#[test]
fn identical_series_path_is_one() {
    let col = common::gaussian_matrix(200, 1, 4);
    let m = ndarray::concatenate![ndarray::Axis(1), col, col];
    let p = common::panel(m, &["S", "S"]);
    let path = variance_path("S", &p, 150).unwrap();
    assert_eq!(path.values.len(), 51);
    assert!(path.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn independent_sector_below_half() {
    for seed in 0..10 {
        let p = common::panel(common::gaussian_matrix(200, 7, 100 + seed), &["S"; 7]);
        let path = variance_path("S", &p, 150).unwrap();
        for v in &path.values {
            assert!(*v < 0.5 && *v >= 1.0 / 7.0 - 1e-12);
        }
    }
}

#[test]
fn one_path_per_sector() {
    let names = ["A", "A", "B", "B", "C", "C", "D", "D", "E", "E", "F", "F", "G", "G", "H", "H"];
    let p = common::panel(common::gaussian_matrix(60, 16, 8), &names);
    let paths = variance_paths(&sector_partition(&p), 40).unwrap();
    assert_eq!(paths.len(), 8);
    let d = l1_distance_matrix(&paths).unwrap();
    assert_eq!(d.len(), 8);
}

#[test]
fn l1_matches_scalar_loop() {
    let mut r = common::rng(5);
    let mk = |r: &mut rand_chacha::ChaCha8Rng, name: &str| VariancePath {
        sector: name.into(),
        times: (149..400).collect(),
        values: (0..251).map(|_| r.random_range(0.1..1.0)).collect(),
    };
    let (a, b) = (mk(&mut r, "a"), mk(&mut r, "b"));
    let mut total = 0.0;
    for i in 0..251 {
        total += (a.values[i] - b.values[i]).abs();
    }
    assert!((l1_path_distance(&a, &b).unwrap() - total / 251.0).abs() < 1e-12);
}

#[test]
fn degenerate_sector_in_map_rejected() {
    let p = common::panel(common::gaussian_matrix(60, 3, 8), &["A", "A", "B"]);
    let parts: BTreeMap<_, _> = sector_partition(&p);
    assert!(matches!(variance_paths(&parts, 40), Err(sectorscope::Error::DegenerateSector(s)) if s == "B"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn l1_is_pseudometric(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let mut mk = |name: &str| VariancePath {
            sector: name.into(),
            times: (0..50).collect(),
            values: (0..50).map(|_| r.random_range(0.0..1.0)).collect(),
        };
        let (a, b, c) = (mk("a"), mk("b"), mk("c"));
        let ab = l1_path_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, l1_path_distance(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(l1_path_distance(&a, &a).unwrap(), 0.0);
        let ac = l1_path_distance(&a, &c).unwrap();
        let cb = l1_path_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }
}
