//! Agglomerative clustering on a precomputed distance matrix.
//!
//! Cluster distances are updated with the Lance-Williams recurrences. When
//! several pairs are equally close, the pair whose smallest member labels
//! sort first wins, so the merge order never depends on input order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::InvalidParameter(format!("unknown linkage {other:?}"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        })
    }
}

/// One merge step. Leaves are numbered `0..n`; the cluster formed by merge
/// `i` gets id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaf indices in drawing order (left subtree first).
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.labels.len();
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                let m = &self.merges[id - n];
                stack.push(m.b);
                stack.push(m.a);
            }
        }
        out
    }

    /// Leaves under cluster `id`, sorted.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let n = self.labels.len();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                stack.push(self.merges[c - n].a);
                stack.push(self.merges[c - n].b);
            }
        }
        out.sort_unstable();
        out
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub fn agglomerative_cluster(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidParameter("clustering needs at least two labels".into()));
    }
    let mut dist = d.values.clone();
    if let Some(((i, j), _)) = dist.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteDistance(i, j));
    }
    // Active slots reuse the index of one merged member; `ids` maps them to cluster ids.
    let mut active: Vec<bool> = vec![true; n];
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut min_label: Vec<&str> = d.labels.iter().map(String::as_str).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                let Some((bi, bj)) = best else {
                    best = Some((i, j));
                    continue;
                };
                let (cur, top) = (dist[[i, j]], dist[[bi, bj]]);
                let better = if ties(cur, top) {
                    label_key(&min_label, i, j) < label_key(&min_label, bi, bj)
                } else {
                    cur < top
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("at least two active clusters");
        let height = dist[[i, j]];
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dik, djk) = (dist[[i, k]], dist[[j, k]]);
            let v = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
            };
            dist[[i, k]] = v;
            dist[[k, i]] = v;
        }
        let (a, b) = (ids[i].min(ids[j]), ids[i].max(ids[j]));
        sizes[i] += sizes[j];
        merges.push(Merge {
            a,
            b,
            height,
            size: sizes[i],
        });
        active[j] = false;
        ids[i] = n + step;
        if min_label[j] < min_label[i] {
            min_label[i] = min_label[j];
        }
    }
    Ok(Dendrogram {
        labels: d.labels.clone(),
        linkage,
        merges,
    })
}

fn label_key<'a>(labels: &[&'a str], i: usize, j: usize) -> (&'a str, &'a str) {
    let (x, y) = (labels[i], labels[j]);
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}
