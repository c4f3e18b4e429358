use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cluster::{sq_dist, ClusterAssignment};
use crate::error::{PecError, Result};
use crate::srg::SpaceRelationGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = PecError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            other => Err(PecError::invalid(format!("unknown linkage {other:?}"))),
        }
    }
}

/// Flat cut of an agglomerative merge sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    /// Labels numbered by smallest member index.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// Linkage distance of each merge, in merge order.
    pub merge_heights: Vec<f64>,
}

/// Agglomerate from singletons until `n` clusters remain.
///
/// Distances may be `+inf` (e.g. disconnected graph nodes). Ties go to the
/// lexicographically smallest pair of cluster representatives, where a
/// cluster is represented by its smallest member index.
pub fn hca(dist: &Array2<f64>, linkage: Linkage, n: usize) -> Result<Hierarchy> {
    let len = dist.nrows();
    if dist.ncols() != len {
        return Err(PecError::invalid("distance matrix must be square"));
    }
    if n < 1 || n > len {
        return Err(PecError::invalid(format!(
            "cluster count {n} must lie in 1..={len}"
        )));
    }
    if dist.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(PecError::invalid("distances must be nonnegative"));
    }
    let mut d = dist.to_owned();
    let mut size = vec![1usize; len];
    let mut active = vec![true; len];
    let mut parent: Vec<usize> = (0..len).collect();
    let mut heights = Vec::with_capacity(len - n);

    for _ in 0..(len - n) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..len {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..len {
                if active[j] && best.is_none_or(|(_, _, b)| d[[i, j]] < b) {
                    best = Some((i, j, d[[i, j]]));
                }
            }
        }
        let (i, j, h) = best.expect("at least two active clusters");
        heights.push(h);
        for k in 0..len {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dki, dkj) = (d[[k, i]], d[[k, j]]);
            let merged = match linkage {
                Linkage::Single => dki.min(dkj),
                Linkage::Complete => dki.max(dkj),
                Linkage::Average => {
                    (size[i] as f64 * dki + size[j] as f64 * dkj) / (size[i] + size[j]) as f64
                }
            };
            d[[k, i]] = merged;
            d[[i, k]] = merged;
        }
        size[i] += size[j];
        active[j] = false;
        parent[j] = i;
    }

    let root = |mut u: usize| {
        while parent[u] != u {
            u = parent[u];
        }
        u
    };
    let mut ids = vec![usize::MAX; len];
    let mut next = 0;
    let labels = (0..len)
        .map(|u| {
            let r = root(u);
            if ids[r] == usize::MAX {
                ids[r] = next;
                next += 1;
            }
            ids[r]
        })
        .collect();
    Ok(Hierarchy {
        labels,
        n_clusters: n,
        merge_heights: heights,
    })
}

/// HCA on Euclidean points; returns centroids and inertia as well.
pub fn hca_points(x: &Array2<f64>, linkage: Linkage, n: usize) -> Result<ClusterAssignment> {
    let (len, dim) = x.dim();
    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = x.as_slice().unwrap().chunks(dim.max(1)).take(len).collect();
    let dist = Array2::from_shape_fn((len, len), |(i, j)| sq_dist(rows[i], rows[j]).sqrt());
    let h = hca(&dist, linkage, n)?;
    let mut centroids = Array2::<f64>::zeros((n, dim));
    let mut counts = vec![0usize; n];
    for (i, &l) in h.labels.iter().enumerate() {
        counts[l] += 1;
        let mut c = centroids.row_mut(l);
        c += &x.row(i);
    }
    for (l, &c) in counts.iter().enumerate() {
        centroids.row_mut(l).mapv_inplace(|v| v / c as f64);
    }
    let inertia = h
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(rows[i], centroids.row(l).as_slice().unwrap()))
        .sum();
    Ok(ClusterAssignment {
        labels: h.labels,
        centroids,
        inertia,
        n_clusters: n,
    })
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest path lengths with edge length `1 / weight`;
/// unreachable pairs are `+inf`. On unit-weight graphs this is hop count.
pub fn graph_distances(g: &SpaceRelationGraph) -> Array2<f64> {
    let n = g.node_count();
    let mut out = Array2::from_elem((n, n), f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        out[[s, s]] = 0.0;
        heap.push(Entry(0.0, s));
        while let Some(Entry(du, u)) = heap.pop() {
            if du > out[[s, u]] {
                continue;
            }
            for &(v, w) in g.neighbors(u) {
                let nd = du + 1.0 / w;
                if nd < out[[s, v]] {
                    out[[s, v]] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srg::build_srg_from_adjacency;

    fn one_d(v: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()
    }

    #[test]
    fn average_linkage_small() {
        let a = hca_points(&one_d(&[0.0, 1.0, 10.0]), Linkage::Average, 2).unwrap();
        assert_eq!(a.labels, vec![0, 0, 1]);
    }

    #[test]
    fn n_equals_len_is_singletons() {
        let a = hca_points(&one_d(&[4.0, 1.0, 10.0, 2.0]), Linkage::Complete, 4).unwrap();
        assert_eq!(a.labels, vec![0, 1, 2, 3]);
        assert_eq!(a.inertia, 0.0);
    }

    #[test]
    fn single_linkage_recovers_chains() {
        // two interleaved-in-x but vertically separated chains
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([i as f64, 0.0]);
            pts.push([i as f64 + 0.5, 5.0]);
        }
        let x = Array2::from_shape_fn((16, 2), |(i, j)| pts[i][j]);
        let a = hca_points(&x, Linkage::Single, 2).unwrap();
        for i in 0..16 {
            assert_eq!(a.labels[i], i % 2);
        }
    }

    #[test]
    fn merge_heights_monotone() {
        use rand::Rng;
        let mut rng = crate::seed::rng(17);
        let x = Array2::from_shape_fn((30, 3), |_| rng.random_range(-3.0f64..3.0));
        let dist = Array2::from_shape_fn((30, 30), |(i, j)| {
            (0..3)
                .map(|k| (x[[i, k]] - x[[j, k]]).powi(2))
                .sum::<f64>()
                .sqrt()
        });
        for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
            let h = hca(&dist, linkage, 1).unwrap();
            assert_eq!(h.merge_heights.len(), 29);
            for w in h.merge_heights.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn ties_break_toward_smallest_pair() {
        let h = hca(&Array2::from_elem((4, 4), 1.0), Linkage::Average, 3).unwrap();
        assert_eq!(h.labels, vec![0, 0, 1, 2]);
    }

    #[test]
    fn graph_distances_hops_and_unreachable() {
        let g = build_srg_from_adjacency(&["iso"], &[("a", "b"), ("b", "c")]).unwrap();
        let d = graph_distances(&g);
        assert_eq!(d[[1, 3]], 2.0);
        assert_eq!(d[[0, 1]], f64::INFINITY);
        let h = hca(&d, Linkage::Average, 2).unwrap();
        assert_eq!(h.labels, vec![0, 1, 1, 1]);
    }
}
