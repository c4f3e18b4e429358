use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{kmeans, sq_dist, KMeansConfig};
use crate::error::{PecError, Result};

/// Davies-Bouldin (lower is better), Dunn and silhouette (higher is better).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexScores {
    pub davies_bouldin: f64,
    /// `+inf` when every cluster has zero diameter.
    pub dunn: f64,
    pub silhouette: f64,
}

/// Cluster-count recommendation with the per-candidate score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectN {
    pub recommended: usize,
    pub table: BTreeMap<usize, IndexScores>,
}

/// Compute all three indices on Euclidean distances.
///
/// A point alone in its cluster has silhouette 0.
pub fn validity_indices(x: &Array2<f64>, labels: &[usize]) -> Result<IndexScores> {
    let (len, d) = x.dim();
    if labels.len() != len {
        return Err(PecError::invalid("label count does not match row count"));
    }
    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = (0..len)
        .map(|i| &x.as_slice().unwrap()[i * d..(i + 1) * d])
        .collect();

    // compact labels to 0..k in order of first appearance
    let mut remap = BTreeMap::new();
    let lab: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = remap.len();
            *remap.entry(*l).or_insert(next)
        })
        .collect();
    let k = remap.len();
    if k < 2 {
        return Err(PecError::invalid(
            "validity indices need at least two nonempty clusters",
        ));
    }

    let mut sizes = vec![0usize; k];
    let mut centroids = vec![vec![0.0; d]; k];
    for (i, &c) in lab.iter().enumerate() {
        sizes[c] += 1;
        for (acc, v) in centroids[c].iter_mut().zip(rows[i]) {
            *acc += v;
        }
    }
    for (c, cen) in centroids.iter_mut().enumerate() {
        cen.iter_mut().for_each(|v| *v /= sizes[c] as f64);
    }

    // Davies-Bouldin
    let mut scatter = vec![0.0; k];
    for (i, &c) in lab.iter().enumerate() {
        scatter[c] += sq_dist(rows[i], &centroids[c]).sqrt();
    }
    for c in 0..k {
        scatter[c] /= sizes[c] as f64;
    }
    let mut db = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i != j {
                let sep = sq_dist(&centroids[i], &centroids[j]).sqrt();
                worst = worst.max((scatter[i] + scatter[j]) / sep);
            }
        }
        db += worst;
    }
    db /= k as f64;

    // pairwise distances feed both Dunn and silhouette
    let mut dist = vec![0.0; len * len];
    for i in 0..len {
        for j in (i + 1)..len {
            let v = sq_dist(rows[i], rows[j]).sqrt();
            dist[i * len + j] = v;
            dist[j * len + i] = v;
        }
    }

    let mut min_between = f64::INFINITY;
    let mut max_diameter = 0.0f64;
    for i in 0..len {
        for j in (i + 1)..len {
            let v = dist[i * len + j];
            if lab[i] == lab[j] {
                max_diameter = max_diameter.max(v);
            } else {
                min_between = min_between.min(v);
            }
        }
    }
    let dunn = if max_diameter > 0.0 {
        min_between / max_diameter
    } else if min_between > 0.0 {
        f64::INFINITY
    } else {
        return Err(PecError::invalid(
            "all points coincide; the Dunn index is undefined",
        ));
    };

    let mut sil = 0.0;
    let mut per_cluster = vec![0.0; k];
    for i in 0..len {
        let c = lab[i];
        if sizes[c] == 1 {
            continue;
        }
        per_cluster.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..len {
            per_cluster[lab[j]] += dist[i * len + j];
        }
        let a = per_cluster[c] / (sizes[c] - 1) as f64;
        let b = (0..k)
            .filter(|&o| o != c)
            .map(|o| per_cluster[o] / sizes[o] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            sil += (b - a) / denom;
        }
    }
    sil /= len as f64;

    Ok(IndexScores {
        davies_bouldin: db,
        dunn,
        silhouette: sil,
    })
}

/// Score k-means partitions for each candidate count and vote.
///
/// Each index votes for its optimum; the count with most votes wins and
/// ties go to the smaller count.
pub fn select_n(
    x: &Array2<f64>,
    candidates: &[usize],
    seed: u64,
    restarts: usize,
) -> Result<SelectN> {
    let len = x.nrows();
    if candidates.is_empty() {
        return Err(PecError::invalid("no candidate cluster counts"));
    }
    if let Some(&n) = candidates.iter().find(|&&n| n < 2 || n > len) {
        return Err(PecError::invalid(format!(
            "candidate count {n} outside 2..={len}"
        )));
    }
    let first = x.row(0);
    if x.rows().into_iter().all(|r| r == first) {
        return Err(PecError::invalid(
            "all rows are identical; no cluster structure to select",
        ));
    }

    let mut table = BTreeMap::new();
    for &n in candidates {
        let cfg = KMeansConfig {
            restarts,
            ..KMeansConfig::new(n, seed)
        };
        let a = kmeans(x, &cfg)?;
        table.insert(n, validity_indices(x, &a.labels)?);
    }

    // BTreeMap iterates ascending, so strict comparisons keep the smaller n on ties
    let pick = |better: fn(f64, f64) -> bool, key: fn(&IndexScores) -> f64| {
        let mut best: Option<(usize, f64)> = None;
        for (&n, s) in &table {
            let v = key(s);
            if best.is_none_or(|(_, b)| better(v, b)) {
                best = Some((n, v));
            }
        }
        best.expect("non-empty table").0
    };
    let votes = [
        pick(|a, b| a < b, |s| s.davies_bouldin),
        pick(|a, b| a > b, |s| s.dunn),
        pick(|a, b| a > b, |s| s.silhouette),
    ];
    let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
    for v in votes {
        *tally.entry(v).or_default() += 1;
    }
    let top = *tally.values().max().expect("three votes");
    let recommended = *tally.iter().find(|(_, &c)| c == top).expect("max exists").0;
    Ok(SelectN { recommended, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_d(v: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()
    }

    #[test]
    fn hand_values_two_pairs() {
        let s = validity_indices(&one_d(&[0.0, 0.1, 10.0, 10.1]), &[0, 0, 1, 1]).unwrap();
        assert!((s.davies_bouldin - 0.01).abs() < 1e-9, "{s:?}");
        assert!((s.dunn - 99.0).abs() < 1e-9, "{s:?}");
        // per-point: 9.95/10.05, 9.85/9.95, 9.85/9.95, 9.95/10.05
        let mean = (2.0 * 9.95 / 10.05 + 2.0 * 9.85 / 9.95) / 4.0;
        assert!((s.silhouette - mean).abs() < 1e-12);
        assert!((s.silhouette - 0.99).abs() < 1e-5);
    }

    #[test]
    fn zero_scatter_limit() {
        let s = validity_indices(&one_d(&[2.0, 2.0, 8.0, 8.0]), &[5, 5, 1, 1]).unwrap();
        assert_eq!(s.davies_bouldin, 0.0);
        assert_eq!(s.dunn, f64::INFINITY);
        assert_eq!(s.silhouette, 1.0);
    }

    #[test]
    fn singleton_silhouette_is_zero() {
        let s = validity_indices(&one_d(&[0.0, 1.0, 50.0]), &[0, 0, 1]).unwrap();
        let expected = (49.0 / 50.0 + 48.0 / 49.0) / 3.0;
        assert!((s.silhouette - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(validity_indices(&one_d(&[1.0, 2.0]), &[0, 0]).is_err());
        assert!(validity_indices(&one_d(&[3.0, 3.0, 3.0]), &[0, 1, 1]).is_err());
        assert!(select_n(&one_d(&[3.0; 5]), &[2, 3], 0, 3).is_err());
        assert!(select_n(&one_d(&[1.0, 2.0, 3.0]), &[4], 0, 3).is_err());
    }

    #[test]
    fn single_candidate() {
        let r = select_n(&one_d(&[0.0, 0.2, 5.0, 5.1, 9.0]), &[2], 0, 5).unwrap();
        assert_eq!(r.recommended, 2);
        assert_eq!(r.table.len(), 1);
    }

    proptest! {
        #[test]
        fn invariant_to_relabel_translate_scale(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 6..14),
            shift in -50.0f64..50.0,
            scale in 0.1f64..20.0,
        ) {
            let n = pts.len();
            let x = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { pts[i].0 } else { pts[i].1 });
            let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let Ok(base) = validity_indices(&x, &labels) else { return Ok(()); };
            let relabeled: Vec<usize> = labels.iter().map(|l| [7, 2, 4][*l]).collect();
            let moved = x.mapv(|v| v * scale + shift);
            for s in [validity_indices(&x, &relabeled).unwrap(), validity_indices(&moved, &labels).unwrap()] {
                prop_assert!((s.davies_bouldin - base.davies_bouldin).abs() <= 1e-9 * (1.0 + base.davies_bouldin));
                prop_assert!((s.dunn - base.dunn).abs() <= 1e-9 * (1.0 + base.dunn));
                prop_assert!((s.silhouette - base.silhouette).abs() <= 1e-9);
            }
        }
    }
}
