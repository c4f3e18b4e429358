use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sq_dist;
use crate::error::{PecError, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub n_clusters: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(n_clusters: usize, seed: u64) -> Self {
        Self {
            n_clusters,
            max_iter: 300,
            tol: 1e-10,
            restarts: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Sum of squared distances from points to their centroid.
    pub inertia: f64,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn row(x: &Array2<f64>, i: usize) -> &[f64] {
    x.row(i).to_slice().expect("matrices are row-major")
}

fn nearest(p: &[f64], centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = sq_dist(p, row(centroids, c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus<R: Rng>(x: &Array2<f64>, n: usize, rng: &mut R) -> Array2<f64> {
    let (len, d) = x.dim();
    let mut centroids = Array2::zeros((n, d));
    let first = rng.random_range(0..len);
    centroids.row_mut(0).assign(&x.row(first));
    let mut dist: Vec<f64> = (0..len)
        .map(|i| sq_dist(row(x, i), row(x, first)))
        .collect();
    for c in 1..n {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = len - 1;
            for (i, &w) in dist.iter().enumerate() {
                if t < w {
                    pick = i;
                    break;
                }
                t -= w;
            }
            pick
        } else {
            rng.random_range(0..len)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(row(x, i), row(x, pick)));
        }
    }
    centroids
}

/// One Lloyd run; returns the assignment and the inertia after every
/// centroid update.
pub(crate) fn lloyd<R: Rng>(
    x: &Array2<f64>,
    n: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> (ClusterAssignment, Vec<f64>) {
    let (len, d) = x.dim();
    let mut centroids = plus_plus(x, n, rng);
    let mut labels: Vec<usize> = (0..len).map(|i| nearest(row(x, i), &centroids).0).collect();
    let mut trace = Vec::new();
    let mut inertia = f64::INFINITY;

    for _ in 0..max_iter.max(1) {
        // Empty clusters take the point farthest from its own centroid.
        let mut sizes = vec![0usize; n];
        labels.iter().for_each(|&l| sizes[l] += 1);
        for c in 0..n {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..len)
                .filter(|&i| sizes[labels[i]] > 1)
                .map(|i| (i, sq_dist(row(x, i), row(&centroids, labels[i]))))
                .fold(None::<(usize, f64)>, |acc, (i, dd)| match acc {
                    Some((_, best)) if best >= dd => acc,
                    _ => Some((i, dd)),
                });
            if let Some((i, _)) = far {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                centroids.row_mut(c).assign(&x.row(i));
            }
        }

        let mut sums = Array2::<f64>::zeros((n, d));
        for (i, &l) in labels.iter().enumerate() {
            let mut s = sums.row_mut(l);
            s += &x.row(i);
        }
        let mut shift = 0.0f64;
        for c in 0..n {
            if sizes[c] == 0 {
                continue;
            }
            let mean = sums.row(c).mapv(|v| v / sizes[c] as f64);
            shift = shift.max(sq_dist(mean.as_slice().unwrap(), row(&centroids, c)).sqrt());
            centroids.row_mut(c).assign(&mean);
        }
        inertia = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| sq_dist(row(x, i), row(&centroids, l)))
            .sum();
        trace.push(inertia);
        if shift < tol {
            break;
        }
        let next: Vec<usize> = (0..len).map(|i| nearest(row(x, i), &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }

    (
        ClusterAssignment {
            labels,
            centroids,
            inertia,
            n_clusters: n,
        },
        trace,
    )
}

/// k-means++ seeded Lloyd iterations, best of `restarts` runs by inertia.
pub fn kmeans(x: &Array2<f64>, cfg: &KMeansConfig) -> Result<ClusterAssignment> {
    let len = x.nrows();
    let n = cfg.n_clusters;
    if n < 1 || n > len {
        return Err(PecError::invalid(format!(
            "cluster count {n} must lie in 1..={len}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PecError::invalid(
            "k-means input contains non-finite values",
        ));
    }
    let x = x.as_standard_layout().into_owned();
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = seed::rng(seed::task_seed(cfg.seed, r as u64, 0));
        let (run, _) = lloyd(&x, n, cfg.max_iter, cfg.tol, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
