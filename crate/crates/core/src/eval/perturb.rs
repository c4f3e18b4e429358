use ndarray::Array2;
use rand::distr::Distribution;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{PecError, Result};
use crate::seed;
use crate::srg::SpaceRelationGraph;

/// Noise law with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    /// N(0, sigma^2)
    Gaussian { sigma: f64 },
    /// Poisson(lambda)
    Poisson { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

/// How noise is brought into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Min-max scale the noise matrix into `[0, 1]`, then add it.
    #[default]
    NormalizeNoise,
    /// Add raw noise, then clip the result into `[0, 1]`.
    ClipResult,
}

/// Which entries receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSupport {
    /// Every entry.
    All,
    /// Only nonzero entries. Absent edges stand for infinite distance in a
    /// relation graph, and adding finite noise leaves them absent.
    #[default]
    Existing,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::Gaussian { sigma } => sigma.is_finite() && sigma >= 0.0,
            NoiseKind::Poisson { lambda } => lambda.is_finite() && lambda > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(PecError::invalid(format!(
                "bad noise parameter in {:?}",
                self.kind
            )))
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            NoiseKind::Poisson { lambda } => format!("poisson(lambda={lambda})"),
        }
    }
}

/// Raw noise draws, row-major, deterministic in `spec.seed`.
pub fn noise_matrix(shape: (usize, usize), spec: &NoiseSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    Ok(match spec.kind {
        NoiseKind::Gaussian { sigma } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| PecError::invalid(e.to_string()))?;
            Array2::from_shape_simple_fn(shape, || normal.sample(&mut rng))
        }
        NoiseKind::Poisson { lambda } => {
            let poisson = Poisson::new(lambda).map_err(|e| PecError::invalid(e.to_string()))?;
            Array2::from_shape_simple_fn(shape, || poisson.sample(&mut rng))
        }
    })
}

/// Min-max scale into `[0, 1]`; a constant matrix maps to zeros.
pub fn unit_scale(m: &Array2<f64>) -> Array2<f64> {
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        m.mapv(|v| (v - lo) / (hi - lo))
    } else {
        Array2::zeros(m.dim())
    }
}

/// Add noise to every entry of `m`.
pub fn perturb(m: &Array2<f64>, spec: &NoiseSpec, mode: NoiseMode) -> Result<Array2<f64>> {
    perturb_masked(m, spec, mode, NoiseSupport::All)
}

pub fn perturb_masked(
    m: &Array2<f64>,
    spec: &NoiseSpec,
    mode: NoiseMode,
    support: NoiseSupport,
) -> Result<Array2<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(PecError::invalid(
            "cannot perturb a matrix with non-finite entries",
        ));
    }
    let raw = noise_matrix(m.dim(), spec)?;
    let noise = match mode {
        NoiseMode::NormalizeNoise => unit_scale(&raw),
        NoiseMode::ClipResult => raw,
    };
    let mut out = m.clone();
    out.zip_mut_with(&noise, |v, &z| {
        if support == NoiseSupport::All || *v != 0.0 {
            *v += z;
        }
        if mode == NoiseMode::ClipResult {
            *v = v.clamp(0.0, 1.0);
        }
    });
    Ok(out)
}

/// Perturb a graph's weight matrix, fold it back to undirected by averaging
/// `(R + R^T) / 2` and drop entries that are no longer positive.
pub fn perturb_graph(
    g: &SpaceRelationGraph,
    spec: &NoiseSpec,
    mode: NoiseMode,
    support: NoiseSupport,
) -> Result<SpaceRelationGraph> {
    let r = perturb_masked(&g.to_dense(), spec, mode, support)?;
    let n = g.node_count();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let w = (r[[u, v]] + r[[v, u]]) / 2.0;
            if w > 0.0 {
                edges.push((u, v, w));
            }
        }
    }
    SpaceRelationGraph::from_edges(g.node_ids().to_vec(), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn gauss(sigma: f64, seed: u64) -> NoiseSpec {
        NoiseSpec {
            kind: NoiseKind::Gaussian { sigma },
            seed,
        }
    }

    #[test]
    fn vanishing_sigma_leaves_input() {
        let m = array![[0.0, 0.5], [0.25, 1.0]];
        let out = perturb(&m, &gauss(1e-12, 3), NoiseMode::ClipResult).unwrap();
        for (a, b) in out.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        // exactly zero noise is a constant matrix, which scales to zero
        assert_eq!(
            perturb(&m, &gauss(0.0, 3), NoiseMode::NormalizeNoise).unwrap(),
            m
        );
    }

    #[test]
    fn normalized_noise_in_unit_interval() {
        let z = Array2::<f64>::zeros((6, 6));
        for spec in [
            gauss(4.0, 1),
            NoiseSpec {
                kind: NoiseKind::Poisson { lambda: 16.0 },
                seed: 2,
            },
        ] {
            let out = perturb(&z, &spec, NoiseMode::NormalizeNoise).unwrap();
            assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(out.iter().any(|&v| v == 0.0) && out.iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        let a = perturb(&m, &gauss(2.0, 5), NoiseMode::NormalizeNoise).unwrap();
        let b = perturb(&m, &gauss(2.0, 5), NoiseMode::NormalizeNoise).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a,
            perturb(&m, &gauss(2.0, 6), NoiseMode::NormalizeNoise).unwrap()
        );
    }

    #[test]
    fn existing_support_keeps_topology() {
        let g =
            crate::srg::build_srg_from_adjacency::<&str>(&[], &[("a", "b"), ("b", "c")]).unwrap();
        let spec = NoiseSpec {
            kind: NoiseKind::Poisson { lambda: 4.0 },
            seed: 7,
        };
        let h =
            perturb_graph(&g, &spec, NoiseMode::NormalizeNoise, NoiseSupport::Existing).unwrap();
        assert_eq!(h.edge_count(), 2);
        assert!(h.edges().all(|(_, _, w)| (1.0..=2.0).contains(&w)));
        let dense = perturb_graph(&g, &spec, NoiseMode::NormalizeNoise, NoiseSupport::All).unwrap();
        assert!(dense.edge_count() >= 2);
    }

    #[test]
    fn clipped_negative_entries_drop_edges() {
        let g = crate::srg::build_srg_from_adjacency::<&str>(
            &[],
            &[("a", "b"), ("b", "c"), ("c", "d")],
        )
        .unwrap();
        let h = perturb_graph(
            &g,
            &gauss(50.0, 11),
            NoiseMode::ClipResult,
            NoiseSupport::Existing,
        )
        .unwrap();
        assert!(h.edges().all(|(_, _, w)| w > 0.0 && w <= 1.0));
    }
}
