use ndarray::{Array2, Axis};

use super::symmetric_eigen;
use crate::cluster::{kmeans, ClusterAssignment, KMeansConfig};
use crate::error::{PecError, Result};
use crate::srg::SpaceRelationGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// N x d eigenvector coordinates.
    pub vectors: Array2<f64>,
    /// The d smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralClustering {
    pub assignment: ClusterAssignment,
    pub embedding: SpectralEmbedding,
    /// Isolated nodes. Their rows stay zero after normalization and k-means
    /// puts them with the centroid nearest the origin.
    pub isolated: Vec<usize>,
}

/// `L_sym = I - D^-1/2 W D^-1/2`. Rows and columns of isolated nodes are all
/// zero, so each isolated node adds one zero eigenvalue like any other
/// component.
pub fn normalized_laplacian(g: &SpaceRelationGraph) -> Array2<f64> {
    let n = g.node_count();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| {
            let s = g.strength(u);
            if s > 0.0 {
                1.0 / s.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Array2::zeros((n, n));
    for u in 0..n {
        if inv_sqrt[u] > 0.0 {
            l[[u, u]] = 1.0;
        }
    }
    for (u, v, w) in g.edges() {
        let x = -w * inv_sqrt[u] * inv_sqrt[v];
        l[[u, v]] = x;
        l[[v, u]] = x;
    }
    l
}

/// Eigenvectors of the `d` smallest eigenvalues of `L_sym`.
pub fn spectral_embedding(g: &SpaceRelationGraph, d: usize) -> Result<SpectralEmbedding> {
    let n = g.node_count();
    if d < 1 || d > n {
        return Err(PecError::invalid(format!(
            "spectral dimension {d} must lie in 1..={n}"
        )));
    }
    let (vals, vecs) = symmetric_eigen(&normalized_laplacian(g));
    Ok(SpectralEmbedding {
        vectors: vecs.slice(ndarray::s![.., ..d]).to_owned(),
        eigenvalues: vals[..d].iter().map(|v| v.clamp(0.0, 2.0)).collect(),
    })
}

/// Spectral clustering: embed, normalize rows to unit length, run k-means.
pub fn spectral_cluster(
    g: &SpaceRelationGraph,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<SpectralClustering> {
    if g.edge_count() == 0 {
        return Err(PecError::invalid(
            "spectral clustering needs at least one edge",
        ));
    }
    let embedding = spectral_embedding(g, d)?;
    let mut rows = embedding.vectors.clone();
    for mut r in rows.axis_iter_mut(Axis(0)) {
        let norm = r.dot(&r).sqrt();
        if norm > 1e-12 {
            r.mapv_inplace(|v| v / norm);
        } else {
            r.fill(0.0);
        }
    }
    let assignment = kmeans(&rows, &KMeansConfig::new(n, seed))?;
    Ok(SpectralClustering {
        assignment,
        embedding,
        isolated: g.isolated_nodes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srg::build_srg_from_adjacency;

    #[test]
    fn k3_spectrum() {
        let g =
            build_srg_from_adjacency::<&str>(&[], &[("a", "b"), ("b", "c"), ("c", "a")]).unwrap();
        let e = spectral_embedding(&g, 3).unwrap();
        for (got, want) in e.eigenvalues.iter().zip([0.0, 1.5, 1.5]) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn disjoint_triangles_separate() {
        let g = build_srg_from_adjacency::<&str>(
            &[],
            &[
                ("a", "b"),
                ("b", "c"),
                ("c", "a"),
                ("x", "y"),
                ("y", "z"),
                ("z", "x"),
            ],
        )
        .unwrap();
        let sc = spectral_cluster(&g, 2, 2, 0).unwrap();
        let l = &sc.assignment.labels;
        assert!(l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5] && l[0] != l[3]);
        assert!(sc.embedding.eigenvalues.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn isolated_nodes_count_as_components() {
        let g = build_srg_from_adjacency(&["iso"], &[("a", "b"), ("b", "c")]).unwrap();
        let e = spectral_embedding(&g, 4).unwrap();
        assert_eq!(e.eigenvalues.iter().filter(|v| v.abs() < 1e-9).count(), 2);
        let sc = spectral_cluster(&g, 2, 2, 1).unwrap();
        assert_eq!(sc.isolated, vec![0]);
    }

    #[test]
    fn edgeless_rejected() {
        let g = build_srg_from_adjacency::<&str>(&["a", "b"], &[]).unwrap();
        assert!(spectral_cluster(&g, 1, 1, 0).is_err());
    }
}
