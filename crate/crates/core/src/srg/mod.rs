//! Space relation graphs.
//!
//! A [`SpaceRelationGraph`] is an undirected graph with strictly positive
//! weights over parcel identifiers. It is built either from per-node feature
//! vectors (similarity graph) or from an origin-destination interaction
//! matrix (normalized volume graph).

mod io;

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1};
use sha2::{Digest, Sha256};

use crate::error::{PecError, Result};

pub use io::{
    load_graph, read_features_csv, read_od_csv, save_graph, write_features_csv, write_od_csv,
};

pub(crate) fn validate_ids(ids: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() || id.chars().any(char::is_whitespace) || id.starts_with('#') {
            return Err(PecError::invalid(format!(
                "node identifier {id:?} must be non-empty, contain no whitespace and not start with '#'"
            )));
        }
        if index.insert(id.clone(), i).is_some() {
            return Err(PecError::invalid(format!(
                "duplicate node identifier {id:?}"
            )));
        }
    }
    Ok(index)
}

/// Per-node intrinsic properties, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    node_ids: Vec<String>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(node_ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if node_ids.len() < 2 {
            return Err(PecError::invalid("feature matrix needs at least 2 nodes"));
        }
        if values.nrows() != node_ids.len() {
            return Err(PecError::invalid(format!(
                "{} node ids but {} feature rows",
                node_ids.len(),
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(PecError::invalid(
                "feature matrix needs at least one column",
            ));
        }
        if let Some(((r, c), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(PecError::invalid(format!(
                "non-finite feature at row {r}, column {c}"
            )));
        }
        validate_ids(&node_ids)?;
        Ok(Self { node_ids, values })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// Square matrix of interaction volumes; cell `(i, j)` is the flow `i -> j`.
///
/// The diagonal carries intra-parcel volume and is ignored when building graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    node_ids: Vec<String>,
    volumes: Array2<f64>,
}

impl InteractionMatrix {
    pub fn new(node_ids: Vec<String>, volumes: Array2<f64>) -> Result<Self> {
        let n = node_ids.len();
        if volumes.nrows() != n || volumes.ncols() != n {
            return Err(PecError::invalid(format!(
                "interaction matrix is {}x{} but there are {n} node ids",
                volumes.nrows(),
                volumes.ncols()
            )));
        }
        if let Some(((r, c), v)) = volumes
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(PecError::invalid(format!(
                "interaction volume at ({r}, {c}) must be finite and nonnegative, got {v}"
            )));
        }
        validate_ids(&node_ids)?;
        Ok(Self { node_ids, volumes })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn volumes(&self) -> &Array2<f64> {
        &self.volumes
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// Pairwise similarity used for feature graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// Cosine similarity with negative values clamped to zero.
    Cosine,
}

/// Edge pruning applied after computing all pairwise similarities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sparsify {
    #[default]
    None,
    /// Keep the union of every node's `k` strongest edges.
    Knn(usize),
    /// Keep edges with weight `>= tau`.
    Threshold(f64),
}

/// Undirected, positively weighted graph over node identifiers.
///
/// Neighbor lists are sorted by node index; every undirected edge appears
/// in both endpoint lists with the same weight.
#[derive(Debug, Clone)]
pub struct SpaceRelationGraph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SpaceRelationGraph {
    /// Build from node identifiers and `(u, v, weight)` index triples.
    ///
    /// Duplicate unordered pairs are rejected; use [`build_srg_from_adjacency`]
    /// for deduplicating input.
    pub fn from_edges(node_ids: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let index = validate_ids(&node_ids)?;
        let n = node_ids.len();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(PecError::invalid(format!(
                    "edge ({u}, {v}) references a node out of range"
                )));
            }
            if u == v {
                return Err(PecError::invalid(format!(
                    "self-loop on node {:?}",
                    node_ids[u]
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(PecError::invalid(format!(
                    "edge ({:?}, {:?}) has nonpositive or non-finite weight {w}",
                    node_ids[u], node_ids[v]
                )));
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_by_key(|&(v, _)| v);
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(PecError::invalid(format!(
                    "duplicate edge ({:?}, {:?})",
                    node_ids[u], node_ids[pair[0].0]
                )));
            }
        }
        Ok(Self {
            node_ids,
            index,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Neighbors of `u` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, u: usize) -> f64 {
        self.adjacency[u].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&(v, _)| v > u)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Nodes without any incident edge. They are kept in the graph so that
    /// downstream clustering still covers them.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&u| self.adjacency[u].is_empty())
            .collect()
    }

    /// Dense symmetric weight matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut m = Array2::zeros((n, n));
        for (u, v, w) in self.edges() {
            m[[u, v]] = w;
            m[[v, u]] = w;
        }
        m
    }

    /// Connected components as a per-node component id (ids in order of first node).
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Hex digest of the canonical edge-list serialization.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(io::to_tsv_string(self).as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    /// Same nodes and same weighted edges, compared by identifier.
    pub fn same_labeled_graph(&self, other: &Self) -> bool {
        if self.node_count() != other.node_count() || self.edge_count() != other.edge_count() {
            return false;
        }
        let Some(map) = self
            .node_ids
            .iter()
            .map(|id| other.index_of(id))
            .collect::<Option<Vec<_>>>()
        else {
            return false;
        };
        self.edges()
            .all(|(u, v, w)| other.weight(map[u], map[v]) == Some(w))
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} nodes, {} edges, {} isolated",
            self.node_count(),
            self.edge_count(),
            self.isolated_nodes().len()
        );
        s
    }
}

impl PartialEq for SpaceRelationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.same_labeled_graph(other)
    }
}

fn gaussian(x: ArrayView1<f64>, y: ArrayView1<f64>, sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

fn cosine(x: ArrayView1<f64>, y: ArrayView1<f64>, nx: f64, ny: f64) -> f64 {
    let dot: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    (dot / (nx * ny)).clamp(0.0, 1.0)
}

/// Similarity graph over feature rows.
///
/// Starts from the complete similarity graph; zero similarities never become
/// edges. `sparsify` then prunes it.
pub fn build_srg_from_features(
    features: &FeatureMatrix,
    similarity: Similarity,
    sparsify: Sparsify,
) -> Result<SpaceRelationGraph> {
    let n = features.len();
    let x = features.values();
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    match similarity {
        Similarity::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
            return Err(PecError::invalid(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        Similarity::Cosine => {
            if let Some(i) = norms.iter().position(|&nv| nv == 0.0) {
                return Err(PecError::invalid(format!(
                    "feature row {:?} is all zero; cosine similarity is undefined",
                    features.node_ids()[i]
                )));
            }
        }
        _ => {}
    }
    match sparsify {
        Sparsify::Knn(k) if k == 0 || k >= n => {
            return Err(PecError::invalid(format!(
                "knn k must be in 1..{n}, got {k}"
            )));
        }
        Sparsify::Threshold(t) if !(0.0..=1.0).contains(&t) => {
            return Err(PecError::invalid(format!(
                "threshold must lie in [0, 1], got {t}"
            )));
        }
        _ => {}
    }

    let mut sim = Array2::<f64>::zeros((n, n));
    for u in 0..n {
        for v in (u + 1)..n {
            let w = match similarity {
                Similarity::Gaussian { sigma } => gaussian(x.row(u), x.row(v), sigma),
                Similarity::Cosine => cosine(x.row(u), x.row(v), norms[u], norms[v]),
            };
            sim[[u, v]] = w;
            sim[[v, u]] = w;
        }
    }

    let mut keep = Array2::from_elem((n, n), false);
    match sparsify {
        Sparsify::None => keep.fill(true),
        Sparsify::Threshold(t) => keep.zip_mut_with(&sim, |k, &w| *k = w >= t),
        Sparsify::Knn(k) => {
            for u in 0..n {
                let mut order: Vec<usize> = (0..n).filter(|&v| v != u).collect();
                // strongest first, ties by index
                order.sort_by(|&a, &b| sim[[u, b]].total_cmp(&sim[[u, a]]).then(a.cmp(&b)));
                for &v in order.iter().take(k) {
                    keep[[u, v]] = true;
                    keep[[v, u]] = true;
                }
            }
        }
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let w = sim[[u, v]];
            if keep[[u, v]] && w > 0.0 {
                edges.push((u, v, w));
            }
        }
    }
    SpaceRelationGraph::from_edges(features.node_ids().to_vec(), &edges)
}

/// Interaction graph: symmetrize by averaging `(A + A^T) / 2`, then divide by
/// the global maximum so the strongest edge has weight 1.
pub fn build_srg_from_interactions(od: &InteractionMatrix) -> Result<SpaceRelationGraph> {
    let a = od.volumes();
    let n = od.len();
    let mut max = 0.0f64;
    for u in 0..n {
        for v in (u + 1)..n {
            max = max.max((a[[u, v]] + a[[v, u]]) / 2.0);
        }
    }
    if max <= 0.0 {
        return Err(PecError::invalid(
            "interaction matrix has no off-diagonal volume",
        ));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let s = (a[[u, v]] + a[[v, u]]) / 2.0;
            if s > 0.0 {
                edges.push((u, v, s / max));
            }
        }
    }
    SpaceRelationGraph::from_edges(od.node_ids().to_vec(), &edges)
}

/// Unit-weight graph from an identifier edge list.
///
/// `declared` fixes the node order and may list nodes that have no edges;
/// identifiers first seen in `edges` are appended in order of appearance.
/// Repeated pairs in either orientation are stored once.
pub fn build_srg_from_adjacency<S: AsRef<str>>(
    declared: &[S],
    edges: &[(S, S)],
) -> Result<SpaceRelationGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |id: &str, ids: &mut Vec<String>| -> usize {
        *index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        })
    };
    for d in declared {
        intern(d.as_ref(), &mut ids);
    }
    let mut pairs = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        if a == b {
            return Err(PecError::invalid(format!("self-loop on node {a:?}")));
        }
        let u = intern(a, &mut ids);
        let v = intern(b, &mut ids);
        pairs.push((u.min(v), u.max(v)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let edges: Vec<_> = pairs.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    SpaceRelationGraph::from_edges(ids, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    #[test]
    fn gaussian_identical_rows_weight_one() {
        let f = FeatureMatrix::new(ids(2), array![[0.3, -1.0], [0.3, -1.0]]).unwrap();
        for sigma in [0.1, 1.0, 7.0] {
            let g = build_srg_from_features(&f, Similarity::Gaussian { sigma }, Sparsify::None)
                .unwrap();
            assert_eq!(g.weight(0, 1), Some(1.0));
        }
    }

    #[test]
    fn gaussian_unit_distance_closed_form() {
        let f = FeatureMatrix::new(ids(2), array![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let g = build_srg_from_features(&f, Similarity::Gaussian { sigma: 1.0 }, Sparsify::None)
            .unwrap();
        assert_abs_diff_eq!(
            g.weight(0, 1).unwrap(),
            0.606_530_659_712_633_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_orthogonal_no_edge_and_negative_clamped() {
        let f = FeatureMatrix::new(ids(3), array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let g = build_srg_from_features(&f, Similarity::Cosine, Sparsify::None).unwrap();
        assert!(!g.has_edge(0, 1));
        assert!(!g.has_edge(0, 2));
        assert!(!g.has_edge(1, 2));
        assert_eq!(g.isolated_nodes(), vec![0, 1, 2]);
    }

    #[test]
    fn cosine_zero_row_rejected() {
        let f = FeatureMatrix::new(ids(2), array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(build_srg_from_features(&f, Similarity::Cosine, Sparsify::None).is_err());
    }

    #[test]
    fn non_finite_features_rejected() {
        assert!(FeatureMatrix::new(ids(2), array![[f64::NAN], [1.0]]).is_err());
        assert!(FeatureMatrix::new(ids(2), array![[f64::INFINITY], [1.0]]).is_err());
        assert!(FeatureMatrix::new(ids(1), array![[1.0]]).is_err());
    }

    #[test]
    fn knn_keeps_union_of_strongest() {
        // 1-D points 0, 1, 3, 10
        let f = FeatureMatrix::new(ids(4), array![[0.0], [1.0], [3.0], [10.0]]).unwrap();
        let g = build_srg_from_features(&f, Similarity::Gaussian { sigma: 5.0 }, Sparsify::Knn(1))
            .unwrap();
        // nearest: 0->1, 1->0, 2->1, 3->2
        let edges: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3)]);
        assert!(build_srg_from_features(&f, Similarity::Cosine, Sparsify::Knn(4)).is_err());
    }

    #[test]
    fn threshold_prunes_weak_edges() {
        let f = FeatureMatrix::new(ids(3), array![[0.0], [0.1], [5.0]]).unwrap();
        let g = build_srg_from_features(
            &f,
            Similarity::Gaussian { sigma: 1.0 },
            Sparsify::Threshold(0.5),
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.isolated_nodes(), vec![2]);
    }

    #[test]
    fn interactions_two_nodes() {
        let od = InteractionMatrix::new(ids(2), array![[0.0, 4.0], [2.0, 0.0]]).unwrap();
        let g = build_srg_from_interactions(&od).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn interactions_three_nodes() {
        let od = InteractionMatrix::new(
            ids(3),
            array![[0.0, 2.0, 0.0], [2.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
        )
        .unwrap();
        let g = build_srg_from_interactions(&od).unwrap();
        assert_eq!(
            g.edges().collect::<Vec<_>>(),
            vec![(0, 1, 1.0), (1, 2, 0.5)]
        );
    }

    #[test]
    fn interactions_uniform_symmetric() {
        let od = InteractionMatrix::new(
            ids(3),
            array![[9.0, 3.0, 3.0], [3.0, 0.0, 3.0], [3.0, 3.0, 0.0]],
        )
        .unwrap();
        let g = build_srg_from_interactions(&od).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|(_, _, w)| w == 1.0));
    }

    #[test]
    fn interactions_reject_zero_and_negative() {
        let zero = InteractionMatrix::new(ids(2), array![[5.0, 0.0], [0.0, 5.0]]).unwrap();
        assert!(build_srg_from_interactions(&zero).is_err());
        assert!(InteractionMatrix::new(ids(2), array![[0.0, -1.0], [0.0, 0.0]]).is_err());
        assert!(InteractionMatrix::new(ids(2), array![[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn adjacency_path_dedup_and_isolated() {
        let g = build_srg_from_adjacency::<&str>(&[], &[("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(g.node_ids(), ["A", "B", "C"]);
        assert!(g.edges().all(|(_, _, w)| w == 1.0));
        assert_eq!(g.edge_count(), 2);

        let g = build_srg_from_adjacency(&["A", "B"], &[]).unwrap();
        assert_eq!(g.isolated_nodes(), vec![0, 1]);

        let g = build_srg_from_adjacency::<&str>(&[], &[("A", "B"), ("B", "A")]).unwrap();
        assert_eq!(g.edge_count(), 1);

        assert!(build_srg_from_adjacency::<&str>(&[], &[("A", "A")]).is_err());
    }

    #[test]
    fn rejects_bad_identifiers() {
        assert!(build_srg_from_adjacency::<&str>(&[], &[("A B", "C")]).is_err());
        assert!(SpaceRelationGraph::from_edges(vec!["a".into(), "a".into()], &[]).is_err());
    }

    proptest! {
        #[test]
        fn gaussian_monotone_in_distance(d1 in 0.0f64..5.0, extra in 1e-3f64..5.0, sigma in 0.2f64..4.0) {
            let f = FeatureMatrix::new(ids(3), array![[0.0], [d1], [-(d1 + extra)]]).unwrap();
            let g = build_srg_from_features(&f, Similarity::Gaussian { sigma }, Sparsify::None).unwrap();
            let near = g.weight(0, 1).unwrap_or(0.0);
            let far = g.weight(0, 2).unwrap_or(0.0);
            prop_assert!(near > far || far == 0.0);
        }

        #[test]
        fn interaction_graph_scale_invariant(
            vals in proptest::collection::vec(0u32..20, 16),
            c in 0.01f64..100.0,
        ) {
            let a = Array2::from_shape_vec((4, 4), vals.iter().map(|&v| v as f64).collect()).unwrap();
            let od = InteractionMatrix::new(ids(4), a.clone()).unwrap();
            let scaled = InteractionMatrix::new(ids(4), a * c).unwrap();
            match (build_srg_from_interactions(&od), build_srg_from_interactions(&scaled)) {
                (Ok(g1), Ok(g2)) => {
                    prop_assert_eq!(g1.edge_count(), g2.edge_count());
                    for ((u1, v1, w1), (u2, v2, w2)) in g1.edges().zip(g2.edges()) {
                        prop_assert_eq!((u1, v1), (u2, v2));
                        prop_assert!((w1 - w2).abs() < 1e-12);
                        prop_assert!(w1 > 0.0 && w1 <= 1.0);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "scaling changed validity"),
            }
        }
    }
}
