//! Biased second-order random walks.
//!
//! From state `(prev, cur)` the walk moves to neighbor `x` of `cur` with
//! probability proportional to `alpha(prev, x) * w(cur, x)` where `alpha` is
//! `1/p` when `x == prev`, `1` when `x` is adjacent to `prev` and `1/q`
//! otherwise. Low `p` keeps the walk local (breadth-first flavor); low `q`
//! pushes it outward (depth-first flavor).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{PecError, Result};
use crate::seed;
use crate::srg::SpaceRelationGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub num_walks: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            num_walks: 10,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) || !(self.q.is_finite() && self.q > 0.0) {
            return Err(PecError::invalid(format!(
                "p and q must be positive, got p={} q={}",
                self.p, self.q
            )));
        }
        if self.walk_length < 2 {
            return Err(PecError::invalid("walk length must be at least 2"));
        }
        if self.num_walks < 1 {
            return Err(PecError::invalid("number of walks must be at least 1"));
        }
        Ok(())
    }
}

/// Walks over node indices plus the provenance needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub node_ids: Vec<String>,
    /// Canonical order: source node index, then walk index.
    pub walks: Vec<Vec<usize>>,
    pub graph_fingerprint: String,
    pub config: WalkConfig,
    /// Source nodes without neighbors; their walks are single-node.
    pub dead_ends: Vec<usize>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

fn bias(g: &SpaceRelationGraph, prev: usize, x: usize, p: f64, q: f64) -> f64 {
    if x == prev {
        1.0 / p
    } else if g.has_edge(prev, x) {
        1.0
    } else {
        1.0 / q
    }
}

/// Unnormalized second-order weights over the neighbors of `cur`, in
/// neighbor-list order.
fn biased_weights(g: &SpaceRelationGraph, prev: usize, cur: usize, p: f64, q: f64) -> Vec<f64> {
    g.neighbors(cur)
        .iter()
        .map(|&(x, w)| bias(g, prev, x, p, q) * w)
        .collect()
}

/// Next-step distribution from state `(prev, cur)` as `(neighbor, probability)`.
pub fn transition_distribution(
    g: &SpaceRelationGraph,
    prev: usize,
    cur: usize,
    p: f64,
    q: f64,
) -> Result<Vec<(usize, f64)>> {
    if !g.has_edge(prev, cur) {
        return Err(PecError::invalid(format!(
            "({:?}, {:?}) is not an edge",
            g.node_id(prev),
            g.node_id(cur)
        )));
    }
    let weights = biased_weights(g, prev, cur, p, q);
    let total: f64 = weights.iter().sum();
    Ok(g.neighbors(cur)
        .iter()
        .zip(weights)
        .map(|(&(x, _), w)| (x, w / total))
        .collect())
}

/// Precomputed alias tables: one first-step table per node and one
/// second-order table per directed edge `(prev, cur)`.
#[derive(Debug, Clone)]
pub struct TransitionSampler {
    first: Vec<Option<AliasTable>>,
    /// `edge[cur][i]` is the table for `prev = neighbors(cur)[i]`.
    edge: Vec<Vec<AliasTable>>,
}

impl TransitionSampler {
    pub fn new(g: &SpaceRelationGraph, p: f64, q: f64) -> Self {
        let n = g.node_count();
        let first = (0..n)
            .into_par_iter()
            .map(|u| {
                let w: Vec<f64> = g.neighbors(u).iter().map(|&(_, w)| w).collect();
                AliasTable::new(&w).ok()
            })
            .collect();
        let edge = (0..n)
            .into_par_iter()
            .map(|cur| {
                g.neighbors(cur)
                    .iter()
                    .map(|&(prev, _)| {
                        AliasTable::new(&biased_weights(g, prev, cur, p, q))
                            .expect("positive edge weights give a valid distribution")
                    })
                    .collect()
            })
            .collect();
        Self { first, edge }
    }

    /// First step from `u`, weight-proportional. `None` for isolated nodes.
    pub fn first_step<R: rand::Rng + ?Sized>(
        &self,
        g: &SpaceRelationGraph,
        u: usize,
        rng: &mut R,
    ) -> Option<usize> {
        self.first[u]
            .as_ref()
            .map(|t| g.neighbors(u)[t.sample(rng)].0)
    }

    pub fn step<R: rand::Rng + ?Sized>(
        &self,
        g: &SpaceRelationGraph,
        prev: usize,
        cur: usize,
        rng: &mut R,
    ) -> usize {
        let nbrs = g.neighbors(cur);
        let slot = nbrs
            .binary_search_by_key(&prev, |&(x, _)| x)
            .expect("walk state must be an edge");
        nbrs[self.edge[cur][slot].sample(rng)].0
    }

    /// Probabilities encoded by the table for state `(prev, cur)`.
    pub fn table_distribution(
        &self,
        g: &SpaceRelationGraph,
        prev: usize,
        cur: usize,
    ) -> Option<Vec<(usize, f64)>> {
        let nbrs = g.neighbors(cur);
        let slot = nbrs.binary_search_by_key(&prev, |&(x, _)| x).ok()?;
        Some(
            nbrs.iter()
                .zip(self.edge[cur][slot].probabilities())
                .map(|(&(x, _), p)| (x, p))
                .collect(),
        )
    }

    fn walk(&self, g: &SpaceRelationGraph, start: usize, length: usize, seed: u64) -> Vec<usize> {
        let mut rng = seed::rng(seed);
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        let Some(next) = self.first_step(g, start, &mut rng) else {
            return walk;
        };
        walk.push(next);
        while walk.len() < length {
            let (prev, cur) = (walk[walk.len() - 2], walk[walk.len() - 1]);
            walk.push(self.step(g, prev, cur, &mut rng));
        }
        walk
    }
}

/// Generate `num_walks` walks per node on the current rayon pool.
///
/// Walk `j` from node `i` uses an RNG seeded from `(seed, i, j)`, so the
/// corpus does not depend on the number of workers.
pub fn generate_walks(g: &SpaceRelationGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    let sampler = TransitionSampler::new(g, cfg.p, cfg.q);
    let n = g.node_count();
    let r = cfg.num_walks;
    let walks = (0..n * r)
        .into_par_iter()
        .map(|t| {
            let (i, j) = (t / r, t % r);
            sampler.walk(
                g,
                i,
                cfg.walk_length,
                seed::task_seed(cfg.seed, i as u64, j as u64),
            )
        })
        .collect();
    Ok(WalkCorpus {
        node_ids: g.node_ids().to_vec(),
        walks,
        graph_fingerprint: g.fingerprint(),
        config: *cfg,
        dead_ends: g.isolated_nodes(),
    })
}

/// [`generate_walks`] on a dedicated pool with `workers` threads.
pub fn generate_walks_with_workers(
    g: &SpaceRelationGraph,
    cfg: &WalkConfig,
    workers: usize,
) -> Result<WalkCorpus> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PecError::invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| generate_walks(g, cfg))
}

const HEADER_TAG: &str = "# pec-walks";

pub fn corpus_to_string(c: &WalkCorpus) -> String {
    let cfg = &c.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{HEADER_TAG} p={} q={} walk_length={} num_walks={} seed={} graph={} nodes={}",
        cfg.p,
        cfg.q,
        cfg.walk_length,
        cfg.num_walks,
        cfg.seed,
        c.graph_fingerprint,
        c.node_ids.len()
    );
    if !c.dead_ends.is_empty() {
        out.push_str("# dead-ends");
        for &u in &c.dead_ends {
            out.push(' ');
            out.push_str(&c.node_ids[u]);
        }
        out.push('\n');
    }
    for walk in &c.walks {
        let line: Vec<&str> = walk.iter().map(|&u| c.node_ids[u].as_str()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_walks(c: &WalkCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus_to_string(c)).map_err(|e| PecError::io(path, e))
}

/// Load a corpus written by [`save_walks`].
///
/// Node order is recovered from walk sources, which appear in node order.
pub fn load_walks(path: impl AsRef<Path>) -> Result<WalkCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PecError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| PecError::parse(path, 1, "empty walk file"))?;
    let rest = header
        .strip_prefix(HEADER_TAG)
        .ok_or_else(|| PecError::parse(path, 1, "missing `# pec-walks` header"))?;
    let mut cfg = WalkConfig::default();
    let mut fingerprint = String::new();
    let mut declared_nodes = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PecError::parse(path, 1, format!("bad header field {kv:?}")))?;
        let bad = || PecError::parse(path, 1, format!("bad value for {k}: {v:?}"));
        match k {
            "p" => cfg.p = v.parse().map_err(|_| bad())?,
            "q" => cfg.q = v.parse().map_err(|_| bad())?,
            "walk_length" => cfg.walk_length = v.parse().map_err(|_| bad())?,
            "num_walks" => cfg.num_walks = v.parse().map_err(|_| bad())?,
            "seed" => cfg.seed = v.parse().map_err(|_| bad())?,
            "graph" => fingerprint = v.to_string(),
            "nodes" => declared_nodes = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => {}
        }
    }

    let mut dead_end_ids = Vec::new();
    let mut raw: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, line) in lines {
        if let Some(ids) = line.strip_prefix("# dead-ends") {
            dead_end_ids.extend(ids.split_whitespace().map(str::to_string));
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        raw.push((i + 1, line.split_whitespace().collect()));
    }
    let mut node_ids: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut intern = |id: &str| {
        *index.entry(id.to_string()).or_insert_with(|| {
            node_ids.push(id.to_string());
            node_ids.len() - 1
        })
    };
    // sources first so node indices follow graph order
    for (_, walk) in &raw {
        intern(walk[0]);
    }
    let mut walks = Vec::with_capacity(raw.len());
    for (line_no, walk) in &raw {
        if walk.len() > cfg.walk_length {
            return Err(PecError::parse(
                path,
                *line_no,
                "walk longer than the declared walk length",
            ));
        }
        walks.push(walk.iter().map(|id| intern(id)).collect::<Vec<usize>>());
    }
    if let Some(n) = declared_nodes {
        if n != node_ids.len() {
            return Err(PecError::parse(
                path,
                1,
                format!(
                    "header declares {n} nodes but walks mention {}",
                    node_ids.len()
                ),
            ));
        }
    }
    let dead_ends = dead_end_ids
        .iter()
        .map(|id| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| PecError::parse(path, 2, format!("unknown node {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WalkCorpus {
        node_ids,
        walks,
        graph_fingerprint: fingerprint,
        config: cfg,
        dead_ends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srg::build_srg_from_adjacency;
    use proptest::prelude::*;

    fn path_abc() -> SpaceRelationGraph {
        build_srg_from_adjacency::<&str>(&[], &[("A", "B"), ("B", "C")]).unwrap()
    }

    fn as_map(d: &[(usize, f64)]) -> Vec<f64> {
        d.iter().map(|&(_, p)| p).collect()
    }

    #[test]
    fn unbiased_path_is_weight_driven() {
        let g = path_abc();
        let d = transition_distribution(&g, 0, 1, 1.0, 1.0).unwrap();
        assert_eq!(d, vec![(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn return_and_outward_bias() {
        let g = path_abc();
        let d = transition_distribution(&g, 0, 1, 2.0, 0.5).unwrap();
        let p = as_map(&d);
        assert!(
            (p[0] - 0.2).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15,
            "{p:?}"
        );
    }

    #[test]
    fn triangle_never_uses_q() {
        let g =
            build_srg_from_adjacency::<&str>(&[], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        let d = transition_distribution(&g, 0, 1, 1.0, 4.0).unwrap();
        assert_eq!(as_map(&d), vec![0.5, 0.5]);
    }

    #[test]
    fn non_edge_state_rejected() {
        let g = path_abc();
        assert!(transition_distribution(&g, 0, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn walk_count_and_lengths() {
        let edges: Vec<(String, String)> = (0..28)
            .map(|i| (format!("s{i}"), format!("s{}", i + 1)))
            .collect();
        let g = build_srg_from_adjacency::<String>(&[], &edges).unwrap();
        assert_eq!(g.node_count(), 29);
        let cfg = WalkConfig {
            walk_length: 10,
            num_walks: 10,
            ..WalkConfig::default()
        };
        let c = generate_walks(&g, &cfg).unwrap();
        assert_eq!(c.len(), 290);
        for (t, w) in c.walks.iter().enumerate() {
            assert_eq!(w[0], t / 10);
            assert_eq!(w.len(), 10);
        }
    }

    #[test]
    fn components_never_mix() {
        let g = build_srg_from_adjacency::<&str>(
            &[],
            &[("a", "b"), ("b", "c"), ("c", "a"), ("x", "y"), ("y", "z")],
        )
        .unwrap();
        let comp = g.components();
        let c = generate_walks(
            &g,
            &WalkConfig {
                p: 0.5,
                q: 2.0,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        for w in &c.walks {
            assert!(w.iter().all(|&u| comp[u] == comp[w[0]]));
        }
    }

    #[test]
    fn isolated_nodes_give_single_node_walks() {
        let g = build_srg_from_adjacency(&["lonely"], &[("a", "b")]).unwrap();
        let c = generate_walks(
            &g,
            &WalkConfig {
                num_walks: 3,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        assert_eq!(c.dead_ends, vec![0]);
        assert!(c.walks[..3].iter().all(|w| w == &vec![0]));
    }

    #[test]
    fn corpus_identical_across_worker_counts() {
        let g = crate::synth::metro_network(&crate::synth::MetroSpec::chained(4, 6, 9))
            .unwrap()
            .graph;
        let cfg = WalkConfig {
            p: 4.0,
            q: 0.25,
            walk_length: 12,
            num_walks: 5,
            seed: 77,
        };
        let one = generate_walks_with_workers(&g, &cfg, 1).unwrap();
        let four = generate_walks_with_workers(&g, &cfg, 4).unwrap();
        assert_eq!(corpus_to_string(&one), corpus_to_string(&four));
    }

    #[test]
    fn corpus_file_round_trip() {
        let g = build_srg_from_adjacency(&["iso"], &[("a", "b"), ("b", "c")]).unwrap();
        let c = generate_walks(
            &g,
            &WalkConfig {
                walk_length: 5,
                num_walks: 2,
                seed: 3,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("walks.txt");
        save_walks(&c, &path).unwrap();
        assert_eq!(load_walks(&path).unwrap(), c);
    }

    #[test]
    fn loaded_node_order_follows_sources() {
        // the walk from x reaches z before y's own walks start
        let g = build_srg_from_adjacency(&["x", "y", "z"], &[("x", "z"), ("z", "y")]).unwrap();
        let c = generate_walks(
            &g,
            &WalkConfig {
                walk_length: 4,
                num_walks: 1,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("walks.txt");
        save_walks(&c, &path).unwrap();
        let back = load_walks(&path).unwrap();
        assert_eq!(back.node_ids, vec!["x", "y", "z"]);
        assert_eq!(back, c);
    }

    #[test]
    fn sampler_tables_match_analytic() {
        let g = build_srg_from_adjacency::<&str>(
            &[],
            &[
                ("a", "b"),
                ("b", "c"),
                ("c", "d"),
                ("d", "a"),
                ("a", "c"),
                ("d", "e"),
            ],
        )
        .unwrap();
        let s = TransitionSampler::new(&g, 0.3, 3.0);
        for (u, v, _) in g.edges() {
            for (prev, cur) in [(u, v), (v, u)] {
                let analytic = transition_distribution(&g, prev, cur, 0.3, 3.0).unwrap();
                let table = s.table_distribution(&g, prev, cur).unwrap();
                for ((x, a), (y, b)) in analytic.iter().zip(&table) {
                    assert_eq!(x, y);
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    fn random_graph() -> impl Strategy<Value = SpaceRelationGraph> {
        proptest::collection::vec((0usize..7, 0usize..7, 0.05f64..5.0), 4..16).prop_filter_map(
            "needs edges",
            |raw| {
                let mut seen = std::collections::BTreeMap::new();
                for (u, v, w) in raw {
                    if u != v {
                        seen.entry((u.min(v), u.max(v))).or_insert(w);
                    }
                }
                if seen.is_empty() {
                    return None;
                }
                let ids = (0..7).map(|i| format!("v{i}")).collect();
                let edges: Vec<_> = seen.into_iter().map(|((u, v), w)| (u, v, w)).collect();
                SpaceRelationGraph::from_edges(ids, &edges).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn distributions_normalized_and_scale_free(g in random_graph(), p in 0.1f64..5.0, q in 0.1f64..5.0, c in 0.1f64..10.0) {
            let scaled_edges: Vec<_> = g.edges().map(|(u, v, w)| (u, v, w * c)).collect();
            let h = SpaceRelationGraph::from_edges(g.node_ids().to_vec(), &scaled_edges).unwrap();
            for (u, v, _) in g.edges() {
                for (prev, cur) in [(u, v), (v, u)] {
                    let d = transition_distribution(&g, prev, cur, p, q).unwrap();
                    let total: f64 = d.iter().map(|x| x.1).sum();
                    prop_assert!((total - 1.0).abs() <= 1e-12);
                    let e = transition_distribution(&h, prev, cur, p, q).unwrap();
                    for (a, b) in d.iter().zip(&e) {
                        prop_assert!((a.1 - b.1).abs() <= 1e-12);
                    }
                    // p = q = 1 is the first-order weighted walk
                    let flat = transition_distribution(&g, prev, cur, 1.0, 1.0).unwrap();
                    let s = g.strength(cur);
                    for ((x, pr), &(y, w)) in flat.iter().zip(g.neighbors(cur)) {
                        prop_assert_eq!(*x, y);
                        prop_assert_eq!(*pr, w / s);
                    }
                }
            }
        }

        #[test]
        fn walks_follow_edges(g in random_graph(), seed in any::<u64>()) {
            let c = generate_walks(&g, &WalkConfig { p: 0.5, q: 2.0, walk_length: 8, num_walks: 2, seed }).unwrap();
            prop_assert_eq!(c.len(), 2 * g.node_count());
            for w in &c.walks {
                for pair in w.windows(2) {
                    prop_assert!(g.has_edge(pair[0], pair[1]));
                }
            }
        }
    }
}
