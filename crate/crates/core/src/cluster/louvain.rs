use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{PecError, Result};
use crate::seed;
use crate::srg::SpaceRelationGraph;

/// Seeds tried by [`louvain`]; the highest-modularity run wins.
pub const LOUVAIN_SEEDS: u64 = 5;

const MOVE_EPS: f64 = 1e-12;
const LEVEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communities {
    /// Contiguous labels, numbered by first member node.
    pub labels: Vec<usize>,
    pub count: usize,
    pub modularity: f64,
}

/// Weighted modularity `sum_c (e_c / m - (d_c / 2m)^2)`.
pub fn modularity(g: &SpaceRelationGraph, labels: &[usize]) -> f64 {
    let m = g.total_weight();
    if m == 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for (u, v, w) in g.edges() {
        if labels[u] == labels[v] {
            internal[labels[u]] += w;
        }
        degree[labels[u]] += w;
        degree[labels[v]] += w;
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(e, d)| e / m - (d / (2.0 * m)).powi(2))
        .sum()
}

/// Aggregated graph: neighbor lists exclude self-loops, which are kept apart.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[u]
    }

    fn modularity(&self, two_m: f64) -> f64 {
        (0..self.adj.len())
            .map(|u| 2.0 * self.self_loops[u] / two_m - (self.degree(u) / two_m).powi(2))
            .sum()
    }

    /// Local moving phase; returns community per node and whether anything moved.
    fn move_nodes(&self, two_m: f64, order: &[usize]) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let k: Vec<f64> = (0..n).map(|u| self.degree(u)).collect();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = k.clone();
        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;

        loop {
            let mut moved = false;
            for &u in order {
                let cu = comm[u];
                for &(v, w) in &self.adj[u] {
                    if link[comm[v]] == 0.0 {
                        touched.push(comm[v]);
                    }
                    link[comm[v]] += w;
                }
                tot[cu] -= k[u];
                // gain of joining c, up to a common positive factor
                let gain = |c: usize, l: f64| l - tot[c] * k[u] / two_m;
                let mut best = (cu, gain(cu, link[cu]));
                for &c in &touched {
                    let g = gain(c, link[c]);
                    if g > best.1 + MOVE_EPS {
                        best = (c, g);
                    }
                }
                tot[best.0] += k[u];
                if best.0 != cu {
                    comm[u] = best.0;
                    moved = true;
                    moved_any = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                link[cu] = 0.0;
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        (comm, moved_any)
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let mut self_loops = vec![0.0; count];
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); count];
        for (u, list) in self.adj.iter().enumerate() {
            let cu = comm[u];
            self_loops[cu] += self.self_loops[u];
            for &(v, w) in list {
                let cv = comm[v];
                if cu == cv {
                    // each internal edge is seen from both ends
                    self_loops[cu] += w / 2.0;
                } else {
                    *maps[cu].entry(cv).or_default() += w;
                }
            }
        }
        Level {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
        }
    }
}

fn compact(labels: &mut [usize]) -> usize {
    let mut remap = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = remap.len();
        *l = *remap.entry(*l).or_insert(next);
    }
    remap.len()
}

/// Louvain with node visiting order shuffled by `seed`.
pub fn louvain_seeded(g: &SpaceRelationGraph, seed: u64) -> Result<Communities> {
    if g.edge_count() == 0 {
        return Err(PecError::invalid(
            "louvain needs a graph with at least one edge",
        ));
    }
    let two_m = 2.0 * g.total_weight();
    let mut level = Level {
        adj: (0..g.node_count())
            .map(|u| g.neighbors(u).to_vec())
            .collect(),
        self_loops: vec![0.0; g.node_count()],
    };
    let mut labels: Vec<usize> = (0..g.node_count()).collect();
    let mut rng = seed::rng(seed);
    let mut q = level.modularity(two_m);

    loop {
        let mut order: Vec<usize> = (0..level.adj.len()).collect();
        order.shuffle(&mut rng);
        let (mut comm, moved) = level.move_nodes(two_m, &order);
        if !moved {
            break;
        }
        let count = compact(&mut comm);
        let next = level.aggregate(&comm, count);
        let next_q = next.modularity(two_m);
        if next_q - q <= LEVEL_EPS {
            break;
        }
        for l in labels.iter_mut() {
            *l = comm[*l];
        }
        level = next;
        q = next_q;
    }

    let count = compact(&mut labels);
    Ok(Communities {
        labels,
        count,
        modularity: q,
    })
}

/// Best of [`LOUVAIN_SEEDS`] seeded runs by modularity.
pub fn louvain(g: &SpaceRelationGraph, seed: u64) -> Result<Communities> {
    let mut best: Option<Communities> = None;
    for s in 0..LOUVAIN_SEEDS {
        let run = louvain_seeded(g, seed::task_seed(seed, s, 0))?;
        if best
            .as_ref()
            .is_none_or(|b| run.modularity > b.modularity + LEVEL_EPS)
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one seed"))
}
