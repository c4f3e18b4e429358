//! Synthetic fixtures: metro-style line networks with two ground truths,
//! planted-partition OD matrices and Gaussian blobs.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{PecError, Result};
use crate::eval::GroundTruth;
use crate::seed;
use crate::srg::{FeatureMatrix, InteractionMatrix, SpaceRelationGraph};

/// One physical station shared by two lines: `(line_a, pos_a)` and
/// `(line_b, pos_b)` become the same node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub line_a: usize,
    pub pos_a: usize,
    pub line_b: usize,
    pub pos_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetroSpec {
    pub lines: usize,
    pub stations_per_line: usize,
    pub transfers: Vec<Transfer>,
    pub seed: u64,
}

impl MetroSpec {
    /// Lines `i` and `i + 1` share one station at seeded random positions.
    pub fn chained(lines: usize, stations_per_line: usize, seed: u64) -> Self {
        Self::random(lines, stations_per_line, 0, seed)
    }

    /// A chain through all lines plus `extra` seeded random transfers between
    /// random line pairs. Candidates that would merge two stations of the
    /// same line, or reuse a station, are skipped.
    pub fn random(lines: usize, stations_per_line: usize, extra: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let s = stations_per_line.max(1);
        let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut transfers = Vec::new();
        let pick_free = |line: usize, rng: &mut seed::Rng, used: &BTreeSet<(usize, usize)>| {
            (0..8 * s)
                .map(|_| rng.random_range(0..s))
                .find(|p| !used.contains(&(line, *p)))
        };
        for a in 0..lines.saturating_sub(1) {
            if let (Some(pa), Some(pb)) = (
                pick_free(a, &mut rng, &used),
                pick_free(a + 1, &mut rng, &used),
            ) {
                used.insert((a, pa));
                used.insert((a + 1, pb));
                transfers.push(Transfer {
                    line_a: a,
                    pos_a: pa,
                    line_b: a + 1,
                    pos_b: pb,
                });
            }
        }
        let mut attempts = 0;
        while transfers.len() < lines.saturating_sub(1) + extra
            && attempts < 100 * (extra + 1)
            && lines >= 2
        {
            attempts += 1;
            let a = rng.random_range(0..lines);
            let b = rng.random_range(0..lines);
            if a == b {
                continue;
            }
            let (Some(pa), Some(pb)) =
                (pick_free(a, &mut rng, &used), pick_free(b, &mut rng, &used))
            else {
                continue;
            };
            used.insert((a, pa));
            used.insert((b, pb));
            transfers.push(Transfer {
                line_a: a,
                pos_a: pa,
                line_b: b,
                pos_b: pb,
            });
        }
        Self {
            lines,
            stations_per_line,
            transfers,
            seed,
        }
    }
}

/// Metro graph with its line-membership and transfer ground truths.
#[derive(Debug, Clone)]
pub struct Metro {
    pub graph: SpaceRelationGraph,
    /// Lowest line index among the lines serving each node.
    pub lines: GroundTruth,
    /// 1 for nodes served by more than one line.
    pub transfers: GroundTruth,
}

fn find(parent: &mut [usize], mut u: usize) -> usize {
    while parent[u] != u {
        parent[u] = parent[parent[u]];
        u = parent[u];
    }
    u
}

/// Build a unit-weight metro network: each line is a path of stations and
/// every transfer merges two stations into one node.
pub fn metro_network(spec: &MetroSpec) -> Result<Metro> {
    let (l, s) = (spec.lines, spec.stations_per_line);
    if l < 2 || s < 3 {
        return Err(PecError::invalid(format!(
            "need at least 2 lines of 3 stations, got {l} x {s}"
        )));
    }
    let station = |line: usize, pos: usize| line * s + pos;
    let mut parent: Vec<usize> = (0..l * s).collect();
    for t in &spec.transfers {
        if t.line_a >= l || t.line_b >= l || t.pos_a >= s || t.pos_b >= s {
            return Err(PecError::invalid(format!("transfer {t:?} is out of range")));
        }
        if t.line_a == t.line_b {
            return Err(PecError::invalid(format!(
                "transfer {t:?} merges stations of one line"
            )));
        }
        let a = find(&mut parent, station(t.line_a, t.pos_a));
        let b = find(&mut parent, station(t.line_b, t.pos_b));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }

    // group stations by root, in station order
    let mut node_of_root = vec![usize::MAX; l * s];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut node_of = vec![0; l * s];
    for st in 0..l * s {
        let r = find(&mut parent, st);
        if node_of_root[r] == usize::MAX {
            node_of_root[r] = members.len();
            members.push(Vec::new());
        }
        node_of[st] = node_of_root[r];
        members[node_of_root[r]].push(st);
    }
    let mut line_label = Vec::with_capacity(members.len());
    let mut transfer_label = Vec::with_capacity(members.len());
    let mut ids = Vec::with_capacity(members.len());
    for m in &members {
        let lines_here: Vec<usize> = m.iter().map(|st| st / s).collect();
        let distinct: BTreeSet<usize> = lines_here.iter().copied().collect();
        if distinct.len() != lines_here.len() {
            return Err(PecError::invalid(format!(
                "transfers merge two stations of line {} into one node",
                lines_here
                    .iter()
                    .find(|x| lines_here.iter().filter(|y| y == x).count() > 1)
                    .unwrap()
                    + 1
            )));
        }
        line_label.push(*distinct.first().expect("non-empty group") as i64);
        transfer_label.push(i64::from(m.len() > 1));
        ids.push(
            m.iter()
                .map(|st| format!("L{}S{}", st / s + 1, st % s + 1))
                .collect::<Vec<_>>()
                .join("/"),
        );
    }
    let present: BTreeSet<i64> = line_label.iter().copied().collect();
    if let Some(lost) = (0..l as i64).find(|x| !present.contains(x)) {
        return Err(PecError::invalid(format!(
            "every station of line {} is merged into a lower line",
            lost + 1
        )));
    }

    let mut pairs = BTreeSet::new();
    for line in 0..l {
        for pos in 0..s - 1 {
            let (u, v) = (node_of[station(line, pos)], node_of[station(line, pos + 1)]);
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let edges: Vec<_> = pairs.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    Ok(Metro {
        graph: SpaceRelationGraph::from_edges(ids, &edges)?,
        lines: GroundTruth::new("line-membership", &line_label)?,
        transfers: GroundTruth::new("transfer-vs-not", &transfer_label)?,
    })
}

/// The evaluation network: 11 lines of 10 stations, a transfer chain and
/// 10 extra transfers.
pub fn metro_fixture(seed: u64) -> Result<Metro> {
    metro_network(&MetroSpec::random(11, 10, 10, seed))
}

/// Poisson OD matrix with `blocks` planted regions. The diagonal is zero.
pub fn planted_od(
    blocks: usize,
    nodes_per_block: usize,
    intra_rate: f64,
    inter_rate: f64,
    seed: u64,
) -> Result<(InteractionMatrix, GroundTruth)> {
    if !(inter_rate >= 0.0 && intra_rate > inter_rate && intra_rate.is_finite()) {
        return Err(PecError::invalid(format!(
            "need intra_rate > inter_rate >= 0, got {intra_rate} and {inter_rate}"
        )));
    }
    if blocks < 1 || nodes_per_block < 1 || blocks * nodes_per_block < 2 {
        return Err(PecError::invalid("planted OD needs at least two nodes"));
    }
    let n = blocks * nodes_per_block;
    let mut rng = seed::rng(seed);
    let intra = Poisson::new(intra_rate).map_err(|e| PecError::invalid(e.to_string()))?;
    let inter = (inter_rate > 0.0)
        .then(|| Poisson::new(inter_rate).map_err(|e| PecError::invalid(e.to_string())))
        .transpose()?;
    let block = |i: usize| i / nodes_per_block;
    let volumes = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else if block(i) == block(j) {
            intra.sample(&mut rng)
        } else {
            inter.as_ref().map_or(0.0, |p| p.sample(&mut rng))
        }
    });
    let ids = (0..n).map(|i| format!("cell{i:04}")).collect();
    let labels: Vec<i64> = (0..n).map(|i| block(i) as i64).collect();
    Ok((
        InteractionMatrix::new(ids, volumes)?,
        GroundTruth::new("blocks", &labels)?,
    ))
}

/// Isotropic Gaussian blobs with centers at pairwise distance `>= separation`.
///
/// Centers sit on scaled coordinate axes when `n_clusters <= dims` (pairwise
/// distance exactly `separation`) and on a line otherwise.
pub fn blobs(
    n_clusters: usize,
    points_per_cluster: usize,
    dims: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<(FeatureMatrix, GroundTruth)> {
    if separation.is_nan()
        || separation <= 0.0
        || spread.is_nan()
        || spread < 0.0
        || dims == 0
        || n_clusters == 0
        || points_per_cluster == 0
    {
        return Err(PecError::invalid(
            "blobs need positive separation, dims, cluster and point counts",
        ));
    }
    let centers: Vec<Vec<f64>> = (0..n_clusters)
        .map(|c| {
            let mut v = vec![0.0; dims];
            if n_clusters <= dims {
                v[c] = separation / std::f64::consts::SQRT_2;
            } else {
                v[0] = c as f64 * separation;
            }
            v
        })
        .collect();
    let mut rng = seed::rng(seed);
    let n = n_clusters * points_per_cluster;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let values = Array2::from_shape_fn((n, dims), |(i, j)| {
        centers[i / points_per_cluster][j] + spread * normal.sample(&mut rng)
    });
    let ids = (0..n).map(|i| format!("p{i:04}")).collect();
    let labels: Vec<i64> = (0..n).map(|i| (i / points_per_cluster) as i64).collect();
    Ok((
        FeatureMatrix::new(ids, values)?,
        GroundTruth::new("blobs", &labels)?,
    ))
}
