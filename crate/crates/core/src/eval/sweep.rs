//! Parameter sweeps: every grid point is run `repeats` times with derived
//! seeds and scored against each ground truth, optionally next to the
//! spectral and hierarchical baselines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{graph_distances, hca, spectral_cluster, Linkage};
use crate::cluster::{kmeans, KMeansConfig};
use crate::embedder::{train, TrainConfig};
use crate::error::{PecError, Result};
use crate::eval::{
    macro_f1, perturb_graph, GroundTruth, NoiseKind, NoiseMode, NoiseSpec, NoiseSupport,
};
use crate::seed::{derive_seed, task_seed};
use crate::srg::SpaceRelationGraph;
use crate::walker::{generate_walks, WalkConfig};

/// One setting of the walk and embedding hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    pub walk_length: usize,
    pub num_walks: usize,
    pub window: usize,
}

impl GridPoint {
    pub fn key(&self) -> String {
        format!(
            "p={} q={} d={} l={} r={} k={}",
            self.p, self.q, self.dim, self.walk_length, self.num_walks, self.window
        )
    }
}

impl Default for GridPoint {
    /// d=5, l=10, r=10, k=5 with p=4, q=1.
    fn default() -> Self {
        Self {
            p: 4.0,
            q: 1.0,
            dim: 5,
            walk_length: 10,
            num_walks: 10,
            window: 5,
        }
    }
}

/// Cartesian product in canonical order (`p` varies slowest, `k` fastest).
pub fn grid(
    ps: &[f64],
    qs: &[f64],
    dims: &[usize],
    lengths: &[usize],
    walks: &[usize],
    windows: &[usize],
) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &p in ps {
        for &q in qs {
            for &dim in dims {
                for &walk_length in lengths {
                    for &num_walks in walks {
                        for &window in windows {
                            out.push(GridPoint {
                                p,
                                q,
                                dim,
                                walk_length,
                                num_walks,
                                window,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: Vec<GridPoint>,
    pub repeats: usize,
    pub seed: u64,
    pub epochs: usize,
    pub initial_lr: f64,
    pub negatives: usize,
    pub kmeans_restarts: usize,
    /// Also score spectral clustering and average-linkage HCA.
    pub baselines: bool,
    /// Perturb the graph anew in every repeat.
    pub noise: Option<NoiseKind>,
    pub noise_mode: NoiseMode,
    pub noise_support: NoiseSupport,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            grid: Vec::new(),
            repeats: 20,
            seed: 0,
            epochs: t.epochs,
            initial_lr: t.initial_lr,
            negatives: t.negatives,
            kmeans_restarts: 10,
            baselines: false,
            noise: None,
            noise_mode: NoiseMode::default(),
            noise_support: NoiseSupport::default(),
        }
    }
}

/// Mean and population standard deviation of one method's Macro-F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub mean: f64,
    pub std: f64,
    pub scores: Vec<f64>,
}

impl MethodScore {
    fn from_scores(scores: Vec<f64>) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub pem: Option<MethodScore>,
    pub sc: Option<MethodScore>,
    pub hca: Option<MethodScore>,
    /// Set when any repeat of this cell failed; the scores are then absent.
    pub error: Option<String>,
}

/// Rows for one ground truth, in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub truth: String,
    pub n_true: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the highest mean PEM Macro-F1; ties go to the earlier row.
    pub fn best_pem(&self) -> Option<&SweepRow> {
        let mut best: Option<(&SweepRow, f64)> = None;
        for row in &self.rows {
            if let Some(s) = &row.pem {
                if best.is_none_or(|(_, m)| s.mean > m) {
                    best = Some((row, s.mean));
                }
            }
        }
        best.map(|(r, _)| r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub graph: String,
    pub tables: Vec<SweepTable>,
}

impl SweepReport {
    pub fn table(&self, truth: &str) -> Option<&SweepTable> {
        self.tables.iter().find(|t| t.truth == truth)
    }

    /// JSON with one object per table, rows keyed by their grid point.
    pub fn to_json(&self) -> serde_json::Value {
        let tables: BTreeMap<&str, serde_json::Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: serde_json::Map<String, serde_json::Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        (
                            r.point.key(),
                            serde_json::to_value(r).expect("row serializes"),
                        )
                    })
                    .collect();
                (
                    t.truth.as_str(),
                    serde_json::json!({ "n_true": t.n_true, "rows": rows }),
                )
            })
            .collect();
        serde_json::json!({
            "config": self.config,
            "graph": self.graph,
            "tables": tables,
        })
    }

    /// Flat CSV, one line per (truth, grid point).
    pub fn to_csv(&self) -> String {
        let fmt = |s: &Option<MethodScore>, f: fn(&MethodScore) -> f64| {
            s.as_ref().map(|s| format!("{}", f(s))).unwrap_or_default()
        };
        let mut out = String::from(
            "truth,p,q,dim,walk_length,num_walks,window,repeats,pem_f1,pem_std,sc_f1,sc_std,hca_f1,hca_std,error\n",
        );
        for t in &self.tables {
            for r in &t.rows {
                let pt = &r.point;
                let err = r
                    .error
                    .as_deref()
                    .unwrap_or("")
                    .replace(['"', ',', '\n'], " ");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    t.truth,
                    pt.p,
                    pt.q,
                    pt.dim,
                    pt.walk_length,
                    pt.num_walks,
                    pt.window,
                    self.config.repeats,
                    fmt(&r.pem, |s| s.mean),
                    fmt(&r.pem, |s| s.std),
                    fmt(&r.sc, |s| s.mean),
                    fmt(&r.sc, |s| s.std),
                    fmt(&r.hca, |s| s.mean),
                    fmt(&r.hca, |s| s.std),
                    err
                );
            }
        }
        out
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text + "\n").map_err(|e| PecError::io(path, e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| PecError::io(path, e))
    }
}

/// Per-stage seed streams of a sweep. Seeds depend on the repeat index but not
/// on the grid point, so cells are compared under common random numbers.
#[derive(Debug, Clone, Copy)]
struct Seeds {
    walks: u64,
    embed: u64,
    cluster: u64,
    noise: u64,
    spectral: u64,
}

impl Seeds {
    fn new(master: u64) -> Self {
        Self {
            walks: derive_seed(master, "walks"),
            embed: derive_seed(master, "embed"),
            cluster: derive_seed(master, "cluster"),
            noise: derive_seed(master, "noise"),
            spectral: derive_seed(master, "spectral"),
        }
    }
}

/// The graph one repeat runs on, with its baseline scores per `(dim, truth)`.
struct RepeatGraph {
    graph: Result<SpaceRelationGraph>,
    sc: BTreeMap<(usize, usize), Result<f64>>,
    hca: BTreeMap<usize, Result<f64>>,
}

fn repeat_graph(
    g: &SpaceRelationGraph,
    truths: &[GroundTruth],
    cfg: &SweepConfig,
    seeds: Seeds,
    rep: usize,
) -> RepeatGraph {
    let graph = match cfg.noise {
        None => Ok(g.clone()),
        Some(kind) => {
            let spec = NoiseSpec {
                kind,
                seed: task_seed(seeds.noise, rep as u64, 0),
            };
            perturb_graph(g, &spec, cfg.noise_mode, cfg.noise_support)
        }
    };
    let mut sc = BTreeMap::new();
    let mut hca_scores = BTreeMap::new();
    if let (true, Ok(graph)) = (cfg.baselines, &graph) {
        let dist = graph_distances(graph);
        let mut dims: Vec<usize> = cfg.grid.iter().map(|p| p.dim).collect();
        dims.sort_unstable();
        dims.dedup();
        for (ti, truth) in truths.iter().enumerate() {
            let h = hca(&dist, Linkage::Average, truth.n_true)
                .and_then(|h| macro_f1(&h.labels, truth))
                .map(|r| r.macro_f1);
            hca_scores.insert(ti, h);
            for &d in &dims {
                let seed = task_seed(seeds.spectral, rep as u64, ti as u64);
                let s = spectral_cluster(graph, d, truth.n_true, seed)
                    .and_then(|s| macro_f1(&s.assignment.labels, truth))
                    .map(|r| r.macro_f1);
                sc.insert((d, ti), s);
            }
        }
    }
    RepeatGraph {
        graph,
        sc,
        hca: hca_scores,
    }
}

/// One PEM run at `point`, scored against every truth.
fn pem_run(
    g: &SpaceRelationGraph,
    truths: &[GroundTruth],
    point: &GridPoint,
    cfg: &SweepConfig,
    seeds: Seeds,
    rep: usize,
) -> Result<Vec<f64>> {
    let walk = WalkConfig {
        p: point.p,
        q: point.q,
        walk_length: point.walk_length,
        num_walks: point.num_walks,
        seed: task_seed(seeds.walks, rep as u64, 0),
    };
    let corpus = generate_walks(g, &walk)?;
    let tc = TrainConfig {
        dim: point.dim,
        window: point.window,
        epochs: cfg.epochs,
        initial_lr: cfg.initial_lr,
        negatives: cfg.negatives,
        seed: task_seed(seeds.embed, rep as u64, 0),
    };
    let emb = train(&corpus, &tc)?.embedding;
    truths
        .iter()
        .enumerate()
        .map(|(ti, truth)| {
            let mut kc = KMeansConfig::new(
                truth.n_true,
                task_seed(seeds.cluster, rep as u64, ti as u64),
            );
            kc.restarts = cfg.kmeans_restarts.max(1);
            let a = kmeans(&emb.vectors, &kc)?;
            Ok(macro_f1(&a.labels, truth)?.macro_f1)
        })
        .collect()
}

fn collect(results: Vec<&Result<f64>>) -> (Option<MethodScore>, Option<String>) {
    let mut scores = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(s) => scores.push(*s),
            Err(e) => return (None, Some(e.to_string())),
        }
    }
    (MethodScore::from_scores(scores), None)
}

/// Run the sweep on the current rayon pool.
///
/// Every `(grid point, repeat)` pair is an independent task; results are
/// reduced in grid order, so the report does not depend on scheduling.
pub fn sweep(
    g: &SpaceRelationGraph,
    truths: &[GroundTruth],
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    if cfg.repeats == 0 {
        return Err(PecError::invalid("sweep needs at least one repeat"));
    }
    for t in truths {
        if t.len() != g.node_count() {
            return Err(PecError::invalid(format!(
                "ground truth `{}` labels {} nodes, graph has {}",
                t.name,
                t.len(),
                g.node_count()
            )));
        }
    }
    if let Some(kind) = cfg.noise {
        NoiseSpec { kind, seed: 0 }.validate()?;
    }
    let seeds = Seeds::new(cfg.seed);
    let reps: Vec<RepeatGraph> = if cfg.grid.is_empty() {
        Vec::new()
    } else {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|rep| repeat_graph(g, truths, cfg, seeds, rep))
            .collect()
    };
    let runs: Vec<Result<Vec<f64>>> = (0..cfg.grid.len() * cfg.repeats)
        .into_par_iter()
        .map(|t| {
            let (cell, rep) = (t / cfg.repeats, t % cfg.repeats);
            match &reps[rep].graph {
                Ok(graph) => pem_run(graph, truths, &cfg.grid[cell], cfg, seeds, rep),
                Err(e) => Err(PecError::invalid(format!("perturbation failed: {e}"))),
            }
        })
        .collect();

    let tables = truths
        .iter()
        .enumerate()
        .map(|(ti, truth)| {
            let rows = cfg
                .grid
                .iter()
                .enumerate()
                .map(|(cell, point)| {
                    let mut errors = Vec::new();
                    let pem_runs: Vec<Result<f64>> = runs
                        [cell * cfg.repeats..(cell + 1) * cfg.repeats]
                        .iter()
                        .map(|r| match r {
                            Ok(v) => Ok(v[ti]),
                            Err(e) => Err(PecError::invalid(e.to_string())),
                        })
                        .collect();
                    let (pem, e) = collect(pem_runs.iter().collect());
                    errors.extend(e);
                    let (sc, hca_score) = if cfg.baselines {
                        let (sc, e1) = collect(
                            reps.iter()
                                .filter_map(|r| r.sc.get(&(point.dim, ti)))
                                .collect(),
                        );
                        let (hc, e2) =
                            collect(reps.iter().filter_map(|r| r.hca.get(&ti)).collect());
                        errors.extend(e1.map(|e| format!("sc: {e}")));
                        errors.extend(e2.map(|e| format!("hca: {e}")));
                        (sc, hc)
                    } else {
                        (None, None)
                    };
                    SweepRow {
                        point: *point,
                        pem,
                        sc,
                        hca: hca_score,
                        error: (!errors.is_empty()).then(|| errors.join("; ")),
                    }
                })
                .collect();
            SweepTable {
                truth: truth.name.clone(),
                n_true: truth.n_true,
                rows,
            }
        })
        .collect();
    Ok(SweepReport {
        config: cfg.clone(),
        graph: g.fingerprint(),
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{metro_network, MetroSpec};

    fn small() -> (SpaceRelationGraph, Vec<GroundTruth>) {
        let m = metro_network(&MetroSpec::chained(3, 5, 1)).unwrap();
        (m.graph, vec![m.lines, m.transfers])
    }

    fn cfg(grid: Vec<GridPoint>) -> SweepConfig {
        SweepConfig {
            grid,
            repeats: 2,
            seed: 9,
            epochs: 2,
            baselines: true,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn grid_order_and_size() {
        let g = grid(
            &[0.25, 0.5, 1.0, 2.0, 4.0],
            &[1.0],
            &[5],
            &[10],
            &[10],
            &[5],
        );
        assert_eq!(g.len(), 5);
        assert_eq!(g[0].p, 0.25);
        assert_eq!(g[4].p, 4.0);
        assert!(grid(&[], &[1.0], &[5], &[10], &[10], &[5]).is_empty());
    }

    #[test]
    fn table_per_truth_with_all_columns() {
        let (g, truths) = small();
        let points = grid(&[0.25, 4.0], &[1.0], &[4], &[8], &[4], &[3]);
        let rep = sweep(&g, &truths, &cfg(points)).unwrap();
        assert_eq!(rep.tables.len(), 2);
        for t in &rep.tables {
            assert_eq!(t.rows.len(), 2);
            for r in &t.rows {
                assert!(r.error.is_none(), "{:?}", r.error);
                for s in [&r.pem, &r.sc, &r.hca] {
                    let s = s.as_ref().unwrap();
                    assert_eq!(s.scores.len(), 2);
                    assert!((0.0..=1.0).contains(&s.mean));
                }
            }
        }
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 1 + 4);
        assert!(csv.starts_with("truth,p,q"));
        let json = rep.to_json();
        assert!(
            json["tables"]["line-membership"]["rows"]["p=0.25 q=1 d=4 l=8 r=4 k=3"].is_object()
        );
    }

    #[test]
    fn deterministic() {
        let (g, truths) = small();
        let c = SweepConfig {
            repeats: 1,
            ..cfg(grid(&[1.0], &[0.5, 2.0], &[4], &[8], &[3], &[2]))
        };
        assert_eq!(
            sweep(&g, &truths, &c).unwrap(),
            sweep(&g, &truths, &c).unwrap()
        );
    }

    #[test]
    fn empty_grid_empty_tables() {
        let (g, truths) = small();
        let rep = sweep(&g, &truths, &cfg(Vec::new())).unwrap();
        assert!(rep.tables.iter().all(|t| t.rows.is_empty()));
    }

    #[test]
    fn failing_cell_recorded() {
        let (g, truths) = small();
        let bad = GridPoint {
            p: -1.0,
            ..GridPoint::default()
        };
        let rep = sweep(
            &g,
            &truths,
            &cfg(vec![
                bad,
                GridPoint {
                    dim: 4,
                    ..GridPoint::default()
                },
            ]),
        )
        .unwrap();
        let rows = &rep.tables[0].rows;
        assert!(rows[0].error.is_some() && rows[0].pem.is_none());
        assert!(rows[1].error.is_none() && rows[1].pem.is_some());
    }

    #[test]
    fn noisy_sweep_runs() {
        let (g, truths) = small();
        let c = SweepConfig {
            noise: Some(NoiseKind::Poisson { lambda: 4.0 }),
            baselines: false,
            ..cfg(vec![GridPoint {
                dim: 4,
                ..GridPoint::default()
            }])
        };
        let rep = sweep(&g, &truths, &c).unwrap();
        assert!(rep.tables[0].rows[0].pem.is_some());
        assert!(rep.tables[0].rows[0].sc.is_none());
    }
}
