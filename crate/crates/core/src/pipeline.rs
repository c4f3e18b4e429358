//! End-to-end runs: graph, walks, embeddings, clusters and reports written
//! into one artifact directory with a manifest of seeds and content hashes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::cluster::{kmeans, louvain, save_labels, select_n, ClusterAssignment, KMeansConfig};
use crate::embedder::{save_embeddings, train, TrainConfig};
use crate::error::{PecError, Result, StageExt};
use crate::eval::{
    interaction_frequency_report, macro_f1, sweep, GridPoint, GroundTruth, NoiseKind, NoiseMode,
    NoiseSupport, SweepConfig,
};
use crate::seed::derive_seed;
use crate::srg::{
    build_srg_from_adjacency, build_srg_from_features, build_srg_from_interactions, load_graph,
    read_features_csv, read_od_csv, save_graph, InteractionMatrix, Similarity, SpaceRelationGraph,
    Sparsify,
};
use crate::walker::{generate_walks, save_walks, WalkConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    /// Node feature CSV, turned into a similarity graph.
    Features(PathBuf),
    /// Square OD CSV, turned into a normalized volume graph.
    Od(PathBuf),
    /// Graph TSV (`u v w`), or a two-column adjacency list read as unit weights.
    Edges(PathBuf),
}

impl Input {
    pub fn path(&self) -> &Path {
        match self {
            Input::Features(p) | Input::Od(p) | Input::Edges(p) => p,
        }
    }
}

/// How the number of clusters is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ClusterChoice {
    Fixed(usize),
    /// Majority vote of the validity indices over the candidate counts.
    Indices(Vec<usize>),
    /// Community count of the best of several Louvain runs on the graph.
    Louvain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<Input>,
    pub similarity: Similarity,
    pub sparsify: Sparsify,
    /// `seed` is ignored; the run derives it from the master seed.
    pub walk: WalkConfig,
    /// `seed` is ignored; the run derives it from the master seed.
    pub train: TrainConfig,
    pub cluster: ClusterChoice,
    pub kmeans_restarts: usize,
    pub truths: Vec<PathBuf>,
    /// Repeated runs for evaluation; 1 scores only the main run.
    pub repeats: usize,
    pub noise: Vec<NoiseKind>,
    pub noise_mode: NoiseMode,
    pub noise_support: NoiseSupport,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Row width of the lattice used to lay nodes out in `clusters.geojson`.
    pub lattice_width: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            similarity: Similarity::Gaussian { sigma: 1.0 },
            sparsify: Sparsify::None,
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            cluster: ClusterChoice::Indices((2..=10).collect()),
            kmeans_restarts: 10,
            truths: Vec::new(),
            repeats: 1,
            noise: Vec::new(),
            noise_mode: NoiseMode::default(),
            noise_support: NoiseSupport::default(),
            out_dir: PathBuf::from("pec-out"),
            seed: 0,
            workers: None,
            lattice_width: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| PecError::invalid(format!("bad value {value:?} for `{key}`")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

/// `"2..8"` (inclusive) or `"2,3,5"`.
fn count_range(key: &str, value: &str) -> Result<Vec<usize>> {
    match value.split_once("..") {
        Some((a, b)) => Ok((num::<usize>(key, a.trim())?
            ..=num::<usize>(key, b.trim().trim_start_matches('='))?)
            .collect()),
        None => list(key, value),
    }
}

impl PipelineConfig {
    /// Set one option. Keys match the command-line flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "features" => self.input = Some(Input::Features(value.into())),
            "od" => self.input = Some(Input::Od(value.into())),
            "edges" => self.input = Some(Input::Edges(value.into())),
            "similarity" => {
                self.similarity = match value {
                    "gaussian" => Similarity::Gaussian {
                        sigma: self.bandwidth(),
                    },
                    "cosine" => Similarity::Cosine,
                    _ => return Err(PecError::invalid(format!("unknown similarity {value:?}"))),
                }
            }
            "bandwidth" => {
                let sigma = num(key, value)?;
                if let Similarity::Gaussian { .. } = self.similarity {
                    self.similarity = Similarity::Gaussian { sigma };
                } else {
                    return Err(PecError::invalid(
                        "`bandwidth` applies only to gaussian similarity",
                    ));
                }
            }
            "knn" => self.sparsify = Sparsify::Knn(num(key, value)?),
            "threshold" => self.sparsify = Sparsify::Threshold(num(key, value)?),
            "p" => self.walk.p = num(key, value)?,
            "q" => self.walk.q = num(key, value)?,
            "walk-length" => self.walk.walk_length = num(key, value)?,
            "num-walks" => self.walk.num_walks = num(key, value)?,
            "dim" => self.train.dim = num(key, value)?,
            "window" => self.train.window = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "lr" => self.train.initial_lr = num(key, value)?,
            "negatives" => self.train.negatives = num(key, value)?,
            "n-clusters" => {
                self.cluster = match value {
                    "louvain" => ClusterChoice::Louvain,
                    "auto" => ClusterChoice::Indices((2..=10).collect()),
                    v => ClusterChoice::Fixed(num(key, v)?),
                }
            }
            "n-range" => self.cluster = ClusterChoice::Indices(count_range(key, value)?),
            "restarts" => self.kmeans_restarts = num(key, value)?,
            "truth" => self
                .truths
                .extend(value.split(',').map(|v| PathBuf::from(v.trim()))),
            "repeats" => self.repeats = num(key, value)?,
            "sigma" => {
                let s: Vec<f64> = list(key, value)?;
                self.noise
                    .extend(s.into_iter().map(|sigma| NoiseKind::Gaussian { sigma }));
            }
            "lambda" => {
                let l: Vec<f64> = list(key, value)?;
                self.noise
                    .extend(l.into_iter().map(|lambda| NoiseKind::Poisson { lambda }));
            }
            "noise-mode" => {
                self.noise_mode = match value {
                    "normalize-noise" => NoiseMode::NormalizeNoise,
                    "clip-result" => NoiseMode::ClipResult,
                    _ => return Err(PecError::invalid(format!("unknown noise mode {value:?}"))),
                }
            }
            "noise-support" => {
                self.noise_support = match value {
                    "existing" => NoiseSupport::Existing,
                    "all" => NoiseSupport::All,
                    _ => {
                        return Err(PecError::invalid(format!(
                            "unknown noise support {value:?}"
                        )))
                    }
                }
            }
            "out" => self.out_dir = value.into(),
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = Some(num(key, value)?),
            "lattice-width" => self.lattice_width = Some(num(key, value)?),
            _ => return Err(PecError::invalid(format!("unknown option `{key}`"))),
        }
        Ok(())
    }

    fn bandwidth(&self) -> f64 {
        match self.similarity {
            Similarity::Gaussian { sigma } => sigma,
            Similarity::Cosine => 1.0,
        }
    }

    /// Apply a `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                PecError::parse(path, i + 1, format!("expected `key = value`, got {line:?}"))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| PecError::parse(path, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PecError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Every option as canonical key/value pairs, readable by [`Self::apply_text`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(input) = &self.input {
            let k = match input {
                Input::Features(_) => "features",
                Input::Od(_) => "od",
                Input::Edges(_) => "edges",
            };
            push(k, input.path().display().to_string());
        }
        match self.similarity {
            Similarity::Gaussian { sigma } => {
                push("similarity", "gaussian".into());
                push("bandwidth", sigma.to_string());
            }
            Similarity::Cosine => push("similarity", "cosine".into()),
        }
        match self.sparsify {
            Sparsify::None => {}
            Sparsify::Knn(k) => push("knn", k.to_string()),
            Sparsify::Threshold(t) => push("threshold", t.to_string()),
        }
        push("p", self.walk.p.to_string());
        push("q", self.walk.q.to_string());
        push("walk-length", self.walk.walk_length.to_string());
        push("num-walks", self.walk.num_walks.to_string());
        push("dim", self.train.dim.to_string());
        push("window", self.train.window.to_string());
        push("epochs", self.train.epochs.to_string());
        push("lr", self.train.initial_lr.to_string());
        push("negatives", self.train.negatives.to_string());
        match &self.cluster {
            ClusterChoice::Fixed(n) => push("n-clusters", n.to_string()),
            ClusterChoice::Louvain => push("n-clusters", "louvain".into()),
            ClusterChoice::Indices(c) => push(
                "n-range",
                c.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            ),
        }
        push("restarts", self.kmeans_restarts.to_string());
        for t in &self.truths {
            push("truth", t.display().to_string());
        }
        push("repeats", self.repeats.to_string());
        for n in &self.noise {
            match n {
                NoiseKind::Gaussian { sigma } => push("sigma", sigma.to_string()),
                NoiseKind::Poisson { lambda } => push("lambda", lambda.to_string()),
            }
        }
        push(
            "noise-mode",
            match self.noise_mode {
                NoiseMode::NormalizeNoise => "normalize-noise",
                NoiseMode::ClipResult => "clip-result",
            }
            .into(),
        );
        push(
            "noise-support",
            match self.noise_support {
                NoiseSupport::Existing => "existing",
                NoiseSupport::All => "all",
            }
            .into(),
        );
        push("out", self.out_dir.display().to_string());
        push("seed", self.seed.to_string());
        if let Some(w) = self.workers {
            push("workers", w.to_string());
        }
        if let Some(w) = self.lattice_width {
            push("lattice-width", w.to_string());
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| PecError::invalid("no input given (features, od or edges)"))?;
        for p in std::iter::once(input.path()).chain(self.truths.iter().map(PathBuf::as_path)) {
            if !p.is_file() {
                return Err(PecError::invalid(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        self.walk.validate()?;
        self.train.validate()?;
        match &self.cluster {
            ClusterChoice::Fixed(n) if *n < 2 => {
                return Err(PecError::invalid("need at least 2 clusters"))
            }
            ClusterChoice::Indices(c) if c.is_empty() => {
                return Err(PecError::invalid("empty n-range"))
            }
            _ => {}
        }
        if self.repeats == 0 {
            return Err(PecError::invalid("repeats must be at least 1"));
        }
        for &kind in &self.noise {
            crate::eval::NoiseSpec { kind, seed: 0 }.validate()?;
        }
        Ok(())
    }
}

/// Seeds of each stage, derived from the master seed by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct StageSeeds {
    pub walks: u64,
    pub embed: u64,
    pub cluster: u64,
    pub evaluate: u64,
}

impl StageSeeds {
    pub fn new(master: u64) -> Self {
        Self {
            walks: derive_seed(master, "walks"),
            embed: derive_seed(master, "embed"),
            cluster: derive_seed(master, "cluster"),
            evaluate: derive_seed(master, "evaluate"),
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub out_dir: PathBuf,
    pub graph: SpaceRelationGraph,
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// Macro-F1 of the main run, per ground truth name.
    pub scores: BTreeMap<String, f64>,
    pub seeds: StageSeeds,
    /// Output file names (relative to `out_dir`) with their SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| PecError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Load the input and build its graph; OD inputs also return the matrix.
pub fn load_input(
    input: &Input,
    similarity: Similarity,
    sparsify: Sparsify,
) -> Result<(SpaceRelationGraph, Option<InteractionMatrix>)> {
    match input {
        Input::Features(p) => {
            let f = read_features_csv(p)?;
            Ok((build_srg_from_features(&f, similarity, sparsify)?, None))
        }
        Input::Od(p) => {
            let od = read_od_csv(p)?;
            Ok((build_srg_from_interactions(&od)?, Some(od)))
        }
        Input::Edges(p) => load_edges(p),
    }
}

/// Graph TSV, or a plain two-column adjacency list read as unit weights.
fn load_edges(path: &Path) -> Result<(SpaceRelationGraph, Option<InteractionMatrix>)> {
    let text = fs::read_to_string(path).map_err(|e| PecError::io(path, e))?;
    let two_columns = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .all(|l| l.split_whitespace().count() == 2);
    if !two_columns || text.starts_with("#nodes") {
        return Ok((load_graph(path)?, None));
    }
    let mut nodes: Vec<&str> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let mut it = line.split_whitespace();
        let (a, b) = (
            it.next().expect("two fields"),
            it.next().expect("two fields"),
        );
        for x in [a, b] {
            if seen.insert(x) {
                nodes.push(x);
            }
        }
        edges.push((a, b));
    }
    Ok((build_srg_from_adjacency(&nodes, &edges)?, None))
}

fn lattice_geojson(ids: &[String], labels: &[usize], width: usize) -> serde_json::Value {
    const CELL: f64 = 500.0;
    let features: Vec<_> = ids
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (id, &label))| {
            let (x, y) = ((i % width) as f64 * CELL, (i / width) as f64 * CELL);
            json!({
                "type": "Feature",
                "properties": { "node_id": id, "cluster": label },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x, y], [x + CELL, y], [x + CELL, y + CELL], [x, y + CELL], [x, y]]],
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

struct Writer {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl Writer {
    fn record(&mut self, name: &str) -> Result<()> {
        let h = file_sha256(self.dir.join(name))?;
        self.outputs.insert(name.to_string(), h);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| PecError::io(&path, e))?;
        self.record(name)
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

/// Cluster an embedding as configured; returns the assignment and a JSON
/// record of how the count was chosen. The graph is needed only for
/// [`ClusterChoice::Louvain`].
pub fn cluster_embedding(
    x: &ndarray::Array2<f64>,
    graph: Option<&SpaceRelationGraph>,
    choice: &ClusterChoice,
    restarts: usize,
    seed: u64,
) -> Result<(ClusterAssignment, serde_json::Value)> {
    let (n, record) = match choice {
        ClusterChoice::Fixed(n) => (*n, json!({ "method": "fixed", "n": n })),
        ClusterChoice::Indices(c) => {
            let candidates: Vec<usize> = c.iter().copied().filter(|&n| n <= x.nrows()).collect();
            let s = select_n(x, &candidates, seed, restarts)?;
            (
                s.recommended,
                json!({ "method": "indices", "n": s.recommended, "table": s.table }),
            )
        }
        ClusterChoice::Louvain => {
            let graph =
                graph.ok_or_else(|| PecError::invalid("Louvain cluster count needs the graph"))?;
            let c = louvain(graph, seed)?;
            (
                c.count.max(2),
                json!({ "method": "louvain", "n": c.count.max(2), "communities": c.count, "modularity": c.modularity }),
            )
        }
    };
    let cfg = KMeansConfig {
        restarts,
        ..KMeansConfig::new(n, seed)
    };
    Ok((kmeans(x, &cfg)?, record))
}

/// Run every stage and write the artifact directory.
///
/// Files are written as each stage finishes, so a failure leaves the earlier
/// artifacts in place; the error names the failing stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate().stage("config")?;
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| PecError::invalid(format!("cannot build worker pool: {e}")))?
            .install(|| run_stages(cfg)),
        None => run_stages(cfg),
    }
}

fn run_stages(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let input = cfg.input.as_ref().expect("validated");
    let seeds = StageSeeds::new(cfg.seed);
    fs::create_dir_all(&cfg.out_dir).map_err(|e| PecError::io(&cfg.out_dir, e))?;
    let mut w = Writer {
        dir: cfg.out_dir.clone(),
        outputs: BTreeMap::new(),
    };

    let (graph, od) = load_input(input, cfg.similarity, cfg.sparsify).stage("build-graph")?;
    save_graph(&graph, cfg.out_dir.join("graph.tsv")).stage("build-graph")?;
    w.record("graph.tsv")?;

    let walk_cfg = WalkConfig {
        seed: seeds.walks,
        ..cfg.walk
    };
    let corpus = generate_walks(&graph, &walk_cfg).stage("walks")?;
    save_walks(&corpus, cfg.out_dir.join("walks.txt")).stage("walks")?;
    w.record("walks.txt")?;

    let train_cfg = TrainConfig {
        seed: seeds.embed,
        ..cfg.train
    };
    let training = train(&corpus, &train_cfg).stage("embed")?;
    save_embeddings(&training.embedding, cfg.out_dir.join("embeddings.txt")).stage("embed")?;
    w.record("embeddings.txt")?;

    let (assignment, record) = cluster_embedding(
        &training.embedding.vectors,
        Some(&graph),
        &cfg.cluster,
        cfg.kmeans_restarts,
        seeds.cluster,
    )
    .stage("cluster")?;
    save_labels(
        graph.node_ids(),
        &assignment.labels,
        cfg.out_dir.join("labels.csv"),
    )
    .stage("cluster")?;
    w.record("labels.csv")?;
    w.json("clustering.json", &record)?;

    if let Some(od) = &od {
        let freq = interaction_frequency_report(od, &assignment.labels).stage("evaluate")?;
        freq.save_csv(cfg.out_dir.join("frequency.csv"))
            .stage("evaluate")?;
        w.record("frequency.csv")?;
    }
    if let Some(width) = cfg.lattice_width {
        if width == 0 {
            return Err(PecError::invalid("lattice width must be positive")).stage("report");
        }
        w.json(
            "clusters.geojson",
            &lattice_geojson(graph.node_ids(), &assignment.labels, width),
        )?;
    }

    let truths: Vec<GroundTruth> = cfg
        .truths
        .iter()
        .map(|p| GroundTruth::load(p, graph.node_ids()))
        .collect::<Result<_>>()
        .stage("evaluate")?;
    let mut scores = BTreeMap::new();
    if !truths.is_empty() {
        let mut reports = serde_json::Map::new();
        for t in &truths {
            let r = macro_f1(&assignment.labels, t).stage("evaluate")?;
            scores.insert(t.name.clone(), r.macro_f1);
            reports.insert(t.name.clone(), serde_json::to_value(&r)?);
        }
        w.json("report.json", &serde_json::Value::Object(reports))?;

        let point = GridPoint {
            p: cfg.walk.p,
            q: cfg.walk.q,
            dim: cfg.train.dim,
            walk_length: cfg.walk.walk_length,
            num_walks: cfg.walk.num_walks,
            window: cfg.train.window,
        };
        let base = SweepConfig {
            grid: vec![point],
            repeats: cfg.repeats,
            seed: seeds.evaluate,
            epochs: cfg.train.epochs,
            initial_lr: cfg.train.initial_lr,
            negatives: cfg.train.negatives,
            kmeans_restarts: cfg.kmeans_restarts,
            baselines: true,
            noise: None,
            noise_mode: cfg.noise_mode,
            noise_support: cfg.noise_support,
        };
        if cfg.repeats > 1 || !cfg.noise.is_empty() {
            let clean = sweep(&graph, &truths, &base).stage("evaluate")?;
            w.text("repeats.csv", &clean.to_csv())?;
            if !cfg.noise.is_empty() {
                let mut csv = String::from("noise,truth,mean,std,unperturbed_mean,drop\n");
                for &kind in &cfg.noise {
                    let noisy = sweep(
                        &graph,
                        &truths,
                        &SweepConfig {
                            noise: Some(kind),
                            baselines: false,
                            ..base.clone()
                        },
                    )
                    .stage("evaluate")?;
                    let label = crate::eval::NoiseSpec { kind, seed: 0 }.label();
                    for (t0, t1) in clean.tables.iter().zip(&noisy.tables) {
                        let (Some(a), Some(b)) = (&t0.rows[0].pem, &t1.rows[0].pem) else {
                            let _ = writeln!(csv, "{label},{},,,,", t0.truth);
                            continue;
                        };
                        let _ = writeln!(
                            csv,
                            "{label},{},{},{},{},{}",
                            t0.truth,
                            b.mean,
                            b.std,
                            a.mean,
                            a.mean - b.mean
                        );
                    }
                }
                w.text("perturbation.csv", &csv)?;
            }
        }
    }

    let mut inputs = BTreeMap::new();
    for p in std::iter::once(input.path()).chain(cfg.truths.iter().map(PathBuf::as_path)) {
        inputs.insert(p.display().to_string(), file_sha256(p)?);
    }
    let manifest = json!({
        "tool": "pec",
        "version": env!("CARGO_PKG_VERSION"),
        // output location and worker count do not affect any artifact
        "config": cfg
            .to_pairs()
            .into_iter()
            .filter(|(k, _)| k != "out" && k != "workers")
            .map(|(k, v)| json!([k, v]))
            .collect::<Vec<_>>(),
        "seeds": seeds,
        "inputs": inputs,
        "outputs": w.outputs,
    });
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    let path = cfg.out_dir.join("manifest.json");
    fs::write(&path, text).map_err(|e| PecError::io(&path, e))?;

    Ok(PipelineRun {
        out_dir: cfg.out_dir.clone(),
        graph,
        n_clusters: assignment.n_clusters,
        labels: assignment.labels,
        scores,
        seeds,
        outputs: w.outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(
            "# example run\nod = trips.csv\np = 4\nq=0.5\ndim = 16\nn-range = 2..6\nsigma = 0.2,1\nlambda = 4\nseed = 7\n",
            Path::new("cfg.txt"),
        )
        .unwrap();
        assert_eq!(cfg.walk.p, 4.0);
        assert_eq!(cfg.cluster, ClusterChoice::Indices(vec![2, 3, 4, 5, 6]));
        assert_eq!(cfg.noise.len(), 3);
        let mut again = PipelineConfig::default();
        again.apply_text(&cfg.to_text(), Path::new("x")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn config_errors_name_line() {
        let mut cfg = PipelineConfig::default();
        let e = cfg
            .apply_text("p = 1\nbogus = 3\n", Path::new("c.txt"))
            .unwrap_err();
        assert!(e.to_string().contains("c.txt:2"), "{e}");
        let e = cfg.apply_text("p 1\n", Path::new("c.txt")).unwrap_err();
        assert!(e.to_string().contains("c.txt:1"));
    }

    #[test]
    fn missing_input_is_config_stage_error() {
        let cfg = PipelineConfig::default();
        let e = run_pipeline(&cfg).unwrap_err();
        assert_eq!(e.stage(), Some("config"));
    }

    #[test]
    fn geojson_lattice() {
        let ids = vec!["a".to_string(), "b".into(), "c".into()];
        let g = lattice_geojson(&ids, &[0, 1, 1], 2);
        assert_eq!(g["features"].as_array().unwrap().len(), 3);
        assert_eq!(
            g["features"][2]["geometry"]["coordinates"][0][0],
            json!([0.0, 500.0])
        );
        assert_eq!(g["features"][1]["properties"]["cluster"], 1);
    }
}
