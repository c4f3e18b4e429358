use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pec::cluster::{load_labels, louvain, save_labels, select_n};
use pec::embedder::{load_embeddings, save_embeddings, train, TrainConfig};
use pec::eval::{
    grid, macro_f1, perturb_graph, perturb_masked, sweep, GroundTruth, NoiseKind, NoiseMode,
    NoiseSpec, NoiseSupport, SweepConfig,
};
use pec::pipeline::{
    cluster_embedding, load_input, run_pipeline, ClusterChoice, Input, PipelineConfig,
};
use pec::seed::derive_seed;
use pec::srg::{
    load_graph, read_od_csv, save_graph, write_features_csv, write_od_csv, InteractionMatrix,
    Similarity, Sparsify,
};
use pec::synth::{blobs, metro_network, planted_od, MetroSpec};
use pec::walker::{
    generate_walks, generate_walks_with_workers, load_walks, save_walks, WalkConfig,
};
use pec::{PecError, Result};

#[derive(Parser)]
#[command(
    name = "pec",
    version,
    about = "Urban structure detection by probabilistic embedding clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a space relation graph from features, an OD matrix or an edge list.
    BuildGraph(BuildGraph),
    /// Sample biased second-order random walks.
    Walks(Walks),
    /// Train skip-gram embeddings on a walk corpus.
    Embed(Embed),
    /// Cluster embeddings with k-means.
    Cluster(Cluster),
    /// Score candidate cluster counts with DB, Dunn and Silhouette.
    SelectN(SelectN),
    /// Louvain communities of a graph.
    Louvain(Louvain),
    /// Macro-F1 of predicted labels against ground truth.
    Evaluate(Evaluate),
    /// Sweep walk and embedding parameters over a graph.
    Sweep(Sweep),
    /// Add noise to a graph or an OD matrix.
    Perturb(Perturb),
    /// Generate synthetic fixtures.
    #[command(subcommand)]
    Synth(Synth),
    /// Run every stage from one config.
    Pipeline(Pipeline),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, group = "input")]
    features: Option<PathBuf>,
    #[arg(long, group = "input")]
    od: Option<PathBuf>,
    #[arg(long, group = "input")]
    edges: Option<PathBuf>,
}

impl InputArgs {
    fn input(&self) -> Option<Input> {
        match (&self.features, &self.od, &self.edges) {
            (Some(p), _, _) => Some(Input::Features(p.clone())),
            (_, Some(p), _) => Some(Input::Od(p.clone())),
            (_, _, Some(p)) => Some(Input::Edges(p.clone())),
            _ => None,
        }
    }
}

#[derive(Args)]
struct BuildGraph {
    #[command(flatten)]
    input: InputArgs,
    /// gaussian or cosine
    #[arg(long, default_value = "gaussian")]
    similarity: String,
    /// Gaussian kernel width.
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    #[arg(long, conflicts_with = "threshold")]
    knn: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

/// Stage seed, given directly or derived from a master seed as the pipeline does.
#[derive(Args)]
struct SeedArgs {
    #[arg(long, default_value_t = 0, conflicts_with = "master_seed")]
    seed: u64,
    #[arg(long)]
    master_seed: Option<u64>,
}

impl SeedArgs {
    fn resolve(&self, stage: &str) -> u64 {
        self.master_seed
            .map_or(self.seed, |m| derive_seed(m, stage))
    }
}

#[derive(Args)]
struct Walks {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 80)]
    walk_length: usize,
    #[arg(long, default_value_t = 10)]
    num_walks: usize,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Embed {
    #[arg(long)]
    walks: PathBuf,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Cluster {
    #[arg(long)]
    embeddings: PathBuf,
    /// A count, `auto` (validity indices over --n-range) or `louvain` (needs --graph).
    #[arg(long, default_value = "auto")]
    n_clusters: String,
    #[arg(long, default_value = "2..10")]
    n_range: String,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    out: PathBuf,
    /// Where to write how the count was chosen.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SelectN {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = "2..10")]
    n_range: String,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Louvain {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct Evaluate {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, required = true)]
    truth: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, required = true)]
    truth: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    q: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    dim: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    walk_length: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    num_walks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    window: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also score spectral clustering and hierarchical clustering.
    #[arg(long)]
    baselines: bool,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, conflicts_with = "lambda")]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// normalize-noise or clip-result
    #[arg(long, default_value = "normalize-noise")]
    noise_mode: String,
    /// existing or all
    #[arg(long, default_value = "existing")]
    noise_support: String,
}

impl NoiseArgs {
    fn kind(&self) -> Option<NoiseKind> {
        match (self.sigma, self.lambda) {
            (Some(sigma), _) => Some(NoiseKind::Gaussian { sigma }),
            (_, Some(lambda)) => Some(NoiseKind::Poisson { lambda }),
            _ => None,
        }
    }

    fn mode(&self) -> Result<(NoiseMode, NoiseSupport)> {
        let mut cfg = PipelineConfig::default();
        cfg.set("noise-mode", &self.noise_mode)?;
        cfg.set("noise-support", &self.noise_support)?;
        Ok((cfg.noise_mode, cfg.noise_support))
    }
}

#[derive(Args)]
struct Perturb {
    #[arg(long, group = "target", required = true)]
    graph: Option<PathBuf>,
    #[arg(long, group = "target")]
    od: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Synth {
    /// Metro lines with transfer stations: edges.tsv, line-membership.csv, transfer-vs-not.csv.
    Metro {
        #[arg(long, default_value_t = 11)]
        lines: usize,
        #[arg(long, default_value_t = 10)]
        stations: usize,
        /// Transfers beyond the chain linking consecutive lines.
        #[arg(long, default_value_t = 10)]
        extra_transfers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Planted-partition OD matrix: od.csv, blocks.csv.
    Od {
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        #[arg(long, default_value_t = 15)]
        per_block: usize,
        #[arg(long, default_value_t = 9.0)]
        intra: f64,
        #[arg(long, default_value_t = 1.0)]
        inter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Gaussian blobs: features.csv, blobs.csv.
    Blobs {
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 20)]
        per_cluster: usize,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 0.5)]
        spread: f64,
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Pipeline {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    num_walks: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    n_clusters: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    truth: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` options, as in the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| PecError::Io {
            path: p.into(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PecError::Io {
        path: dir.into(),
        source: e,
    })
}

fn parse_range(s: &str) -> Result<Vec<usize>> {
    let mut cfg = PipelineConfig::default();
    cfg.set("n-range", s)?;
    match cfg.cluster {
        ClusterChoice::Indices(c) => Ok(c),
        _ => unreachable!("n-range always yields candidates"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildGraph(a) => {
            let input = a
                .input
                .input()
                .ok_or_else(|| PecError::InvalidInput("no input given".into()))?;
            let similarity = match a.similarity.as_str() {
                "gaussian" => Similarity::Gaussian { sigma: a.bandwidth },
                "cosine" => Similarity::Cosine,
                s => return Err(PecError::InvalidInput(format!("unknown similarity {s:?}"))),
            };
            let sparsify = match (a.knn, a.threshold) {
                (Some(k), _) => Sparsify::Knn(k),
                (_, Some(t)) => Sparsify::Threshold(t),
                _ => Sparsify::None,
            };
            let (g, _) = load_input(&input, similarity, sparsify)?;
            save_graph(&g, &a.out)?;
            eprintln!("{}", g.summary());
        }
        Command::Walks(a) => {
            let g = load_graph(&a.graph)?;
            let cfg = WalkConfig {
                p: a.p,
                q: a.q,
                walk_length: a.walk_length,
                num_walks: a.num_walks,
                seed: a.seed.resolve("walks"),
            };
            let corpus = match a.workers {
                Some(w) => generate_walks_with_workers(&g, &cfg, w)?,
                None => generate_walks(&g, &cfg)?,
            };
            save_walks(&corpus, &a.out)?;
        }
        Command::Embed(a) => {
            let corpus = load_walks(&a.walks)?;
            let cfg = TrainConfig {
                dim: a.dim,
                window: a.window,
                epochs: a.epochs,
                initial_lr: a.lr,
                negatives: a.negatives,
                seed: a.seed.resolve("embed"),
            };
            let t = train(&corpus, &cfg)?;
            save_embeddings(&t.embedding, &a.out)?;
            eprintln!("epoch losses {:?}", t.epoch_loss);
        }
        Command::Cluster(a) => {
            let e = load_embeddings(&a.embeddings)?;
            let choice = match a.n_clusters.as_str() {
                "auto" => ClusterChoice::Indices(parse_range(&a.n_range)?),
                "louvain" => ClusterChoice::Louvain,
                n => ClusterChoice::Fixed(
                    n.parse()
                        .map_err(|_| PecError::InvalidInput(format!("bad cluster count {n:?}")))?,
                ),
            };
            let graph = a.graph.as_ref().map(load_graph).transpose()?;
            if let Some(g) = &graph {
                if g.node_ids() != e.node_ids.as_slice() {
                    return Err(PecError::InvalidInput(
                        "graph and embeddings list different nodes".into(),
                    ));
                }
            }
            let (assignment, record) = cluster_embedding(
                &e.vectors,
                graph.as_ref(),
                &choice,
                a.restarts,
                a.seed.resolve("cluster"),
            )?;
            save_labels(&e.node_ids, &assignment.labels, &a.out)?;
            if let Some(r) = &a.report {
                write_json(Some(r), &record)?;
            }
        }
        Command::SelectN(a) => {
            let e = load_embeddings(&a.embeddings)?;
            let s = select_n(&e.vectors, &parse_range(&a.n_range)?, a.seed, a.restarts)?;
            write_json(a.out.as_deref(), &serde_json::to_value(&s)?)?;
        }
        Command::Louvain(a) => {
            let g = load_graph(&a.graph)?;
            let c = louvain(&g, a.seed)?;
            if let Some(l) = &a.labels {
                save_labels(g.node_ids(), &c.labels, l)?;
            }
            write_json(
                a.out.as_deref(),
                &json!({ "communities": c.count, "modularity": c.modularity }),
            )?;
        }
        Command::Evaluate(a) => {
            let (ids, raw) = load_labels(&a.pred)?;
            let pred: Vec<usize> = GroundTruth::new("pred", &raw)?.labels;
            let mut reports = serde_json::Map::new();
            for t in &a.truth {
                let truth = GroundTruth::load(t, &ids)?;
                reports.insert(
                    truth.name.clone(),
                    serde_json::to_value(macro_f1(&pred, &truth)?)?,
                );
            }
            let value = if reports.len() == 1 {
                reports.into_iter().next().expect("one report").1
            } else {
                serde_json::Value::Object(reports)
            };
            write_json(a.out.as_deref(), &value)?;
        }
        Command::Sweep(a) => {
            let g = load_graph(&a.graph)?;
            let truths = a
                .truth
                .iter()
                .map(|t| GroundTruth::load(t, g.node_ids()))
                .collect::<Result<Vec<_>>>()?;
            let (noise_mode, noise_support) = a.noise.mode()?;
            let cfg = SweepConfig {
                grid: grid(&a.p, &a.q, &a.dim, &a.walk_length, &a.num_walks, &a.window),
                repeats: a.repeats,
                seed: a.seed,
                epochs: a.epochs,
                baselines: a.baselines,
                noise: a.noise.kind(),
                noise_mode,
                noise_support,
                ..SweepConfig::default()
            };
            let report = match a.workers {
                Some(w) => rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| PecError::InvalidInput(format!("cannot build worker pool: {e}")))?
                    .install(|| sweep(&g, &truths, &cfg))?,
                None => sweep(&g, &truths, &cfg)?,
            };
            if let Some(p) = &a.out_json {
                report.save_json(p)?;
            }
            match &a.out_csv {
                Some(p) => report.save_csv(p)?,
                None if a.out_json.is_none() => print!("{}", report.to_csv()),
                None => {}
            }
        }
        Command::Perturb(a) => {
            let kind = a
                .noise
                .kind()
                .ok_or_else(|| PecError::InvalidInput("give --sigma or --lambda".into()))?;
            let (mode, support) = a.noise.mode()?;
            let spec = NoiseSpec { kind, seed: a.seed };
            if let Some(g) = &a.graph {
                save_graph(
                    &perturb_graph(&load_graph(g)?, &spec, mode, support)?,
                    &a.out,
                )?;
            } else if let Some(od) = &a.od {
                let m = read_od_csv(od)?;
                let out = perturb_masked(m.volumes(), &spec, mode, support)?;
                write_od_csv(&InteractionMatrix::new(m.node_ids().to_vec(), out)?, &a.out)?;
            }
        }
        Command::Synth(s) => match s {
            Synth::Metro {
                lines,
                stations,
                extra_transfers,
                seed,
                out_dir,
            } => {
                let m = metro_network(&MetroSpec::random(lines, stations, extra_transfers, seed))?;
                create_dir(&out_dir)?;
                save_graph(&m.graph, out_dir.join("edges.tsv"))?;
                for t in [&m.lines, &m.transfers] {
                    save_labels(
                        m.graph.node_ids(),
                        &t.labels,
                        out_dir.join(format!("{}.csv", t.name)),
                    )?;
                }
                eprintln!("{}", m.graph.summary());
            }
            Synth::Od {
                blocks,
                per_block,
                intra,
                inter,
                seed,
                out_dir,
            } => {
                let (od, truth) = planted_od(blocks, per_block, intra, inter, seed)?;
                create_dir(&out_dir)?;
                write_od_csv(&od, out_dir.join("od.csv"))?;
                save_labels(od.node_ids(), &truth.labels, out_dir.join("blocks.csv"))?;
            }
            Synth::Blobs {
                clusters,
                per_cluster,
                dims,
                spread,
                separation,
                seed,
                out_dir,
            } => {
                let (f, truth) = blobs(clusters, per_cluster, dims, spread, separation, seed)?;
                create_dir(&out_dir)?;
                write_features_csv(&f, out_dir.join("features.csv"))?;
                save_labels(f.node_ids(), &truth.labels, out_dir.join("blobs.csv"))?;
            }
        },
        Command::Pipeline(a) => {
            let mut cfg = match &a.config {
                Some(p) => PipelineConfig::from_file(p)?,
                None => PipelineConfig::default(),
            };
            if let Some(input) = a.input.input() {
                cfg.input = Some(input);
            }
            let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
            set("p", a.p.map(|v| v.to_string()))?;
            set("q", a.q.map(|v| v.to_string()))?;
            set("dim", a.dim.map(|v| v.to_string()))?;
            set("walk-length", a.walk_length.map(|v| v.to_string()))?;
            set("num-walks", a.num_walks.map(|v| v.to_string()))?;
            set("window", a.window.map(|v| v.to_string()))?;
            set("n-clusters", a.n_clusters.clone())?;
            set("repeats", a.repeats.map(|v| v.to_string()))?;
            set("seed", a.seed.map(|v| v.to_string()))?;
            set("workers", a.workers.map(|v| v.to_string()))?;
            set("out", a.out.map(|v| v.display().to_string()))?;
            for kv in &a.set {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    PecError::InvalidInput(format!("expected KEY=VALUE, got {kv:?}"))
                })?;
                cfg.set(k.trim(), v)?;
            }
            if !a.sigma.is_empty() || !a.lambda.is_empty() {
                cfg.noise = a
                    .sigma
                    .iter()
                    .map(|&sigma| NoiseKind::Gaussian { sigma })
                    .collect();
                cfg.noise
                    .extend(a.lambda.iter().map(|&lambda| NoiseKind::Poisson { lambda }));
            }
            if !a.truth.is_empty() {
                cfg.truths = a.truth;
            }
            let run = run_pipeline(&cfg)?;
            write_json(
                None,
                &json!({
                    "out_dir": run.out_dir,
                    "n_clusters": run.n_clusters,
                    "macro_f1": run.scores,
                    "seeds": run.seeds,
                }),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.render().to_string();
            eprintln!(
                "{}",
                json!({ "error": { "kind": "usage", "message": msg.trim() } })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": { "kind": e.kind(), "stage": e.stage(), "message": e.to_string() } })
            );
            ExitCode::from(1)
        }
    }
}
