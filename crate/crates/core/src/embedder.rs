//! Skip-gram with negative sampling over walk corpora.
//!
//! Each (center, context) pair from a window of radius `k` is a positive
//! example; `negatives` nodes drawn from the unigram distribution raised to
//! the 3/4 power are negative examples. Loss per pair:
//! `-ln s(u.v) - sum_n ln s(-u.v_n)` where `s` is the logistic function.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{PecError, Result};
use crate::seed;
use crate::walker::WalkCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    /// Context window radius.
    pub window: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 5,
            epochs: 5,
            initial_lr: 0.025,
            negatives: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 || self.window < 1 || self.negatives < 1 {
            return Err(PecError::invalid(
                "dim, window and negatives must all be at least 1",
            ));
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return Err(PecError::invalid(format!(
                "learning rate must be positive, got {}",
                self.initial_lr
            )));
        }
        Ok(())
    }
}

/// Learned node vectors. `vectors` is the representation used downstream;
/// `context` holds the output-side vectors from training.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_ids: Vec<String>,
    pub vectors: Array2<f64>,
    pub context: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// Result of [`train`]: the embedding and the mean loss per pair of each epoch.
#[derive(Debug, Clone)]
pub struct Training {
    pub embedding: EmbeddingMatrix,
    pub epoch_loss: Vec<f64>,
}

/// All `(w[i], w[j])` with `0 < |i - j| <= window`, walk by walk.
pub fn extract_pairs(corpus: &WalkCorpus, window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for walk in &corpus.walks {
        push_pairs(walk, window, |c, x| pairs.push((c, x)));
    }
    pairs
}

fn push_pairs(walk: &[usize], window: usize, mut f: impl FnMut(usize, usize)) {
    for (i, &center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                f(center, ctx);
            }
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss and gradients of one SGNS example.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGrad {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `-ln s(u.v) - sum_n ln s(-u.v_n)` and its exact gradients.
pub fn sgns_loss_and_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGrad {
    let d = center.len();
    assert_eq!(context.len(), d, "context dimension mismatch");
    let mut g_center = vec![0.0; d];

    // -ln s(x) = softplus(-x); d/dx = -(1 - s(x))
    let s_pos = dot(center, context);
    let mut loss = softplus(-s_pos);
    let coef = -(1.0 - sigmoid(s_pos));
    for i in 0..d {
        g_center[i] += coef * context[i];
    }
    let g_context = center.iter().map(|u| coef * u).collect();

    // -ln s(-x) = softplus(x); d/dx = s(x)
    let g_negs = negatives
        .iter()
        .map(|vn| {
            assert_eq!(vn.len(), d, "negative dimension mismatch");
            let s = dot(center, vn);
            loss += softplus(s);
            let c = sigmoid(s);
            for i in 0..d {
                g_center[i] += c * vn[i];
            }
            center.iter().map(|u| c * u).collect()
        })
        .collect();

    SgnsGrad {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// Unigram^0.75 sampler over node indices.
fn negative_table(corpus: &WalkCorpus) -> Result<AliasTable> {
    let mut counts = vec![0.0f64; corpus.node_ids.len()];
    for &u in corpus.walks.iter().flatten() {
        counts[u] += 1.0;
    }
    let weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    AliasTable::new(&weights)
}

/// Train node vectors with single-threaded SGD and a linearly decaying
/// learning rate. Deterministic for a fixed `cfg.seed`.
pub fn train(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<Training> {
    cfg.validate()?;
    let n = corpus.node_ids.len();
    let d = cfg.dim;
    if n == 0 || corpus.walks.is_empty() {
        return Err(PecError::invalid("cannot train on an empty corpus"));
    }
    let mut rng = seed::rng(cfg.seed);
    let half = 0.5 / d as f64;
    let mut center = Array2::from_shape_fn((n, d), |_| rng.random_range(-half..half));
    let mut context = Array2::<f64>::zeros((n, d));
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    if cfg.epochs > 0 {
        let table = negative_table(corpus)?;
        let pairs_per_epoch: usize = corpus
            .walks
            .iter()
            .map(|w| {
                let mut c = 0;
                push_pairs(w, cfg.window, |_, _| c += 1);
                c
            })
            .sum();
        let total = (pairs_per_epoch * cfg.epochs).max(1) as f64;
        let min_lr = cfg.initial_lr * 1e-4;
        let mut step = 0usize;
        let mut grad_u = vec![0.0; d];
        let mut negs = vec![0usize; cfg.negatives];

        for epoch in 0..cfg.epochs {
            let mut sum = 0.0;
            let mut count = 0usize;
            for walk in &corpus.walks {
                let mut pairs = Vec::new();
                push_pairs(walk, cfg.window, |c, x| pairs.push((c, x)));
                for (c, x) in pairs {
                    let lr = (cfg.initial_lr * (1.0 - step as f64 / total)).max(min_lr);
                    step += 1;
                    for slot in negs.iter_mut() {
                        *slot = table.sample(&mut rng);
                    }
                    let loss = sgd_step(&mut center, &mut context, c, x, &negs, lr, &mut grad_u);
                    if !loss.is_finite() {
                        return Err(PecError::Numerical(format!(
                            "non-finite loss in epoch {} (learning rate {} too high?)",
                            epoch + 1,
                            cfg.initial_lr
                        )));
                    }
                    sum += loss;
                    count += 1;
                }
            }
            epoch_loss.push(if count > 0 { sum / count as f64 } else { 0.0 });
        }
        if center.iter().chain(context.iter()).any(|v| !v.is_finite()) {
            return Err(PecError::Numerical(
                "training produced non-finite vectors".into(),
            ));
        }
    }

    Ok(Training {
        embedding: EmbeddingMatrix {
            node_ids: corpus.node_ids.clone(),
            vectors: center,
            context,
        },
        epoch_loss,
    })
}

/// One SGD update; same math as [`sgns_loss_and_grad`] without allocation.
/// Negatives that coincide with the positive context are skipped.
fn sgd_step(
    center: &mut Array2<f64>,
    context: &mut Array2<f64>,
    c: usize,
    x: usize,
    negs: &[usize],
    lr: f64,
    grad_u: &mut [f64],
) -> f64 {
    grad_u.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    let u = center.row(c).to_owned();
    let u = u.as_slice().expect("row is contiguous");

    let mut update = |target: usize, positive: bool, grad_u: &mut [f64]| {
        let mut v = context.row_mut(target);
        let v = v.as_slice_mut().expect("row is contiguous");
        let s = dot(u, v);
        let coef = if positive {
            loss += softplus(-s);
            -(1.0 - sigmoid(s))
        } else {
            loss += softplus(s);
            sigmoid(s)
        };
        for i in 0..u.len() {
            grad_u[i] += coef * v[i];
            v[i] -= lr * coef * u[i];
        }
    };
    update(x, true, grad_u);
    for &ng in negs {
        if ng != x {
            update(ng, false, grad_u);
        }
    }
    let mut row = center.row_mut(c);
    for (r, g) in row.iter_mut().zip(grad_u.iter()) {
        *r -= lr * g;
    }
    loss
}

pub fn embeddings_to_string(e: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", e.len(), e.dim());
    for (id, row) in e.node_ids.iter().zip(e.vectors.rows()) {
        out.push_str(id);
        for v in row {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_embeddings(e: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, embeddings_to_string(e)).map_err(|e| PecError::io(path, e))
}

/// Load `N d` header plus `id v1 .. vd` rows. Context vectors are not stored
/// and come back as zeros.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PecError::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| PecError::parse(path, 1, "empty embedding file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| PecError::parse(path, 1, "header must be `N d`"))?;
    let [n, d] = dims[..] else {
        return Err(PecError::parse(path, 1, "header must be `N d`"));
    };
    let mut ids = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * d);
    for (i, line) in lines {
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("line is non-empty");
        let row: Vec<f64> = fields
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| PecError::parse(path, lineno, "non-numeric vector entry"))?;
        if row.len() != d {
            return Err(PecError::parse(
                path,
                lineno,
                format!("expected {d} values for {id:?}, found {}", row.len()),
            ));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(PecError::parse(path, lineno, "non-finite vector entry"));
        }
        ids.push(id.to_string());
        values.extend(row);
    }
    if ids.len() != n {
        return Err(PecError::parse(
            path,
            1,
            format!("header declares {n} rows, found {}", ids.len()),
        ));
    }
    crate::srg::validate_ids(&ids).map_err(|e| PecError::parse(path, 0, e.to_string()))?;
    Ok(EmbeddingMatrix {
        node_ids: ids,
        vectors: Array2::from_shape_vec((n, d), values).expect("row widths checked"),
        context: Array2::zeros((n, d)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walker::{generate_walks, WalkConfig};
    use proptest::prelude::*;
    use rand::Rng;

    fn corpus_of(walks: Vec<Vec<usize>>, n: usize) -> WalkCorpus {
        WalkCorpus {
            node_ids: (0..n).map(|i| format!("v{i}")).collect(),
            walks,
            graph_fingerprint: String::new(),
            config: WalkConfig::default(),
            dead_ends: vec![],
        }
    }

    #[test]
    fn window_enumeration() {
        let c = corpus_of(vec![vec![0, 1, 2]], 3);
        assert_eq!(extract_pairs(&c, 1), vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert!(extract_pairs(&corpus_of(vec![vec![0]], 1), 4).is_empty());
        let walk: Vec<usize> = (0..7).collect();
        assert_eq!(extract_pairs(&corpus_of(vec![walk], 7), 9).len(), 7 * 6);
    }

    #[test]
    fn loss_at_origin_is_two_ln_two() {
        let z = [0.0; 3];
        let g = sgns_loss_and_grad(&[1.0, 0.0, 0.0], &z, &[&z]);
        assert!((g.loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn saturated_positive_term_vanishes() {
        let g = sgns_loss_and_grad(&[50.0, 0.0], &[50.0, 0.0], &[]);
        assert!(g.loss < 1e-300);
        let g = sgns_loss_and_grad(&[50.0, 0.0], &[50.0, 0.0], &[&[0.0, 1.0]]);
        assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-12);
        let huge = sgns_loss_and_grad(&[1e6], &[-1e6], &[&[1e6]]);
        assert!(huge.loss.is_finite());
    }

    fn ring_corpus(seed: u64) -> WalkCorpus {
        // two 5-cliques joined by a single edge
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((4, 5, 1.0));
        let ids = (0..10).map(|i| format!("v{i}")).collect();
        let g = crate::srg::SpaceRelationGraph::from_edges(ids, &edges).unwrap();
        generate_walks(
            &g,
            &WalkConfig {
                walk_length: 20,
                num_walks: 10,
                seed,
                ..WalkConfig::default()
            },
        )
        .unwrap()
    }

    fn cosine(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
    }

    #[test]
    fn clique_pair_separates() {
        let corpus = ring_corpus(1);
        let cfg = TrainConfig {
            dim: 8,
            window: 3,
            epochs: 10,
            seed: 5,
            ..TrainConfig::default()
        };
        let e = train(&corpus, &cfg).unwrap().embedding;
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for a in 0..10 {
            for b in (a + 1)..10 {
                let c = cosine(e.vectors.row(a), e.vectors.row(b));
                if (a < 5) == (b < 5) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        let (intra, inter) = (intra / ni as f64, inter / nx as f64);
        assert!(intra > inter, "intra {intra} <= inter {inter}");
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let corpus = ring_corpus(2);
        let cfg = TrainConfig {
            dim: 4,
            epochs: 0,
            seed: 9,
            ..TrainConfig::default()
        };
        let t = train(&corpus, &cfg).unwrap();
        assert!(t.epoch_loss.is_empty());
        let bound = 0.5 / 4.0;
        assert!(t.embedding.vectors.iter().all(|v| v.abs() <= bound));
        let mut rng = seed::rng(9);
        let expected = Array2::from_shape_fn((10, 4), |_| rng.random_range(-bound..bound));
        assert_eq!(t.embedding.vectors, expected);
        assert!(t.embedding.context.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_matrix() {
        let corpus = ring_corpus(3);
        let cfg = TrainConfig {
            dim: 6,
            epochs: 2,
            seed: 42,
            ..TrainConfig::default()
        };
        assert_eq!(
            train(&corpus, &cfg).unwrap().embedding,
            train(&corpus, &cfg).unwrap().embedding
        );
    }

    #[test]
    fn loss_decreases_over_epochs() {
        let mut improved = 0;
        for s in 0..5 {
            let corpus = ring_corpus(100 + s);
            let cfg = TrainConfig {
                dim: 8,
                window: 3,
                epochs: 8,
                seed: s,
                ..TrainConfig::default()
            };
            let loss = train(&corpus, &cfg).unwrap().epoch_loss;
            if loss.last() <= loss.first() {
                improved += 1;
            }
        }
        assert_eq!(improved, 5);
    }

    #[test]
    fn absurd_learning_rate_aborts_or_stays_finite() {
        let corpus = ring_corpus(4);
        let cfg = TrainConfig {
            dim: 4,
            epochs: 3,
            initial_lr: 1e200,
            seed: 1,
            ..TrainConfig::default()
        };
        match train(&corpus, &cfg) {
            Err(PecError::Numerical(_)) => {}
            Ok(t) => assert!(t.embedding.vectors.iter().all(|v| v.is_finite())),
            Err(other) => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embedding_file_round_trip_and_errors() {
        let corpus = ring_corpus(5);
        let e = train(
            &corpus,
            &TrainConfig {
                dim: 5,
                epochs: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap()
        .embedding;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        save_embeddings(&e, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.node_ids, e.node_ids);
        for (a, b) in back.vectors.iter().zip(e.vectors.iter()) {
            assert!((a - b).abs() <= 1e-8);
        }

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "2 3\na 1 2 3\nb 1 2\n").unwrap();
        match load_embeddings(&bad).unwrap_err() {
            PecError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("\"b\""));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn pairs_are_symmetric(walk in proptest::collection::vec(0usize..6, 1..15), k in 1usize..6) {
            let pairs = extract_pairs(&corpus_of(vec![walk], 6), k);
            let mut fwd = pairs.clone();
            let mut rev: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
            fwd.sort_unstable();
            rev.sort_unstable();
            prop_assert_eq!(fwd, rev);
        }
    }
}
