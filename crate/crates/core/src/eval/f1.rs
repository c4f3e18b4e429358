use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::load_labels;
use crate::error::{PecError, Result};

/// Reference labelling of every node, contiguous from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub name: String,
    pub labels: Vec<usize>,
    pub n_true: usize,
}

impl GroundTruth {
    /// Relabels arbitrary integer classes to `0..n` in ascending value order.
    pub fn new(name: impl Into<String>, raw: &[i64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(PecError::invalid(
                "ground truth must label at least one node",
            ));
        }
        let mut values: Vec<i64> = raw.to_vec();
        values.sort_unstable();
        values.dedup();
        let index: BTreeMap<i64, usize> = values.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Ok(Self {
            name: name.into(),
            labels: raw.iter().map(|v| index[v]).collect(),
            n_true: values.len(),
        })
    }

    /// Load a labels CSV and align it to `node_ids`.
    pub fn load(path: impl AsRef<std::path::Path>, node_ids: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let (ids, raw) = load_labels(path)?;
        let aligned = align_labels(&ids, &raw, node_ids)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "truth".into());
        Self::new(name, &aligned)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Reorder `(ids, labels)` to follow `node_ids`; both sides must cover the
/// same node set.
pub fn align_labels<T: Copy>(ids: &[String], labels: &[T], node_ids: &[String]) -> Result<Vec<T>> {
    let map: std::collections::HashMap<&str, T> = ids
        .iter()
        .map(String::as_str)
        .zip(labels.iter().copied())
        .collect();
    if map.len() != ids.len() {
        return Err(PecError::invalid("labels list a node more than once"));
    }
    if map.len() != node_ids.len() {
        return Err(PecError::invalid(format!(
            "labels cover {} nodes but the node set has {}",
            map.len(),
            node_ids.len()
        )));
    }
    node_ids
        .iter()
        .map(|id| {
            map.get(id.as_str())
                .copied()
                .ok_or_else(|| PecError::invalid(format!("no label for node {id:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub truth: String,
    pub macro_f1: f64,
    /// F1 of each ground-truth class under the chosen matching.
    pub per_class_f1: Vec<f64>,
    /// Ground-truth class -> matched predicted label (`None` when unmatched).
    pub matching: Vec<Option<usize>>,
    pub repeats: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns `assign[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// F1 table `f1[t][c]` between truth classes and compacted predicted labels.
pub(crate) fn f1_table(pred: &[usize], truth: &GroundTruth) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut pred_ids: Vec<usize> = pred.to_vec();
    pred_ids.sort_unstable();
    pred_ids.dedup();
    let col: BTreeMap<usize, usize> = pred_ids.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let (nt, np) = (truth.n_true, pred_ids.len());
    let mut joint = vec![vec![0usize; np]; nt];
    let mut tsize = vec![0usize; nt];
    let mut psize = vec![0usize; np];
    for (&p, &t) in pred.iter().zip(&truth.labels) {
        let c = col[&p];
        joint[t][c] += 1;
        tsize[t] += 1;
        psize[c] += 1;
    }
    let f1 = (0..nt)
        .map(|t| {
            (0..np)
                .map(|c| 2.0 * joint[t][c] as f64 / (tsize[t] + psize[c]) as f64)
                .collect()
        })
        .collect();
    (f1, pred_ids)
}

/// Macro-F1 after the one-to-one matching of predicted labels to truth
/// classes that maximizes the summed per-class F1. Unmatched truth classes
/// score 0; surplus predicted clusters are ignored.
pub fn macro_f1(pred: &[usize], truth: &GroundTruth) -> Result<EvaluationReport> {
    if pred.len() != truth.len() {
        return Err(PecError::invalid(format!(
            "{} predicted labels for {} ground-truth nodes",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(PecError::invalid("nothing to evaluate"));
    }
    let (f1, pred_ids) = f1_table(pred, truth);
    let (nt, np) = (truth.n_true, pred_ids.len());
    let size = nt.max(np);
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|t| {
            (0..size)
                .map(|c| if t < nt && c < np { -f1[t][c] } else { 0.0 })
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost);
    let mut per_class = Vec::with_capacity(nt);
    let mut matching = Vec::with_capacity(nt);
    for (t, row) in f1.iter().enumerate() {
        let c = assign[t];
        if c < np {
            per_class.push(row[c]);
            matching.push(Some(pred_ids[c]));
        } else {
            per_class.push(0.0);
            matching.push(None);
        }
    }
    let macro_f1 = per_class.iter().sum::<f64>() / nt as f64;
    Ok(EvaluationReport {
        truth: truth.name.clone(),
        macro_f1,
        per_class_f1: per_class,
        matching,
        repeats: 1,
        config: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth(raw: &[i64]) -> GroundTruth {
        GroundTruth::new("t", raw).unwrap()
    }

    #[test]
    fn identical_and_swapped_score_one() {
        let t = truth(&[0, 0, 1, 1, 2]);
        assert_eq!(macro_f1(&[0, 0, 1, 1, 2], &t).unwrap().macro_f1, 1.0);
        assert_eq!(macro_f1(&[5, 5, 9, 9, 0], &t).unwrap().macro_f1, 1.0);
    }

    #[test]
    fn extra_and_missing_clusters() {
        let t = truth(&[0, 0, 1, 1]);
        // one cluster only: class 0 gets F1 = 2*2/(2+4), class 1 unmatched
        let r = macro_f1(&[3, 3, 3, 3], &t).unwrap();
        assert!((r.macro_f1 - (2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!(r.matching.contains(&None));
        // extra cluster is ignored, never raises the score to 1
        let r = macro_f1(&[0, 1, 2, 2], &t).unwrap();
        assert!(r.macro_f1 < 1.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(macro_f1(&[0, 1], &truth(&[0, 1, 1])).is_err());
    }

    #[test]
    fn matches_brute_force_for_eight_nodes() {
        use rand::Rng;
        let mut rng = crate::seed::rng(99);
        let raw: Vec<i64> = (0..8).map(|_| rng.random_range(0..3)).collect();
        let t = truth(&raw);
        let pred: Vec<usize> = (0..8).map(|_| rng.random_range(0..3)).collect();
        let (f1, _) = f1_table(&pred, &t);
        let np = f1[0].len();
        let best = permutations(t.n_true.max(np))
            .into_iter()
            .map(|perm| {
                (0..t.n_true)
                    .map(|tc| if perm[tc] < np { f1[tc][perm[tc]] } else { 0.0 })
                    .sum::<f64>()
                    / t.n_true as f64
            })
            .fold(0.0, f64::max);
        assert!((macro_f1(&pred, &t).unwrap().macro_f1 - best).abs() < 1e-12);
    }

    pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_small_known() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 5.0);
    }

    proptest! {
        #[test]
        fn relabeling_invariance(
            raw in proptest::collection::vec(0i64..4, 5..30),
            pred in proptest::collection::vec(0usize..5, 30),
            shift in 0usize..100,
        ) {
            let t = truth(&raw);
            let pred = &pred[..raw.len()];
            let base = macro_f1(pred, &t).unwrap().macro_f1;
            let relabeled: Vec<usize> = pred.iter().map(|l| (4 - l) * 7 + shift).collect();
            let other = macro_f1(&relabeled, &t).unwrap().macro_f1;
            prop_assert!((base - other).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}
