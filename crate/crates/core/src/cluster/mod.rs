//! Partitioning node representations.
//!
//! [`kmeans`] clusters embedding rows, [`validity_indices`] scores a
//! partition and [`select_n`] picks a cluster count from those scores.
//! [`louvain`] works on the graph itself and estimates a community count by
//! greedy modularity optimization.

mod kmeans;
mod louvain;
mod validity;

pub use kmeans::{kmeans, ClusterAssignment, KMeansConfig};
pub use louvain::{louvain, louvain_seeded, modularity, Communities, LOUVAIN_SEEDS};
pub use validity::{select_n, validity_indices, IndexScores, SelectN};

use std::fs;
use std::path::Path;

use crate::error::{PecError, Result};

/// Squared Euclidean distance.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Write `node_id,label` CSV with header.
pub fn save_labels(ids: &[String], labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != labels.len() {
        return Err(PecError::invalid("label count does not match node count"));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_id", "label"])?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()])?;
    }
    w.flush().map_err(|e| PecError::io(path, e))
}

/// Read `node_id,label` CSV. Labels may be any integers.
pub fn load_labels(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<i64>)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| PecError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(PecError::parse(path, i + 2, "expected `node_id,label`"));
        }
        ids.push(rec[0].to_string());
        labels.push(rec[1].parse().map_err(|_| {
            PecError::parse(
                path,
                i + 2,
                format!("label {:?} is not an integer", &rec[1]),
            )
        })?);
    }
    Ok((ids, labels))
}
