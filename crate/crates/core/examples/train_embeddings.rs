//! Train skip-gram vectors on metro walks and list nearest stations.

use pec::embedder::{train, TrainConfig};
use pec::synth::metro_fixture;
use pec::walker::{generate_walks, WalkConfig};

fn cosine(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
}

fn main() -> pec::Result<()> {
    let metro = metro_fixture(0)?;
    let corpus = generate_walks(
        &metro.graph,
        &WalkConfig {
            walk_length: 40,
            seed: 1,
            ..WalkConfig::default()
        },
    )?;
    let cfg = TrainConfig {
        dim: 16,
        seed: 2,
        ..TrainConfig::default()
    };
    let t = train(&corpus, &cfg)?;
    for (i, l) in t.epoch_loss.iter().enumerate() {
        println!("epoch {i}: mean loss {l:.4}");
    }
    let e = &t.embedding;
    for probe in [0, e.len() / 2] {
        let mut sims: Vec<(f64, &str)> = (0..e.len())
            .filter(|&j| j != probe)
            .map(|j| {
                (
                    cosine(e.vectors.row(probe), e.vectors.row(j)),
                    e.node_ids[j].as_str(),
                )
            })
            .collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top: Vec<String> = sims
            .iter()
            .take(4)
            .map(|(s, id)| format!("{id} ({s:.2})"))
            .collect();
        println!("nearest to {}: {}", e.node_ids[probe], top.join(", "));
    }
    Ok(())
}
