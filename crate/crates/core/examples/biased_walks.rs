//! Second-order walk probabilities for return/in-out settings, and a corpus
//! on a small metro network.

use pec::synth::{metro_network, MetroSpec};
use pec::walker::{generate_walks, transition_distribution, WalkConfig};

fn main() -> pec::Result<()> {
    let metro = metro_network(&MetroSpec::chained(3, 6, 4))?;
    let g = &metro.graph;
    let hub = (0..g.node_count())
        .max_by_key(|&u| g.degree(u))
        .expect("nodes");
    let prev = g.neighbors(hub)[0].0;
    println!(
        "stepping from {} having arrived from {}",
        g.node_id(hub),
        g.node_id(prev)
    );
    for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.25)] {
        let dist = transition_distribution(g, prev, hub, p, q)?;
        let shown: Vec<String> = dist
            .iter()
            .map(|&(x, pr)| format!("{}:{pr:.3}", g.node_id(x)))
            .collect();
        println!("  p={p:<4} q={q:<4} {}", shown.join("  "));
    }

    let cfg = WalkConfig {
        p: 4.0,
        q: 1.0,
        walk_length: 10,
        num_walks: 2,
        seed: 7,
    };
    let corpus = generate_walks(g, &cfg)?;
    println!(
        "{} walks, {} tokens; first three:",
        corpus.len(),
        corpus.token_count()
    );
    for w in corpus.walks.iter().take(3) {
        let ids: Vec<&str> = w.iter().map(|&u| g.node_id(u)).collect();
        println!("  {}", ids.join(" "));
    }
    Ok(())
}
