//! Spectral clustering and average-linkage HCA against the metro ground truths.

use pec::baselines::{graph_distances, hca, spectral_cluster, Linkage};
use pec::eval::macro_f1;
use pec::synth::metro_fixture;

fn main() -> pec::Result<()> {
    let metro = metro_fixture(0)?;
    let g = &metro.graph;
    let dist = graph_distances(g);
    for truth in [&metro.lines, &metro.transfers] {
        let sc = spectral_cluster(g, 5, truth.n_true, 1)?;
        println!(
            "{:<16} SC  Macro-F1 {:.3} (smallest eigenvalues {:.3?})",
            truth.name,
            macro_f1(&sc.assignment.labels, truth)?.macro_f1,
            &sc.embedding.eigenvalues[..3]
        );
        for linkage in [Linkage::Single, Linkage::Average, Linkage::Complete] {
            let h = hca(&dist, linkage, truth.n_true)?;
            println!(
                "{:<16} HCA {linkage:?} Macro-F1 {:.3}",
                truth.name,
                macro_f1(&h.labels, truth)?.macro_f1
            );
        }
    }
    Ok(())
}
