//! Pick a cluster count with validity indices on blobs and with Louvain on
//! an interaction graph.

use pec::cluster::{kmeans, louvain, select_n, KMeansConfig};
use pec::eval::macro_f1;
use pec::srg::build_srg_from_interactions;
use pec::synth::{blobs, planted_od};

fn main() -> pec::Result<()> {
    let (features, truth) = blobs(4, 25, 3, 0.5, 6.0, 3)?;
    let sel = select_n(features.values(), &[2, 3, 4, 5, 6, 7], 0, 10)?;
    println!("n   Davies-Bouldin  Dunn     Silhouette");
    for (n, s) in &sel.table {
        println!(
            "{n:<3} {:<15.4} {:<8.4} {:.4}",
            s.davies_bouldin, s.dunn, s.silhouette
        );
    }
    let a = kmeans(features.values(), &KMeansConfig::new(sel.recommended, 0))?;
    println!(
        "recommended n = {}; Macro-F1 against the planted blobs {:.3}",
        sel.recommended,
        macro_f1(&a.labels, &truth)?.macro_f1
    );

    let (od, _) = planted_od(5, 10, 9.0, 1.0, 4)?;
    let c = louvain(&build_srg_from_interactions(&od)?, 0)?;
    println!(
        "Louvain on a 5-region OD graph: {} communities, Q = {:.4}",
        c.count, c.modularity
    );
    Ok(())
}
