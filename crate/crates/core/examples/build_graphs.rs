//! Build relation graphs from features, from an OD matrix and from an
//! adjacency list.

use pec::srg::{
    build_srg_from_adjacency, build_srg_from_features, build_srg_from_interactions, Similarity,
    Sparsify,
};
use pec::synth::{blobs, planted_od};

fn main() -> pec::Result<()> {
    let (features, _) = blobs(3, 10, 2, 0.5, 6.0, 1)?;

    let dense = build_srg_from_features(
        &features,
        Similarity::Gaussian { sigma: 2.0 },
        Sparsify::None,
    )?;
    println!("gaussian, dense:      {}", dense.summary());
    let knn = build_srg_from_features(
        &features,
        Similarity::Gaussian { sigma: 2.0 },
        Sparsify::Knn(4),
    )?;
    println!("gaussian, 4-nn union: {}", knn.summary());
    let cos = build_srg_from_features(&features, Similarity::Cosine, Sparsify::Threshold(0.9))?;
    println!("cosine >= 0.9:        {}", cos.summary());

    let (od, _) = planted_od(4, 6, 9.0, 1.0, 2)?;
    let g = build_srg_from_interactions(&od)?;
    let (u, v, w) = g
        .edges()
        .fold((0, 0, 0.0), |best, e| if e.2 > best.2 { e } else { best });
    println!(
        "od graph:             {}; heaviest edge {}-{} = {w}",
        g.summary(),
        g.node_id(u),
        g.node_id(v)
    );

    let metro = build_srg_from_adjacency(&["depot"], &[("a", "b"), ("b", "c"), ("c", "d")])?;
    println!(
        "adjacency:            {}; isolated {:?}",
        metro.summary(),
        metro.isolated_nodes()
    );
    print!("{}", {
        let dir = tempfile::tempdir().expect("temp dir");
        let path = dir.path().join("g.tsv");
        pec::srg::save_graph(&metro, &path)?;
        std::fs::read_to_string(path).expect("written")
    });
    Ok(())
}
