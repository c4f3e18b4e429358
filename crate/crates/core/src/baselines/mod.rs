//! Comparison clusterers: spectral clustering on the symmetric normalized
//! Laplacian and agglomerative hierarchical clustering.

mod eigen;
mod hca;
mod spectral;

pub use eigen::symmetric_eigen;
pub use hca::{graph_distances, hca, hca_points, Hierarchy, Linkage};
pub use spectral::{
    normalized_laplacian, spectral_cluster, spectral_embedding, SpectralClustering,
    SpectralEmbedding,
};
