//! Subspace clustering on dimensionality-reduced data.
//!
//! The pipeline: draw points from a union of low-dimensional subspaces
//! ([`model`]), optionally compress them with a random projection
//! ([`projection`]), encode each point as a sparse combination of the
//! others ([`graph`]), cluster the resulting affinity graph spectrally
//! ([`spectral`]), and score against ground truth ([`metrics`]). The
//! [`theory`] module evaluates the sufficient conditions under which the
//! graph provably has no false connections.

pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod projection;
pub mod seed;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{
    from_representations, no_false_connections, selection_margins, sscomp_adjacency,
    ssc_adjacency, tsc_adjacency, AdjacencyMatrix, MarginAlgo, SolverParams, SparseRep, SscMode,
    SscResult,
};
pub use metrics::{assignment_min_cost, clustering_error, Matching};
pub use model::{
    add_noise, affinity, make_arrangement, normalized_points, principal_angles, sample_points,
    ArrangementMode, Dataset, SubspaceArrangement,
};
pub use projection::{concentration_probe, make_projection, ProjectionKind, ProjectionOperator};
pub use spectral::{
    connected_components, estimate_num_clusters, kmeans, normalized_laplacian,
    spectral_clustering, SpectralResult,
};
pub use theory::{
    default_tau, phase_sigma_star, ssc_condition, sscomp_ambient_condition, sscomp_condition,
    tsc_condition, tsc_noisy_condition, ConditionInputs, ConditionReport, DEFAULT_C_TILDE,
};
