//! Minimal end-to-end run: sample a union of subspaces, project it to a
//! lower dimension, build each sparse graph, and report the clustering
//! error of normalized spectral clustering.

use drsc_core::graph::DEFAULT_RESIDUAL_TOL;
use drsc_core::{
    add_noise, clustering_error, make_arrangement, make_projection, sample_points,
    spectral_clustering, ssc_adjacency, sscomp_adjacency, tsc_adjacency, ArrangementMode,
    ProjectionKind, SolverParams, SscMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arrangement = make_arrangement(200, &[10; 4], ArrangementMode::Independent, 7)?;
    let clean = sample_points(&arrangement, &[40; 4], 8)?;
    let ds = add_noise(&clean, 0.1, 9)?;
    let truth = ds.require_labels()?;

    let op = make_projection(ProjectionKind::Gaussian, 200, 40, 10)?;
    let projected = op.apply(&ds.points)?;

    let graphs = [
        ("tsc", tsc_adjacency(&projected, 5)?),
        (
            "ssc",
            ssc_adjacency(
                &projected,
                SscMode::Lasso { lambda: 0.05 },
                &SolverParams::default(),
            )?
            .adjacency,
        ),
        ("ssc_omp", sscomp_adjacency(&projected, 5, DEFAULT_RESIDUAL_TOL)?),
    ];
    for (name, graph) in graphs {
        let clustering = spectral_clustering(&graph.weights, 4, 11)?;
        let ce = clustering_error(&clustering.labels, truth)?.error;
        println!("{name}: ce = {ce:.3}");
    }
    Ok(())
}
