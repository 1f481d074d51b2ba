//! Benchmark harness: configuration, dataset and result serialization,
//! and the deterministic experiment runners behind the `drsc` binary.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::{
    AlgorithmConfig, AlgorithmKind, ArrangementKind, ExperimentConfig, ExperimentKind,
    ModelConfig, PhaseConfig, ProjectionConfig, ProjectionKindConfig, SolverConfig,
};
pub use experiments::{
    cell_inputs, cluster_file, run_ce_vs_p, run_phase_diagram, run_theory_table, select_params,
    PredictedLabels, RunOutput, RunSettings, SelectedParams,
};
pub use io::{CurveRow, MeanRow, ResultRow, TheoryRow};
