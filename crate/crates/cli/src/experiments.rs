//! Experiment runners: deterministic Monte Carlo sweeps over trials,
//! projection kinds, projection dimensions, and algorithms.
//!
//! Every cell derives its randomness from the master seed through
//! labeled splits, so outputs are byte-identical across runs and thread
//! counts; tasks share no mutable state and rows are emitted in a fixed
//! sort order.

use std::path::Path;
use std::time::Instant;

use drsc_core::graph::DEFAULT_RESIDUAL_TOL;
use drsc_core::seed::{derive_seed, label};
use drsc_core::{
    add_noise, clustering_error, make_arrangement, make_projection, no_false_connections,
    phase_sigma_star, sample_points, spectral_clustering, ssc_adjacency, ssc_condition,
    sscomp_adjacency, sscomp_ambient_condition, sscomp_condition, tsc_adjacency, tsc_condition,
    tsc_noisy_condition, AdjacencyMatrix, ArrangementMode, Dataset, Error, Result, SscMode,
    SubspaceArrangement, DEFAULT_C_TILDE,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{AlgorithmKind, ArrangementKind, ExperimentConfig, ProjectionKindConfig};
use crate::io::{CurveRow, MeanRow, ResultRow, TheoryRow};

/// Parameter values the run actually used, after grid selection.
#[derive(Clone, Copy, Debug)]
pub struct SelectedParams {
    pub q: usize,
    pub lambda: f64,
    pub s_max: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub means: Vec<MeanRow>,
    pub curve: Vec<CurveRow>,
}

/// Runner knobs that belong to the invocation, not the experiment.
#[derive(Clone, Copy, Debug)]
pub struct RunSettings {
    pub threads: usize,
    /// Report zero wall times so output bytes are reproducible.
    pub zero_times: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            threads: 0,
            zero_times: false,
        }
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn arrangement_mode(cfg: &ExperimentConfig) -> ArrangementMode {
    match cfg.model.arrangement {
        ArrangementKind::Independent => ArrangementMode::Independent,
        ArrangementKind::SharedIntersection => ArrangementMode::SharedIntersection {
            overlap: cfg.model.overlap,
        },
        ArrangementKind::GaussianPartition => ArrangementMode::GaussianPartition,
        ArrangementKind::Orthogonal => ArrangementMode::Orthogonal,
    }
}

fn make_trial_arrangement(cfg: &ExperimentConfig, trial: u64) -> Result<SubspaceArrangement> {
    let seed = derive_seed(
        cfg.seed,
        &[label(cfg.experiment.id()), label("arrangement"), trial],
    );
    make_arrangement(
        cfg.model.ambient_dim,
        &cfg.model.dims(),
        arrangement_mode(cfg),
        seed,
    )
}

/// Noiseless points for one trial; same bits for every cell of the trial.
fn trial_dataset(cfg: &ExperimentConfig, trial: u64) -> Result<Dataset> {
    let arrangement = make_trial_arrangement(cfg, trial)?;
    let seed = derive_seed(
        cfg.seed,
        &[label(cfg.experiment.id()), label("points"), trial],
    );
    sample_points(&arrangement, &cfg.model.counts(), seed)
}

fn noisy_trial_dataset(cfg: &ExperimentConfig, trial: u64, sigma: f64) -> Result<Dataset> {
    let ds = trial_dataset(cfg, trial)?;
    if sigma == 0.0 {
        return Ok(ds);
    }
    let seed = derive_seed(
        cfg.seed,
        &[
            label(cfg.experiment.id()),
            label("noise"),
            trial,
            sigma.to_bits(),
        ],
    );
    add_noise(&ds, sigma, seed)
}

fn build_adjacency(
    cfg: &ExperimentConfig,
    sel: &SelectedParams,
    alg: AlgorithmKind,
    points: &DMatrix<f64>,
) -> Result<AdjacencyMatrix> {
    match alg {
        AlgorithmKind::Tsc => tsc_adjacency(points, sel.q),
        AlgorithmKind::Ssc => Ok(ssc_adjacency(
            points,
            SscMode::Lasso { lambda: sel.lambda },
            &cfg.solver.to_params(),
        )?
        .adjacency),
        AlgorithmKind::SscOmp => sscomp_adjacency(points, sel.s_max, DEFAULT_RESIDUAL_TOL),
    }
}

/// Grid search on the unprojected data with oracle cluster count; ties
/// resolve to the smaller parameter value.
pub fn select_params(cfg: &ExperimentConfig) -> Result<SelectedParams> {
    let exp = cfg.experiment.id();
    let settled = |fixed: bool, alg| fixed || !cfg.algorithms.run.contains(&alg);
    let mut sel = SelectedParams {
        q: cfg.algorithms.q.unwrap_or(0),
        lambda: cfg.algorithms.lambda.unwrap_or(0.0),
        s_max: cfg.algorithms.s_max.unwrap_or(0),
    };
    let all_settled = settled(cfg.algorithms.q.is_some(), AlgorithmKind::Tsc)
        && settled(cfg.algorithms.lambda.is_some(), AlgorithmKind::Ssc)
        && settled(cfg.algorithms.s_max.is_some(), AlgorithmKind::SscOmp);
    if all_settled {
        return Ok(sel);
    }
    let ds = {
        let arrangement = make_trial_arrangement_for_selection(cfg)?;
        let seed = derive_seed(cfg.seed, &[label(exp), label("selection"), label("points")]);
        sample_points(&arrangement, &cfg.model.counts(), seed)?
    };
    let ds = if cfg.model.noise_sigma > 0.0 {
        let seed = derive_seed(cfg.seed, &[label(exp), label("selection"), label("noise")]);
        add_noise(&ds, cfg.model.noise_sigma, seed)?
    } else {
        ds
    };
    let truth = ds.require_labels()?.to_vec();
    let l = cfg.model.num_subspaces;
    let score = |adjacency: &AdjacencyMatrix, cluster_seed: u64| -> Result<f64> {
        let spec = spectral_clustering(&adjacency.weights, l, cluster_seed)?;
        Ok(clustering_error(&spec.labels, &truth)?.error)
    };
    if cfg.algorithms.q.is_none() && cfg.algorithms.run.contains(&AlgorithmKind::Tsc) {
        let scores: Vec<(usize, f64)> = cfg
            .algorithms
            .q_grid
            .par_iter()
            .map(|&q| {
                let adj = tsc_adjacency(&ds.points, q)?;
                let seed = derive_seed(
                    cfg.seed,
                    &[label(exp), label("selection"), label("tsc"), q as u64],
                );
                Ok((q, score(&adj, seed)?))
            })
            .collect::<Result<_>>()?;
        sel.q = argmin_value(&scores);
    }
    if cfg.algorithms.lambda.is_none() && cfg.algorithms.run.contains(&AlgorithmKind::Ssc) {
        let scores: Vec<(f64, f64)> = cfg
            .algorithms
            .lambda_grid
            .par_iter()
            .map(|&lambda| {
                let adj = ssc_adjacency(
                    &ds.points,
                    SscMode::Lasso { lambda },
                    &cfg.solver.to_params(),
                )?
                .adjacency;
                let seed = derive_seed(
                    cfg.seed,
                    &[label(exp), label("selection"), label("ssc"), lambda.to_bits()],
                );
                Ok((lambda, score(&adj, seed)?))
            })
            .collect::<Result<_>>()?;
        sel.lambda = argmin_value_f64(&scores);
    }
    if cfg.algorithms.s_max.is_none() && cfg.algorithms.run.contains(&AlgorithmKind::SscOmp) {
        let scores: Vec<(usize, f64)> = cfg
            .algorithms
            .s_max_grid
            .par_iter()
            .map(|&s_max| {
                let adj = sscomp_adjacency(&ds.points, s_max, DEFAULT_RESIDUAL_TOL)?;
                let seed = derive_seed(
                    cfg.seed,
                    &[label(exp), label("selection"), label("ssc_omp"), s_max as u64],
                );
                Ok((s_max, score(&adj, seed)?))
            })
            .collect::<Result<_>>()?;
        sel.s_max = argmin_value(&scores);
    }
    Ok(sel)
}

fn make_trial_arrangement_for_selection(cfg: &ExperimentConfig) -> Result<SubspaceArrangement> {
    let seed = derive_seed(
        cfg.seed,
        &[
            label(cfg.experiment.id()),
            label("selection"),
            label("arrangement"),
        ],
    );
    make_arrangement(
        cfg.model.ambient_dim,
        &cfg.model.dims(),
        arrangement_mode(cfg),
        seed,
    )
}

/// Smallest grid value attaining the minimum score.
fn argmin_value(scores: &[(usize, f64)]) -> usize {
    let mut sorted: Vec<_> = scores.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted[0].0
}

fn argmin_value_f64(scores: &[(f64, f64)]) -> f64 {
    let mut sorted: Vec<_> = scores.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    sorted[0].0
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    trial: u64,
    sigma: f64,
    kind: ProjectionKindConfig,
    p: usize,
    alg: AlgorithmKind,
}

fn alg_rank(alg: AlgorithmKind) -> u8 {
    match alg {
        AlgorithmKind::Tsc => 0,
        AlgorithmKind::Ssc => 1,
        AlgorithmKind::SscOmp => 2,
    }
}

fn kind_rank(kind: ProjectionKindConfig) -> u8 {
    match kind {
        ProjectionKindConfig::Gaussian => 0,
        ProjectionKindConfig::FastDft => 1,
        ProjectionKindConfig::Identity => 2,
    }
}

/// Effective p values for a projection kind: identity always maps to the
/// ambient dimension.
fn p_values(cfg: &ExperimentConfig, kind: ProjectionKindConfig) -> Vec<usize> {
    match kind {
        ProjectionKindConfig::Identity => vec![cfg.model.ambient_dim],
        _ => cfg.projection.p_grid.clone(),
    }
}

/// Projected points, labels, and projection wall time for one sweep cell,
/// reproducing exactly what the harness feeds the adjacency builder.
pub fn cell_inputs(
    cfg: &ExperimentConfig,
    trial: u64,
    sigma: f64,
    kind: ProjectionKindConfig,
    p: usize,
) -> Result<(DMatrix<f64>, Vec<usize>, f64)> {
    let exp = cfg.experiment.id();
    let ds = noisy_trial_dataset(cfg, trial, sigma)?;
    let truth = ds.require_labels()?.to_vec();
    let projection_seed = derive_seed(
        cfg.seed,
        &[
            label(exp),
            label("projection"),
            label(kind.id()),
            trial,
            p as u64,
        ],
    );
    let t0 = Instant::now();
    let op = make_projection(kind.to_core(), cfg.model.ambient_dim, p, projection_seed)?;
    let projected = op.apply(&ds.points)?;
    Ok((projected, truth, t0.elapsed().as_secs_f64()))
}

fn run_cell(cfg: &ExperimentConfig, sel: &SelectedParams, cell: &Cell, zero_times: bool) -> Result<ResultRow> {
    let exp = cfg.experiment.id();
    let trial_seed = derive_seed(
        cfg.seed,
        &[
            label(exp),
            cell.trial,
            cell.p as u64,
            label(cell.alg.id()),
        ],
    );
    let (projected, truth, projection_time_s) =
        cell_inputs(cfg, cell.trial, cell.sigma, cell.kind, cell.p)?;
    let t1 = Instant::now();
    let adjacency = build_adjacency(cfg, sel, cell.alg, &projected)?;
    let adjacency_time_s = t1.elapsed().as_secs_f64();
    let cluster_seed = derive_seed(trial_seed, &[label("spectral"), label(cell.kind.id())]);
    let t2 = Instant::now();
    let spec = spectral_clustering(&adjacency.weights, cfg.model.num_subspaces, cluster_seed)?;
    let spectral_time_s = t2.elapsed().as_secs_f64();
    let ce = clustering_error(&spec.labels, &truth)?.error;
    let (nfc, _) = no_false_connections(&adjacency, &truth);
    Ok(ResultRow {
        experiment: exp.to_string(),
        algorithm: cell.alg.id().to_string(),
        projection: cell.kind.id().to_string(),
        p: cell.p,
        sigma: cell.sigma,
        trial_seed,
        ce,
        nfc,
        projection_time_s: if zero_times { 0.0 } else { projection_time_s },
        adjacency_time_s: if zero_times { 0.0 } else { adjacency_time_s },
        spectral_time_s: if zero_times { 0.0 } else { spectral_time_s },
    })
}

fn run_cells(
    cfg: &ExperimentConfig,
    sel: &SelectedParams,
    sigmas: &[f64],
    settings: &RunSettings,
) -> Result<Vec<ResultRow>> {
    let mut cells = Vec::new();
    for trial in 0..cfg.trials as u64 {
        for &sigma in sigmas {
            for &kind in &cfg.projection.kinds {
                for p in p_values(cfg, kind) {
                    for &alg in &cfg.algorithms.run {
                        cells.push(Cell {
                            trial,
                            sigma,
                            kind,
                            p,
                            alg,
                        });
                    }
                }
            }
        }
    }
    // Emission order: (trial, p, algorithm), then projection kind and
    // noise level. Parallel collection preserves input order, so sorting
    // the cells up front fixes the row order.
    cells.sort_by(|a, b| {
        (a.trial, a.p, alg_rank(a.alg), kind_rank(a.kind))
            .cmp(&(b.trial, b.p, alg_rank(b.alg), kind_rank(b.kind)))
            .then(a.sigma.total_cmp(&b.sigma))
    });
    let pool = thread_pool(settings.threads)?;
    let rows: Vec<ResultRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(cfg, sel, cell, settings.zero_times))
            .collect::<Result<_>>()
    })?;
    Ok(rows)
}

fn mean_rows(rows: &[ResultRow]) -> Vec<MeanRow> {
    let mut keys: Vec<(&str, &str, usize, u64)> = rows
        .iter()
        .map(|r| {
            (
                r.algorithm.as_str(),
                r.projection.as_str(),
                r.p,
                r.sigma.to_bits(),
            )
        })
        .collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|&(alg, kind, p, sigma_bits)| {
            let members: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| {
                    r.algorithm == alg
                        && r.projection == kind
                        && r.p == p
                        && r.sigma.to_bits() == sigma_bits
                })
                .collect();
            let n = members.len() as f64;
            MeanRow {
                experiment: members[0].experiment.clone(),
                algorithm: alg.to_string(),
                projection: kind.to_string(),
                p,
                sigma: f64::from_bits(sigma_bits),
                trials: members.len(),
                mean_ce: members.iter().map(|r| r.ce).sum::<f64>() / n,
                nfc_fraction: members.iter().filter(|r| r.nfc).count() as f64 / n,
                mean_projection_time_s: members.iter().map(|r| r.projection_time_s).sum::<f64>()
                    / n,
                mean_adjacency_time_s: members.iter().map(|r| r.adjacency_time_s).sum::<f64>()
                    / n,
                mean_spectral_time_s: members.iter().map(|r| r.spectral_time_s).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Clustering error as a function of the projection dimension.
pub fn run_ce_vs_p(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<RunOutput> {
    cfg.validate()?;
    let sel = select_params(cfg)?;
    let sigmas = [cfg.model.noise_sigma];
    let rows = run_cells(cfg, &sel, &sigmas, settings)?;
    let means = mean_rows(&rows);
    Ok(RunOutput {
        means,
        rows,
        curve: Vec::new(),
    })
}

/// Clustering error over the (sqrt(d/p), sigma) plane, with transition
/// curve samples for overlay.
pub fn run_phase_diagram(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.phase.sigma_grid.is_empty() {
        return Err(Error::Config("phase experiment needs a sigma grid".into()));
    }
    let sel = select_params(cfg)?;
    let rows = run_cells(cfg, &sel, &cfg.phase.sigma_grid, settings)?;
    let means = mean_rows(&rows);
    let curve = curve_samples(cfg);
    Ok(RunOutput { rows, means, curve })
}

fn curve_samples(cfg: &ExperimentConfig) -> Vec<CurveRow> {
    let d = cfg.model.subspace_dim as f64;
    let m = cfg.model.ambient_dim as f64;
    let [c1, c2, c3] = cfg.phase.curve;
    let samples = cfg.phase.curve_samples.max(2);
    let x_min = (d / m).sqrt();
    let x_max = 1.0;
    (0..samples)
        .filter_map(|i| {
            let x = x_min + (x_max - x_min) * i as f64 / (samples - 1) as f64;
            let p = d / (x * x);
            phase_sigma_star(d, p, c1, c2, c3).map(|sigma_star| CurveRow {
                sqrt_d_over_p: x,
                sigma_star,
            })
        })
        .collect()
}

/// Labels written per cell by `cluster_file`.
#[derive(Clone, Debug)]
pub struct PredictedLabels {
    pub algorithm: String,
    pub projection: String,
    pub p: usize,
    pub labels: Vec<usize>,
}

/// Clusters points loaded from a file; rows carry CE only when ground
/// truth is supplied.
pub fn cluster_file(
    cfg: &ExperimentConfig,
    points_path: &Path,
    labels_path: Option<&Path>,
    settings: &RunSettings,
) -> Result<(Vec<ResultRow>, Vec<PredictedLabels>)> {
    cfg.validate()?;
    let raw = crate::io::load_points(points_path)?;
    let points = if cfg.normalize_input {
        drsc_core::linalg::normalize_columns(&raw)
    } else {
        raw
    };
    let m = points.nrows();
    if m != cfg.model.ambient_dim {
        return Err(Error::Dimension(format!(
            "file has dimension {m}, config expects {}",
            cfg.model.ambient_dim
        )));
    }
    let truth = match labels_path {
        Some(path) => Some(crate::io::load_labels(path, points.ncols())?),
        None => None,
    };
    let sel = SelectedParams {
        q: cfg.algorithms.q.ok_or_else(|| {
            Error::Config("cluster_file requires a fixed q".into())
        })?,
        lambda: cfg.algorithms.lambda.ok_or_else(|| {
            Error::Config("cluster_file requires a fixed lambda".into())
        })?,
        s_max: cfg.algorithms.s_max.ok_or_else(|| {
            Error::Config("cluster_file requires a fixed s_max".into())
        })?,
    };
    let exp = cfg.experiment.id();
    let mut cells = Vec::new();
    for &kind in &cfg.projection.kinds {
        for p in p_values(cfg, kind) {
            for &alg in &cfg.algorithms.run {
                cells.push((kind, p, alg));
            }
        }
    }
    let pool = thread_pool(settings.threads)?;
    let outcomes: Vec<(Option<ResultRow>, PredictedLabels)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(kind, p, alg)| {
                let projection_seed = derive_seed(
                    cfg.seed,
                    &[label(exp), label("projection"), label(kind.id()), 0, p as u64],
                );
                let t0 = Instant::now();
                let op = make_projection(kind.to_core(), m, p, projection_seed)?;
                let projected = op.apply(&points)?;
                let projection_time_s = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let adjacency = build_adjacency(cfg, &sel, alg, &projected)?;
                let adjacency_time_s = t1.elapsed().as_secs_f64();
                let trial_seed =
                    derive_seed(cfg.seed, &[label(exp), 0, p as u64, label(alg.id())]);
                let cluster_seed =
                    derive_seed(trial_seed, &[label("spectral"), label(kind.id())]);
                let t2 = Instant::now();
                let spec = spectral_clustering(
                    &adjacency.weights,
                    cfg.model.num_subspaces,
                    cluster_seed,
                )?;
                let spectral_time_s = t2.elapsed().as_secs_f64();
                let predicted = PredictedLabels {
                    algorithm: alg.id().to_string(),
                    projection: kind.id().to_string(),
                    p,
                    labels: spec.labels.clone(),
                };
                let row = match &truth {
                    Some(t) => {
                        let ce = clustering_error(&spec.labels, t)?.error;
                        let (nfc, _) = no_false_connections(&adjacency, t);
                        Some(ResultRow {
                            experiment: exp.to_string(),
                            algorithm: alg.id().to_string(),
                            projection: kind.id().to_string(),
                            p,
                            sigma: 0.0,
                            trial_seed,
                            ce,
                            nfc,
                            projection_time_s: if settings.zero_times {
                                0.0
                            } else {
                                projection_time_s
                            },
                            adjacency_time_s: if settings.zero_times {
                                0.0
                            } else {
                                adjacency_time_s
                            },
                            spectral_time_s: if settings.zero_times {
                                0.0
                            } else {
                                spectral_time_s
                            },
                        })
                    }
                    None => None,
                };
                Ok((row, predicted))
            })
            .collect::<Result<_>>()
    })?;
    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    for (row, predicted) in outcomes {
        if let Some(r) = row {
            rows.push(r);
        }
        predictions.push(predicted);
    }
    Ok((rows, predictions))
}

/// Evaluates every recovery condition on the configured arrangement over
/// the p-grid, using the measured maximum affinity.
pub fn run_theory_table(cfg: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    cfg.validate()?;
    let arrangement = make_trial_arrangement(cfg, 0)?;
    let max_aff = arrangement.max_affinity()?;
    let d = cfg.model.subspace_dim as f64;
    let n_points = cfg.model.total_points() as f64;
    let num_subspaces = cfg.model.num_subspaces as f64;
    let rho_min = (cfg.model.points_per_subspace.saturating_sub(1)) as f64 / d;
    let tau = drsc_core::default_tau(n_points);
    let sigma = cfg.model.noise_sigma;
    let mut out = Vec::new();
    for &p_int in &cfg.projection.p_grid {
        let p = p_int as f64;
        let mut push = |name: &str, report: drsc_core::ConditionReport| {
            out.push(TheoryRow {
                condition: name.to_string(),
                p: p_int,
                max_affinity: max_aff,
                lhs: report.lhs,
                rhs: report.rhs,
                margin: report.margin,
                satisfied: report.satisfied,
            });
        };
        push(
            "tsc",
            tsc_condition(max_aff, d, p, n_points, DEFAULT_C_TILDE)?,
        );
        push(
            "ssc",
            ssc_condition(
                max_aff,
                d,
                p,
                n_points,
                num_subspaces,
                rho_min,
                tau,
                DEFAULT_C_TILDE,
            )?,
        );
        push(
            "ssc_omp",
            sscomp_condition(
                max_aff,
                d,
                d,
                p,
                n_points,
                num_subspaces,
                rho_min,
                tau,
                DEFAULT_C_TILDE,
            )?,
        );
        push(
            "tsc_noisy",
            tsc_noisy_condition(max_aff, d, p, n_points, sigma, DEFAULT_C_TILDE)?,
        );
        push(
            "ssc_omp_ambient",
            sscomp_ambient_condition(max_aff, n_points, rho_min)?,
        );
    }
    Ok(out)
}
