//! Experiment configuration: TOML-loadable settings with built-in
//! defaults for every experiment kind.

use std::path::Path;

use drsc_core::{Error, ProjectionKind, Result, SolverParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CeVsP,
    PhaseDiagram,
    AmbientSpan,
    ClusterFile,
    TheoryTable,
}

impl ExperimentKind {
    /// Stable identifier used in result rows and seed derivation.
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::CeVsP => "ce_vs_p",
            ExperimentKind::PhaseDiagram => "phase_diagram",
            ExperimentKind::AmbientSpan => "ambient_span",
            ExperimentKind::ClusterFile => "cluster_file",
            ExperimentKind::TheoryTable => "theory_table",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrangementKind {
    Independent,
    SharedIntersection,
    GaussianPartition,
    Orthogonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKindConfig {
    Gaussian,
    FastDft,
    Identity,
}

impl ProjectionKindConfig {
    pub fn id(&self) -> &'static str {
        match self {
            ProjectionKindConfig::Gaussian => "gaussian",
            ProjectionKindConfig::FastDft => "fast_dft",
            ProjectionKindConfig::Identity => "identity",
        }
    }

    pub fn to_core(self) -> ProjectionKind {
        match self {
            ProjectionKindConfig::Gaussian => ProjectionKind::Gaussian,
            ProjectionKindConfig::FastDft => ProjectionKind::FastDft,
            ProjectionKindConfig::Identity => ProjectionKind::Identity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Tsc,
    Ssc,
    SscOmp,
}

impl AlgorithmKind {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmKind::Tsc => "tsc",
            AlgorithmKind::Ssc => "ssc",
            AlgorithmKind::SscOmp => "ssc_omp",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Ambient dimension m.
    pub ambient_dim: usize,
    /// Number of subspaces L.
    pub num_subspaces: usize,
    /// Dimension d of every subspace.
    pub subspace_dim: usize,
    /// Points drawn per subspace.
    pub points_per_subspace: usize,
    pub arrangement: ArrangementKind,
    /// Shared-intersection dimension r; only read for that arrangement.
    pub overlap: usize,
    /// Ambient noise level; each point receives N(0, (sigma^2/m) I).
    pub noise_sigma: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            ambient_dim: 4096,
            num_subspaces: 3,
            subspace_dim: 20,
            points_per_subspace: 80,
            arrangement: ArrangementKind::SharedIntersection,
            overlap: 4,
            noise_sigma: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn dims(&self) -> Vec<usize> {
        vec![self.subspace_dim; self.num_subspaces]
    }

    pub fn counts(&self) -> Vec<usize> {
        vec![self.points_per_subspace; self.num_subspaces]
    }

    pub fn total_points(&self) -> usize {
        self.num_subspaces * self.points_per_subspace
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub kinds: Vec<ProjectionKindConfig>,
    pub p_grid: Vec<usize>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            kinds: vec![ProjectionKindConfig::Gaussian],
            p_grid: vec![8, 16, 32, 64, 128],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub run: Vec<AlgorithmKind>,
    /// Fixed parameters; when absent the grid below is searched on the
    /// unprojected data.
    pub q: Option<usize>,
    pub lambda: Option<f64>,
    pub s_max: Option<usize>,
    pub q_grid: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub s_max_grid: Vec<usize>,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            run: vec![AlgorithmKind::Tsc, AlgorithmKind::Ssc, AlgorithmKind::SscOmp],
            q: None,
            lambda: None,
            s_max: None,
            q_grid: (1..=9).map(|k| 2 * k).collect(),
            lambda_grid: vec![
                0.001, 0.002, 0.004, 0.008, 0.01, 0.02, 0.04, 0.08, 0.1, 0.2,
            ],
            s_max_grid: (1..=9).map(|k| 2 * k).collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rho: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        SolverConfig {
            rho: p.rho,
            abs_tol: p.abs_tol,
            rel_tol: p.rel_tol,
            max_iter: p.max_iter,
        }
    }
}

impl SolverConfig {
    pub fn to_params(&self) -> SolverParams {
        SolverParams {
            rho: self.rho,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub sigma_grid: Vec<f64>,
    /// Transition-curve constants (c1, c2, c3).
    pub curve: [f64; 3],
    /// Number of overlay samples along sqrt(d/p).
    pub curve_samples: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            sigma_grid: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4],
            curve: [0.8, 0.1, 0.8],
            curve_samples: 100,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    /// Normalize ingested points to unit norm (cluster_file only).
    pub normalize_input: bool,
    pub model: ModelConfig,
    pub projection: ProjectionConfig,
    pub algorithms: AlgorithmConfig,
    pub solver: SolverConfig,
    pub phase: PhaseConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::CeVsP,
            trials: 20,
            seed: 1,
            normalize_input: false,
            model: ModelConfig::default(),
            projection: ProjectionConfig::default(),
            algorithms: AlgorithmConfig::default(),
            solver: SolverConfig::default(),
            phase: PhaseConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Transition experiment defaults: three 20-dim subspaces of R^4096
    /// sharing a 4-dim intersection, Gaussian projection sweep.
    pub fn default_ce_vs_p() -> Self {
        ExperimentConfig::default()
    }

    /// Span-the-ambient-space defaults: ten 20-dim subspaces jointly
    /// covering R^200. Parameters are fixed rather than grid-selected
    /// because the unprojected problem at this size is the slowest cell.
    pub fn default_ambient_span() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::AmbientSpan,
            trials: 10,
            model: ModelConfig {
                ambient_dim: 200,
                num_subspaces: 10,
                subspace_dim: 20,
                points_per_subspace: 60,
                arrangement: ArrangementKind::GaussianPartition,
                overlap: 0,
                noise_sigma: 0.0,
            },
            projection: ProjectionConfig {
                kinds: vec![ProjectionKindConfig::Gaussian],
                p_grid: vec![10, 20, 30, 40, 60, 80],
            },
            algorithms: AlgorithmConfig {
                q: Some(15),
                lambda: Some(0.02),
                s_max: Some(20),
                ..AlgorithmConfig::default()
            },
            solver: SolverConfig {
                max_iter: 40,
                ..SolverConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    /// Noise phase-diagram defaults: two orthogonal 10-dim subspaces of
    /// R^100, CE mapped over (sqrt(d/p), sigma).
    pub fn default_phase_diagram() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::PhaseDiagram,
            trials: 10,
            model: ModelConfig {
                ambient_dim: 100,
                num_subspaces: 2,
                subspace_dim: 10,
                points_per_subspace: 30,
                arrangement: ArrangementKind::Orthogonal,
                overlap: 0,
                noise_sigma: 0.0,
            },
            projection: ProjectionConfig {
                kinds: vec![ProjectionKindConfig::Gaussian],
                // sqrt(d/p) of 0.35, 0.45, 0.60, 0.80, 1.00
                p_grid: vec![82, 49, 28, 16, 10],
            },
            algorithms: AlgorithmConfig {
                q: Some(8),
                lambda: Some(0.04),
                s_max: Some(10),
                ..AlgorithmConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    /// Condition-table defaults reuse the transition-experiment model.
    pub fn default_theory_table() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::TheoryTable,
            ..ExperimentConfig::default()
        }
    }

    /// File-clustering defaults: identity projection, fixed parameters.
    pub fn default_cluster_file() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::ClusterFile,
            trials: 1,
            normalize_input: true,
            projection: ProjectionConfig {
                kinds: vec![ProjectionKindConfig::Identity],
                p_grid: Vec::new(),
            },
            algorithms: AlgorithmConfig {
                q: Some(10),
                lambda: Some(0.02),
                s_max: Some(10),
                ..AlgorithmConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    pub fn for_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::CeVsP => Self::default_ce_vs_p(),
            ExperimentKind::PhaseDiagram => Self::default_phase_diagram(),
            ExperimentKind::AmbientSpan => Self::default_ambient_span(),
            ExperimentKind::ClusterFile => Self::default_cluster_file(),
            ExperimentKind::TheoryTable => Self::default_theory_table(),
        }
    }

    /// Loads a TOML config; missing fields fall back to the defaults for
    /// the experiment kind named in the file (or `kind` if absent there).
    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, kind)
    }

    pub fn from_toml(text: &str, kind: ExperimentKind) -> Result<Self> {
        // Two-stage parse: the experiment kind in the file decides which
        // defaults the remaining fields fall back to.
        #[derive(Deserialize)]
        struct KindProbe {
            experiment: Option<ExperimentKind>,
        }
        let probe: KindProbe = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        let base = Self::for_kind(probe.experiment.unwrap_or(kind));
        let mut merged: ExperimentConfig = {
            let defaults = toml::to_string(&base)
                .map_err(|e| Error::Config(format!("config serialize error: {e}")))?;
            let mut doc: toml::Table = defaults
                .parse()
                .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
            let overrides: toml::Table = text
                .parse()
                .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
            merge_tables(&mut doc, overrides);
            toml::Table::try_into(doc)
                .map_err(|e| Error::Config(format!("config field error: {e}")))?
        };
        merged.experiment = probe.experiment.unwrap_or(kind);
        merged.validate()?;
        Ok(merged)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.model.ambient_dim;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.model.num_subspaces == 0 {
            return Err(Error::Config("at least one subspace required".into()));
        }
        if self.model.subspace_dim == 0 || self.model.subspace_dim > m {
            return Err(Error::Config(format!(
                "subspace_dim {} out of range 1..={m}",
                self.model.subspace_dim
            )));
        }
        if self.model.points_per_subspace == 0 {
            return Err(Error::Config("points_per_subspace must be at least 1".into()));
        }
        if self.model.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be nonnegative".into()));
        }
        for &p in &self.projection.p_grid {
            if p == 0 || p > m {
                return Err(Error::Config(format!("p={p} out of range 1..={m}")));
            }
        }
        if self.projection.kinds.is_empty() {
            return Err(Error::Config("at least one projection kind required".into()));
        }
        if self.algorithms.run.is_empty() {
            return Err(Error::Config("at least one algorithm required".into()));
        }
        for kind in &self.algorithms.run {
            match kind {
                AlgorithmKind::Tsc if self.algorithms.q.is_none() => {
                    if self.algorithms.q_grid.is_empty() {
                        return Err(Error::Config("empty q_grid with no fixed q".into()));
                    }
                }
                AlgorithmKind::Ssc if self.algorithms.lambda.is_none() => {
                    if self.algorithms.lambda_grid.is_empty() {
                        return Err(Error::Config(
                            "empty lambda_grid with no fixed lambda".into(),
                        ));
                    }
                }
                AlgorithmKind::SscOmp if self.algorithms.s_max.is_none() => {
                    if self.algorithms.s_max_grid.is_empty() {
                        return Err(Error::Config(
                            "empty s_max_grid with no fixed s_max".into(),
                        ));
                    }
                }
                _ => {}
            }
        }
        if let Some(lambda) = self.algorithms.lambda {
            if !(lambda > 0.0) {
                return Err(Error::Config("lambda must be positive".into()));
            }
        }
        for &sigma in &self.phase.sigma_grid {
            if sigma < 0.0 {
                return Err(Error::Config("sigma grid values must be nonnegative".into()));
            }
        }
        self.solver.to_params().validate()?;
        Ok(())
    }
}

/// Recursive overlay of `src` onto `dst`; tables merge, scalars and
/// arrays replace.
fn merge_tables(dst: &mut toml::Table, src: toml::Table) {
    for (key, value) in src {
        match (dst.get_mut(&key), value) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge_tables(d, s),
            (_, v) => {
                dst.insert(key, v);
            }
        }
    }
}
