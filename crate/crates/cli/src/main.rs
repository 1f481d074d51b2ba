use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drsc_cli::{
    cluster_file, io, run_ce_vs_p, run_phase_diagram, run_theory_table, ExperimentConfig,
    ExperimentKind, RunSettings,
};
use drsc_core::Result;

/// Subspace clustering benchmarks on dimensionality-reduced data.
#[derive(Parser)]
#[command(name = "drsc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config; omitted fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output CSV path; derived files use its stem.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clustering error versus projection dimension.
    CeVsP(CommonArgs),
    /// Clustering error over the (sqrt(d/p), sigma) plane.
    Phase(CommonArgs),
    /// Subspaces jointly spanning the ambient space.
    Ambient(CommonArgs),
    /// Cluster points loaded from a file.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        /// Points file: CSV (one point per row) or DRSC binary.
        #[arg(long)]
        data: PathBuf,
        /// Optional ground-truth labels, one integer per line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Recovery-condition table for the configured arrangement.
    Theory(CommonArgs),
    /// Determinism check: identical output bytes across thread counts.
    Selftest(CommonArgs),
}

fn load_config(common: &CommonArgs, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path, kind)?,
        None => ExperimentConfig::for_kind(kind),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(common: &CommonArgs, default_name: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name))
}

/// Sibling path sharing the stem: results.csv -> results_means.csv.
fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    base.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn run_sweep(common: &CommonArgs, kind: ExperimentKind, default_name: &str) -> Result<()> {
    let cfg = load_config(common, kind)?;
    let settings = RunSettings {
        threads: common.threads,
        zero_times: false,
    };
    let out = match kind {
        ExperimentKind::PhaseDiagram => run_phase_diagram(&cfg, &settings)?,
        _ => run_ce_vs_p(&cfg, &settings)?,
    };
    let path = out_path(common, default_name);
    io::write_csv(&path, &out.rows)?;
    io::write_csv(&derived_path(&path, "means"), &out.means)?;
    if !out.curve.is_empty() {
        io::write_csv(&derived_path(&path, "curve"), &out.curve)?;
    }
    println!(
        "{}: {} rows, {} cells -> {}",
        cfg.experiment.id(),
        out.rows.len(),
        out.means.len(),
        path.display()
    );
    Ok(())
}

fn run_cluster(
    common: &CommonArgs,
    data: &Path,
    labels: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(common, ExperimentKind::ClusterFile)?;
    let settings = RunSettings {
        threads: common.threads,
        zero_times: false,
    };
    let (rows, predictions) = cluster_file(&cfg, data, labels, &settings)?;
    let path = out_path(common, "cluster_file.csv");
    if !rows.is_empty() {
        io::write_csv(&path, &rows)?;
    }
    for pred in &predictions {
        let tag = format!("labels_{}_{}_p{}", pred.algorithm, pred.projection, pred.p);
        let label_path = derived_path(&path, &tag).with_extension("txt");
        io::save_labels(&label_path, &pred.labels)?;
    }
    println!(
        "cluster_file: {} result rows, {} label files",
        rows.len(),
        predictions.len()
    );
    Ok(())
}

fn run_theory(common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common, ExperimentKind::TheoryTable)?;
    let rows = run_theory_table(&cfg)?;
    let path = out_path(common, "theory_table.csv");
    io::write_csv(&path, &rows)?;
    println!("theory_table: {} rows -> {}", rows.len(), path.display());
    Ok(())
}

/// Runs a one-trial transition sweep twice, single- and multi-threaded,
/// and requires byte-identical CSV output (wall times zeroed).
fn run_selftest(common: &CommonArgs) -> Result<()> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path, ExperimentKind::CeVsP)?,
        None => ExperimentConfig::default_ce_vs_p(),
    };
    cfg.trials = 1;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let single = run_ce_vs_p(
        &cfg,
        &RunSettings {
            threads: 1,
            zero_times: true,
        },
    )?;
    let threaded = run_ce_vs_p(
        &cfg,
        &RunSettings {
            threads: 8,
            zero_times: true,
        },
    )?;
    let a_rows = io::csv_bytes(&single.rows)?;
    let b_rows = io::csv_bytes(&threaded.rows)?;
    let a_means = io::csv_bytes(&single.means)?;
    let b_means = io::csv_bytes(&threaded.means)?;
    if a_rows != b_rows || a_means != b_means {
        return Err(drsc_core::Error::Numerical(
            "selftest failed: output differs between 1 and 8 threads".into(),
        ));
    }
    if let Some(out) = &common.out {
        std::fs::write(out, &a_rows)
            .map_err(|e| drsc_core::Error::Config(format!("cannot write {}: {e}", out.display())))?;
    }
    println!(
        "selftest ok: {} rows byte-identical across thread counts",
        single.rows.len()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::CeVsP(common) => run_sweep(common, ExperimentKind::CeVsP, "ce_vs_p.csv"),
        Command::Phase(common) => {
            run_sweep(common, ExperimentKind::PhaseDiagram, "phase_diagram.csv")
        }
        Command::Ambient(common) => {
            run_sweep(common, ExperimentKind::AmbientSpan, "ambient_span.csv")
        }
        Command::Cluster {
            common,
            data,
            labels,
        } => run_cluster(common, data, labels.as_deref()),
        Command::Theory(common) => run_theory(common),
        Command::Selftest(common) => run_selftest(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
