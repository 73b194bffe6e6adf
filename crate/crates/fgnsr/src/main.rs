//! Command-line front end: generate benchmark instances, select columns from
//! matrix files, run noise-robustness sweeps, and poke the row projection.
//!
//! Exit codes: 0 on success, 2 on input/parse problems, 3 on solver failures.
//! Diagnostics go to stderr; data goes to the requested output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use fgnsr::greedy::{snpa, spa, xray_max};
use fgnsr::io::{
    read_labels, read_matrix, read_vector, write_matrix, write_meta, InstanceMeta, MatrixFormat,
};
use fgnsr::matrix::DenseMatrix;
use fgnsr::metrics::{evaluate, rel_error_pct};
use fgnsr::preselect::{centroids_scaled, simple_split_cluster, ClusterAssignment};
use fgnsr::projection::project_row_detailed;
use fgnsr::solver::{solve, MuMode, Postprocess, SolverConfig};
use fgnsr::synth::{gen_middlepoint, gen_scaled_middlepoint, SyntheticInstance};
use fgnsr::{ColumnWeights, Error};

#[derive(Parser)]
#[command(name = "fgnsr", version, about = "Near-separable NMF column selection toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Middlepoint,
    Scaled,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Algorithm {
    Fgnsr,
    Spa,
    Snpa,
    Xray,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Fgnsr => "fgnsr",
            Algorithm::Spa => "spa",
            Algorithm::Snpa => "snpa",
            Algorithm::Xray => "xray",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum PostprocessArg {
    /// Top diagonal entries without preselection, row selection with it.
    Auto,
    Topdiag,
    SpaRows,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic middle-point instance plus a metadata sidecar.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Scaling bound for the conic variant; ignored for plain middlepoint.
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Bin)]
        format: FormatArg,
    },
    /// Select r columns from a matrix file and report the quality.
    Unmix {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        #[arg(long)]
        r: usize,
        /// heuristic, fixed:<value>, or dynamic:<eps-target>
        #[arg(long, default_value = "heuristic")]
        mu_mode: String,
        #[arg(long, default_value_t = 1000)]
        maxiter: usize,
        #[arg(long, value_enum, default_value_t = PostprocessArg::Auto)]
        postprocess: PostprocessArg,
        /// Cluster the columns down to this many centroids before solving.
        #[arg(long)]
        preselect_c: Option<usize>,
        /// Externally computed cluster labels, one id per line.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Seed for the built-in splitter.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep noise levels x trials x algorithms and write a CSV report.
    Sweep {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long)]
        trials: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        algorithms: Vec<Algorithm>,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        maxiter: usize,
        /// Base seed; each (eps, trial) cell derives its own instance seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a row vector onto the weighted polyhedron.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        pivot: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Io(_)
        | Error::NonFinite(_)
        | Error::DimensionMismatch(_)
        | Error::InvalidConfig(_) => 2,
        _ => 3,
    }
}

fn run(command: Command) -> fgnsr::Result<()> {
    match command {
        Command::Generate { kind, m, r, eps, alpha, seed, out, format } => {
            cmd_generate(kind, m, r, eps, alpha, seed, &out, format)
        }
        Command::Unmix {
            input,
            algorithm,
            r,
            mu_mode,
            maxiter,
            postprocess,
            preselect_c,
            labels,
            seed,
            out,
        } => cmd_unmix(
            &input,
            algorithm,
            r,
            &mu_mode,
            maxiter,
            postprocess,
            preselect_c,
            labels.as_deref(),
            seed,
            &out,
        ),
        Command::Sweep { kind, m, r, eps_list, trials, algorithms, alpha, maxiter, seed, out } => {
            cmd_sweep(kind, m, r, &eps_list, trials, &algorithms, alpha, maxiter, seed, &out)
        }
        Command::Project { input, weights, pivot, out } => {
            cmd_project(&input, &weights, pivot, &out)
        }
    }
}

fn generate_instance(
    kind: Kind,
    m: usize,
    r: usize,
    eps: f64,
    alpha: f64,
    seed: u64,
) -> fgnsr::Result<SyntheticInstance> {
    match kind {
        Kind::Middlepoint => gen_middlepoint(m, r, eps, seed),
        Kind::Scaled => gen_scaled_middlepoint(m, r, eps, alpha, seed),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    kind: Kind,
    m: usize,
    r: usize,
    eps: f64,
    alpha: f64,
    seed: u64,
    out: &Path,
    format: FormatArg,
) -> fgnsr::Result<()> {
    let instance = generate_instance(kind, m, r, eps, alpha, seed)?;
    let fmt = match format {
        FormatArg::Csv => MatrixFormat::Csv,
        FormatArg::Bin => MatrixFormat::Binary,
    };
    write_matrix(&instance.matrix, out, fmt)?;
    let meta = InstanceMeta {
        m: instance.m(),
        n: instance.n(),
        r: instance.r(),
        eps: instance.eps,
        alpha: instance.alpha,
        seed: instance.seed,
        k_true: instance.k_true.clone(),
    };
    write_meta(&meta, &meta_path(out))?;
    eprintln!(
        "wrote {}x{} instance to {} (+ sidecar)",
        instance.m(),
        instance.n(),
        out.display()
    );
    Ok(())
}

fn meta_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.meta.json", out.display()))
}

fn parse_mu_mode(text: &str) -> fgnsr::Result<MuMode> {
    if text == "heuristic" {
        return Ok(MuMode::Heuristic);
    }
    if let Some(value) = text.strip_prefix("fixed:") {
        let mu = value
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad fixed mu value {value:?}")))?;
        return Ok(MuMode::Fixed(mu));
    }
    if let Some(value) = text.strip_prefix("dynamic:") {
        let eps = value
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad dynamic eps target {value:?}")))?;
        return Ok(MuMode::Dynamic { eps_target: eps });
    }
    Err(Error::Parse(format!(
        "mu-mode must be heuristic, fixed:<value> or dynamic:<eps>, got {text:?}"
    )))
}

#[derive(Serialize)]
struct IndexDiagnostic {
    index: usize,
    score: f64,
}

#[derive(Serialize)]
struct UnmixReport {
    algorithm: String,
    r: usize,
    /// Selected indices in the original column space.
    indices: Vec<usize>,
    /// Selected centroid indices when preselection was active.
    #[serde(skip_serializing_if = "Option::is_none")]
    centroid_indices: Option<Vec<usize>>,
    /// Per pick: the final diagonal value (fgnsr) or the residual norm after
    /// the pick (greedy algorithms).
    diagnostics: Vec<IndexDiagnostic>,
    rel_error_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations_run: Option<usize>,
    deficient: bool,
    runtime_seconds: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_unmix(
    input: &Path,
    algorithm: Algorithm,
    r: usize,
    mu_mode_text: &str,
    maxiter: usize,
    postprocess: PostprocessArg,
    preselect_c: Option<usize>,
    labels: Option<&Path>,
    seed: u64,
    out: &Path,
) -> fgnsr::Result<()> {
    let full = read_matrix(input)?;
    let mu_mode = parse_mu_mode(mu_mode_text)?;

    // optional preselection: cluster, then solve on scaled centroids
    let preselected = match (labels, preselect_c) {
        (Some(path), _) => {
            let raw = read_labels(path)?;
            if raw.len() != full.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} columns",
                    raw.len(),
                    full.cols()
                )));
            }
            Some(ClusterAssignment::from_labels(&raw)?)
        }
        (None, Some(c)) => Some(simple_split_cluster(&full, c, seed)?),
        (None, None) => None,
    };
    let centroids = match &preselected {
        Some(assignment) => Some(centroids_scaled(&full, assignment)?),
        None => None,
    };
    let work: &DenseMatrix = centroids.as_ref().map_or(&full, |c| &c.matrix);

    let start = Instant::now();
    let (work_indices, diagnostics, mu_used, iterations_run, deficient) = match algorithm {
        Algorithm::Fgnsr => {
            let mut config = SolverConfig::new(r);
            config.mu_mode = mu_mode;
            config.maxiter = maxiter;
            config.postprocess = match postprocess {
                PostprocessArg::Topdiag => Postprocess::TopDiag,
                PostprocessArg::SpaRows => Postprocess::SpaRows,
                PostprocessArg::Auto => {
                    if centroids.is_some() {
                        Postprocess::SpaRows
                    } else {
                        Postprocess::TopDiag
                    }
                }
            };
            let result = solve(work, &config)?;
            let diag: Vec<IndexDiagnostic> = result
                .indices
                .iter()
                .map(|&i| IndexDiagnostic { index: i, score: result.x_final.get(i, i) })
                .collect();
            (result.indices, diag, Some(result.mu_used), Some(result.iterations_run), result.deficient)
        }
        Algorithm::Spa | Algorithm::Snpa | Algorithm::Xray => {
            let selection = match algorithm {
                Algorithm::Spa => spa(work, r)?,
                Algorithm::Snpa => snpa(work, r)?,
                _ => xray_max(&clamped_nonnegative(work), r)?,
            };
            let diag: Vec<IndexDiagnostic> = selection
                .indices
                .iter()
                .zip(&selection.residual_norms)
                .map(|(&i, &score)| IndexDiagnostic { index: i, score })
                .collect();
            (selection.indices, diag, None, None, false)
        }
    };
    let runtime_seconds = start.elapsed().as_secs_f64();

    let (indices, centroid_indices) = match &centroids {
        Some(c) => {
            let mapped: Vec<usize> = work_indices.iter().map(|&k| c.representatives[k]).collect();
            (mapped, Some(work_indices))
        }
        None => (work_indices, None),
    };

    // quality is always judged against the full data set
    let rel_error = rel_error_pct(&full, &indices)?;

    let report = UnmixReport {
        algorithm: algorithm.name().to_string(),
        r,
        indices,
        centroid_indices,
        diagnostics,
        rel_error_pct: rel_error,
        mu_used,
        iterations_run,
        deficient,
        runtime_seconds,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Parse(format!("cannot encode report: {e}")))?;
    std::fs::write(out, json + "\n")?;
    eprintln!(
        "{}: selected {:?}, relative error {:.4}%",
        algorithm.name(),
        report.indices,
        report.rel_error_pct
    );
    Ok(())
}

/// XRAY operates on the cone of the data and requires nonnegative entries;
/// additive noise can push entries slightly negative, so those are clamped.
fn clamped_nonnegative(m: &DenseMatrix) -> DenseMatrix {
    if m.min_entry() >= 0.0 {
        return m.clone();
    }
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).max(0.0))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    kind: Kind,
    m: usize,
    r: usize,
    eps_list: &[f64],
    trials: usize,
    algorithms: &[Algorithm],
    alpha: f64,
    maxiter: usize,
    seed: u64,
    out: &Path,
) -> fgnsr::Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    if eps_list.is_empty() || algorithms.is_empty() {
        return Err(Error::InvalidConfig("need at least one eps and one algorithm".into()));
    }

    let cells: Vec<(usize, usize)> = (0..eps_list.len())
        .flat_map(|e| (0..trials).map(move |t| (e, t)))
        .collect();

    let cell_rows: Vec<fgnsr::Result<Vec<String>>> = cells
        .par_iter()
        .map(|&(eps_idx, trial)| {
            let eps = eps_list[eps_idx];
            let trial_seed = seed
                .wrapping_add((eps_idx * trials + trial) as u64)
                .wrapping_add(1);
            let instance = generate_instance(kind, m, r, eps, alpha, trial_seed)?;
            let mut rows = Vec::with_capacity(algorithms.len());
            for &algorithm in algorithms {
                let start = Instant::now();
                let indices = match algorithm {
                    Algorithm::Fgnsr => {
                        let mut config = SolverConfig::new(r);
                        config.maxiter = maxiter;
                        solve(&instance.matrix, &config)?.indices
                    }
                    Algorithm::Spa => spa(&instance.matrix, r)?.indices,
                    Algorithm::Snpa => snpa(&instance.matrix, r)?.indices,
                    Algorithm::Xray => {
                        xray_max(&clamped_nonnegative(&instance.matrix), r)?.indices
                    }
                };
                let runtime = start.elapsed().as_secs_f64();
                let report =
                    evaluate(&instance.matrix, &indices, &instance.w_true, &instance.k_true)?;
                rows.push(format!(
                    "{},{},{},{},{},{},{}",
                    algorithm.name(),
                    eps,
                    trial_seed,
                    report.index_recovery,
                    report.mrsa_mean,
                    report.rel_measure,
                    runtime
                ));
            }
            Ok(rows)
        })
        .collect();

    let mut csv = String::from(
        "algorithm,eps,trial_seed,index_recovery,mrsa_mean,rel_measure,runtime_seconds\n",
    );
    for rows in cell_rows {
        for row in rows? {
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    std::fs::write(out, csv)?;
    eprintln!(
        "sweep complete: {} rows to {}",
        eps_list.len() * trials * algorithms.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ProjectReport {
    z: Vec<f64>,
    t_star: f64,
    active_set_size: usize,
}

fn cmd_project(input: &Path, weights: &Path, pivot: usize, out: &Path) -> fgnsr::Result<()> {
    let x = read_vector(input)?;
    let w_values = read_vector(weights)?;
    if x.len() != w_values.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries, weights have {}",
            x.len(),
            w_values.len()
        )));
    }
    if pivot >= x.len() {
        return Err(Error::InvalidConfig(format!(
            "pivot {pivot} out of range for length {}",
            x.len()
        )));
    }
    let w = ColumnWeights::from_values(w_values)?;
    let detail = project_row_detailed(&x, &w, pivot);
    let report = ProjectReport {
        z: detail.z,
        t_star: detail.t_star,
        active_set_size: detail.active_count,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Parse(format!("cannot encode report: {e}")))?;
    std::fs::write(out, json + "\n")?;
    eprintln!("t* = {}, {} active coordinates", report.t_star, report.active_set_size);
    Ok(())
}
