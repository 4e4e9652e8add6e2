use std::path::PathBuf;
use std::time::Instant;

use gtf_core::graph::{knn_graph, Graph};
use gtf_core::GtfError;
use gtf_core::io::write_labels;
use gtf_core::transduction::{
    draw_seeds, mad_gtf, mad_laplacian, misclassification_rate, unobserved, ClassDiagnostics, MadProblem, DEFAULT_EPSILON,
};
use serde::Serialize;

use super::{wall_time, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::files::{read_features, read_graph, read_labels, sidecar, write_json, write_with};
use crate::Status;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Edge list of the graph; alternatively build one from --features.
    #[arg(long, conflicts_with = "features")]
    pub graph: Option<PathBuf>,
    /// Numeric feature rows, one per node; joined by a symmetric kNN graph.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub knn: usize,
    /// Observed seed labels, `node,class` CSV.
    #[arg(long, conflicts_with = "seeds_per_class")]
    pub seeds: Option<PathBuf>,
    /// Draw this many seeds per class from --truth with --seed.
    #[arg(long = "seeds-per-class", requires = "truth")]
    pub seeds_per_class: Option<usize>,
    /// True labels of every node; enables the misclassification rate.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Number of classes (default: one past the largest label seen).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// `uniform` (1/K everywhere) or a CSV of n rows with K weights each.
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// gtf or laplacian.
    #[arg(long, default_value = "gtf")]
    pub baseline: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Imputed labels for all nodes as `node,class`; metadata beside it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Debug, Serialize)]
struct Metadata {
    command: &'static str,
    method: String,
    n: usize,
    m: usize,
    classes: usize,
    k: usize,
    lambda: f64,
    epsilon: f64,
    prior: String,
    observed: usize,
    misclassification: Option<f64>,
    converged: bool,
    diagnostics: Vec<ClassDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

fn load_graph(a: &Args) -> CliResult<Graph> {
    match (&a.graph, &a.features) {
        (Some(p), None) => read_graph(p),
        (None, Some(p)) => Ok(knn_graph(&read_features(p)?, a.knn)?),
        _ => Err(CliError::usage("give exactly one of --graph or --features")),
    }
}

pub fn run(a: Args) -> CliResult<Status> {
    let start = Instant::now();
    let g = load_graph(&a)?;
    let n = g.n();
    let truth_pairs = a.truth.as_deref().map(|p| read_labels(p, n)).transpose()?;
    let truth: Option<Vec<usize>> = match &truth_pairs {
        Some(t) if t.len() != n => return Err(CliError::usage(format!("--truth labels {} of {n} nodes", t.len()))),
        Some(t) => Some(t.iter().map(|p| p.1).collect()),
        None => None,
    };
    let seen_max = |pairs: &[(usize, usize)]| pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let seeds_file = a.seeds.as_deref().map(|p| read_labels(p, n)).transpose()?;
    let classes = a
        .classes
        .unwrap_or_else(|| seen_max(seeds_file.as_deref().unwrap_or(&[])).max(seen_max(truth_pairs.as_deref().unwrap_or(&[]))));
    let seeds = match (seeds_file, a.seeds_per_class, &truth) {
        (Some(s), _, _) => s,
        (None, Some(per), Some(t)) => draw_seeds(t, classes, per, a.seed)?,
        _ => return Err(CliError::usage("give --seeds, or --seeds-per-class with --truth")),
    };
    let mut p = MadProblem::from_seeds(&g, classes, &seeds, a.lambda, a.k)?;
    p.epsilon = a.epsilon;
    if a.prior != "uniform" {
        let path = std::path::Path::new(&a.prior);
        let rows = read_features(path)?;
        let bad = |expected, got| CliError::File { path: path.to_path_buf(), source: GtfError::DimensionMismatch { expected, got } };
        if rows.len() != n {
            return Err(bad(n, rows.len()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != classes {
                return Err(bad(classes, r.len()));
            }
            for (j, &w) in r.iter().enumerate() {
                p.prior[(i, j)] = w;
            }
        }
        p.validate()?;
    }
    let opts = a.solver.options()?;
    let fit = match a.baseline.as_str() {
        "gtf" => mad_gtf(&p, &opts)?,
        "laplacian" => mad_laplacian(&p, &opts)?,
        other => return Err(CliError::usage(format!("--baseline must be gtf or laplacian, got `{other}`"))),
    };
    let labels: Vec<(usize, usize)> = fit.labels.iter().copied().enumerate().collect();
    write_with(&a.output, |w| write_labels(w, &labels))?;
    let misclassification = match &truth {
        Some(t) => {
            let eval = unobserved(n, &p.observed);
            if eval.is_empty() {
                None
            } else {
                Some(misclassification_rate(&fit.labels, t, &eval)?)
            }
        }
        None => None,
    };
    let converged = fit.converged();
    let meta = Metadata {
        command: "transduce",
        method: format!("mad-{}", a.baseline),
        n,
        m: g.m(),
        classes,
        k: a.k,
        lambda: a.lambda,
        epsilon: a.epsilon,
        prior: a.prior.clone(),
        observed: p.observed.len(),
        misclassification,
        converged,
        diagnostics: fit.diagnostics,
        wall_time_seconds: wall_time(a.record_time, start),
    };
    write_json(&sidecar(&a.output), &meta)?;
    Ok(if converged { Status::Ok } else { Status::Unconverged })
}
