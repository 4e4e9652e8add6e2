use std::path::PathBuf;
use std::time::Instant;

use gtf_core::io::write_signal;
use gtf_core::model_eval::estimate_df;
use gtf_core::solvers::{solve, sparse_gtf, Method};
use serde::Serialize;

use super::{wall_time, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::files::{read_graph, read_signal, sidecar, write_json, write_with};
use crate::Status;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Edge list: `n m` header, then `i j [w]` per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Observations as `node,value` CSV.
    #[arg(long)]
    pub signal: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long)]
    pub lambda: f64,
    /// Extra ℓ1 penalty on the signal itself (sparse GTF).
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Fitted signal CSV; metadata goes to the same path with `.json`.
    #[arg(long)]
    pub output: PathBuf,
    /// Add `wall_time_seconds` to the metadata.
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Debug, Serialize)]
struct Metadata {
    command: &'static str,
    n: usize,
    k: usize,
    lambda: f64,
    lambda2: f64,
    requested_method: String,
    method: &'static str,
    df: Option<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    polished: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

pub fn run(a: Args) -> CliResult<Status> {
    let start = Instant::now();
    let g = read_graph(&a.graph)?;
    let y = read_signal(&a.signal, g.n())?;
    let method = a.solver.method()?;
    let opts = a.solver.options()?;
    if a.lambda2.is_nan() || a.lambda2 < 0.0 {
        return Err(CliError::usage("--lambda2 must be nonnegative"));
    }
    let fit = if a.lambda2 > 0.0 {
        if !matches!(method, Method::Auto | Method::Admm) {
            return Err(CliError::usage("--lambda2 needs --method auto or admm"));
        }
        sparse_gtf(&y, &g, a.k, a.lambda, a.lambda2, &opts)?
    } else {
        solve(&y, &g, a.k, a.lambda, method, &opts)?
    };
    let df = if a.lambda2 > 0.0 { None } else { Some(estimate_df(&fit, &g)?) };
    write_with(&a.output, |w| write_signal(w, &fit.beta))?;
    let meta = Metadata {
        command: "denoise",
        n: g.n(),
        k: a.k,
        lambda: a.lambda,
        lambda2: a.lambda2,
        requested_method: a.solver.method.clone(),
        method: fit.algorithm.name(),
        df,
        objective: fit.objective,
        iterations: fit.iterations,
        converged: fit.converged,
        polished: fit.polished,
        wall_time_seconds: wall_time(a.record_time, start),
    };
    write_json(&sidecar(&a.output), &meta)?;
    Ok(if fit.converged { Status::Ok } else { Status::Unconverged })
}
