use std::path::PathBuf;
use std::time::Instant;

use gtf_core::io::write_signal;
use gtf_core::model_eval::{lambda_path, LambdaGrid};
use serde::Serialize;

use super::{wall_time, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::files::{read_graph, read_signal, sidecar, write_json, write_with};
use crate::Status;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// `lo:hi:count` (geometric, fitted from hi down to lo) or `auto`.
    #[arg(long = "lambda-grid", default_value = "auto")]
    pub lambda_grid: String,
    /// Ground truth `node,value` CSV; adds mse and snr columns.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Path CSV (`lambda,df,objective,mse,snr`); metadata beside it.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write every fitted signal as `fit_<index>.csv` here.
    #[arg(long)]
    pub fits_dir: Option<PathBuf>,
    #[arg(long)]
    pub record_time: bool,
}

pub fn parse_grid(spec: &str) -> CliResult<LambdaGrid> {
    if spec == "auto" {
        return Ok(LambdaGrid::Auto);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("--lambda-grid must be `lo:hi:count` or `auto`, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(LambdaGrid::geometric(hi, lo, count)?)
}

#[derive(Debug, Serialize)]
struct Metadata {
    command: &'static str,
    n: usize,
    k: usize,
    grid: String,
    requested_method: String,
    points: usize,
    methods: Vec<&'static str>,
    all_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

pub fn run(a: Args) -> CliResult<Status> {
    let start = Instant::now();
    let g = read_graph(&a.graph)?;
    let y = read_signal(&a.signal, g.n())?;
    let truth = a.truth.as_deref().map(|p| read_signal(p, g.n())).transpose()?;
    let grid = parse_grid(&a.lambda_grid)?;
    let method = a.solver.method()?;
    let opts = a.solver.options()?;
    let path = lambda_path(&y, &g, a.k, &grid, truth.as_deref(), method, &opts)?;
    write_with(&a.output, |w| path.write_csv(w))?;
    if let Some(dir) = &a.fits_dir {
        for (i, e) in path.entries.iter().enumerate() {
            write_with(&dir.join(format!("fit_{i:03}.csv")), |w| write_signal(w, &e.fit.beta))?;
        }
    }
    let mut methods: Vec<&'static str> = path.entries.iter().map(|e| e.fit.algorithm.name()).collect();
    methods.dedup();
    let meta = Metadata {
        command: "path",
        n: g.n(),
        k: a.k,
        grid: a.lambda_grid.clone(),
        requested_method: a.solver.method.clone(),
        points: path.entries.len(),
        methods,
        all_converged: path.all_converged(),
        wall_time_seconds: wall_time(a.record_time, start),
    };
    write_json(&sidecar(&a.output), &meta)?;
    Ok(if path.all_converged() { Status::Ok } else { Status::Unconverged })
}
