use std::path::PathBuf;
use std::time::Instant;

use gtf_core::graph::grid2d;
use gtf_core::io::write_signal;
use gtf_core::linalg::dot;
use gtf_core::model_eval::noise_snr;
use gtf_core::synthesis::{generate, noise_sweep, write_sweep_csv, Generator, RandomWalkSpec};
use serde::Serialize;

use super::{wall_time, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::files::{read_graph, write_json, write_with};
use crate::Status;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// mixture, poisson-dense, poisson-sparse or random-walk.
    #[arg(long)]
    pub generator: String,
    /// Graph for the non-mixture generators; a `rows x cols` grid otherwise.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    #[arg(long, default_value_t = 20)]
    pub cols: usize,
    /// Nonzeros of the sparse Poisson right-hand side.
    #[arg(long, default_value_t = 30)]
    pub nnz: usize,
    #[arg(long, default_value_t = 10)]
    pub starters: usize,
    #[arg(long = "max-walks", default_value_t = 1000)]
    pub max_walks: usize,
    /// Noise level of the written instance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Order used by GTF and Laplacian smoothing in the sweep.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Input negative SnR levels (dB) of the sweep.
    #[arg(long = "sweep-snr", value_delimiter = ',', allow_hyphen_values = true, default_value = "-10,-5,0,5,10")]
    pub sweep_snr: Vec<f64>,
    #[arg(long)]
    pub no_sweep: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory: graph.txt, truth.csv, signal.csv, instance.json,
    /// sweep.csv.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub record_time: bool,
}

fn generator(a: &Args) -> CliResult<Generator> {
    Ok(match a.generator.as_str() {
        "mixture" => Generator::Mixture { rows: a.rows, cols: a.cols },
        "poisson-dense" => Generator::PoissonDense,
        "poisson-sparse" => Generator::PoissonSparse { nnz: a.nnz },
        "random-walk" => {
            Generator::RandomWalk(RandomWalkSpec { starters: a.starters, max_walks: a.max_walks, ..RandomWalkSpec::default() })
        }
        other => return Err(CliError::usage(format!("unknown generator `{other}`"))),
    })
}

#[derive(Debug, Serialize)]
struct Instance<'a> {
    #[serde(flatten)]
    generator: &'a Generator,
    seed: u64,
    sigma: f64,
    n: usize,
    m: usize,
    noise_snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

pub fn run(a: Args) -> CliResult<Status> {
    let start = Instant::now();
    let gen = generator(&a)?;
    let graph = match (&gen, &a.graph) {
        (Generator::Mixture { .. }, Some(_)) => return Err(CliError::usage("the mixture generator builds its own grid; drop --graph")),
        (_, Some(p)) => Some(read_graph(p)?),
        (Generator::Mixture { .. }, None) => None,
        (_, None) => Some(grid2d(a.rows, a.cols)?),
    };
    let inst = generate(&gen, graph.as_ref(), a.sigma, a.seed)?;
    let dir = &a.output;
    write_with(&dir.join("graph.txt"), |w| inst.graph.write_edge_list(w))?;
    write_with(&dir.join("truth.csv"), |w| write_signal(w, &inst.x))?;
    write_with(&dir.join("signal.csv"), |w| write_signal(w, &inst.y))?;

    let n = inst.graph.n();
    let power = dot(&inst.x, &inst.x) / n as f64;
    if !a.no_sweep {
        if power == 0.0 {
            return Err(CliError::usage("the generated signal is identically zero; nothing to sweep"));
        }
        let sigmas: Vec<f64> = a.sweep_snr.iter().map(|s| (power * 10f64.powf(s / 10.0)).sqrt()).collect();
        let opts = a.solver.options()?;
        let rows = noise_sweep(&inst.graph, &inst.x, a.k, &sigmas, a.seed.wrapping_add(2), &opts)?;
        write_with(&dir.join("sweep.csv"), |w| write_sweep_csv(w, &rows))?;
    }
    let meta = Instance {
        generator: &inst.generator,
        seed: inst.seed,
        sigma: inst.sigma,
        n,
        m: inst.graph.m(),
        noise_snr: (a.sigma > 0.0 && power > 0.0).then(|| noise_snr(&inst.x, a.sigma)).transpose()?,
        wall_time_seconds: wall_time(a.record_time, start),
    };
    write_json(&dir.join("instance.json"), &meta)?;
    Ok(Status::Ok)
}
