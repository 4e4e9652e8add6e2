pub mod denoise;
pub mod path;
pub mod simulate;
pub mod theory;
pub mod transduce;

use std::time::Instant;

use gtf_core::solvers::{Method, SolverOptions};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    /// auto, admm, newton or maxflow.
    #[arg(long, default_value = "auto")]
    pub method: String,
    /// Fixed initial ADMM penalty parameter (default max(λ, 1e-3)).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-iters", default_value_t = 5000)]
    pub max_iters: usize,
}

impl SolverArgs {
    pub fn method(&self) -> CliResult<Method> {
        self.method.parse::<Method>().map_err(CliError::from)
    }

    pub fn options(&self) -> CliResult<SolverOptions> {
        let o = SolverOptions { rho: self.rho, tolerance: self.tol, max_iterations: self.max_iters, ..SolverOptions::default() };
        o.validate()?;
        Ok(o)
    }
}

/// Wall-clock seconds since `start`, only when requested; left out by
/// default so repeated runs write identical bytes.
pub fn wall_time(record: bool, start: Instant) -> Option<f64> {
    record.then(|| start.elapsed().as_secs_f64())
}
