use std::io::{self, Write};
use std::path::PathBuf;

use gtf_core::theory::{run_suite, write_json_lines, SuiteConfig, CHECK_NAMES};

use crate::error::{CliError, CliResult};
use crate::files::write_with;
use crate::Status;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Check to run; repeat for several. All checks run when omitted.
    #[arg(long = "check", value_parser = clap::builder::PossibleValuesParser::new(CHECK_NAMES))]
    pub checks: Vec<String>,
    /// Size override (chain length or grid side, depending on the check).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Replicates per size for the rate check.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(a: Args) -> CliResult<Status> {
    let cfg = SuiteConfig { n: a.n, k: a.k, reps: a.reps, seed: a.seed };
    let names: Vec<&str> = a.checks.iter().map(String::as_str).collect();
    let reports = run_suite(&names, &cfg)?;
    match &a.output {
        Some(p) => write_with(p, |w| write_json_lines(&reports, w))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_json_lines(&reports, &mut lock)?;
            lock.flush().map_err(|e| CliError::Core(e.into()))?;
        }
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("failed: {} {:?} computed {} bound {}", r.check, r.params, r.computed, r.bound);
    }
    Ok(if failed.is_empty() { Status::Ok } else { Status::FailedCheck })
}
