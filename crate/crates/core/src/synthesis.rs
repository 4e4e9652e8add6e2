//! Synthetic ground truths and noise: Gaussian mixtures over planar
//! coordinates, Poisson-equation signals `Lx = b`, decaying random walks.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, GtfError, Result};
use crate::graph::{grid2d, grid2d_coords, laplacian, Graph};
use crate::linalg::{dot, norm2, pcg};
use crate::model_eval::{fmt_float, lambda_path, mse, noise_snr, LambdaGrid};
use crate::solvers::{laplacian_smooth, Method, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub mean: [f64; 2],
    pub scale: f64,
    pub amplitude: f64,
}

/// `xᵢ = Σ_c a_c exp(−‖pᵢ − m_c‖² / (2 s_c²))`
pub fn gaussian_mixture_signal(coords: &[[f64; 2]], centers: &[GaussianBump]) -> Result<Vec<f64>> {
    if let Some(c) = centers.iter().find(|c| !(c.scale > 0.0)) {
        return Err(GtfError::InvalidParameter(format!("bump scale must be positive, got {}", c.scale)));
    }
    Ok(coords
        .iter()
        .map(|p| {
            centers
                .iter()
                .map(|c| {
                    let d2 = (p[0] - c.mean[0]).powi(2) + (p[1] - c.mean[1]).powi(2);
                    c.amplitude * (-d2 / (2.0 * c.scale * c.scale)).exp()
                })
                .sum()
        })
        .collect())
}

/// Five bumps on a `rows x cols` grid: two sharp peaks near the middle over
/// three broad, lower swells, so the smoothness varies across the domain.
pub fn five_bump_mixture(rows: usize, cols: usize) -> Vec<GaussianBump> {
    let (w, h) = (cols as f64, rows as f64);
    let s = w.max(h);
    let at = |fx: f64, fy: f64, scale: f64, amplitude: f64| GaussianBump {
        mean: [fx * (w - 1.0), fy * (h - 1.0)],
        scale: scale * s,
        amplitude,
    };
    vec![
        at(0.45, 0.5, 0.04, 4.0),
        at(0.58, 0.42, 0.05, 3.0),
        at(0.2, 0.25, 0.25, 1.5),
        at(0.8, 0.3, 0.2, 1.0),
        at(0.7, 0.8, 0.3, 1.2),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoissonMode {
    Dense,
    Sparse { nnz: usize },
}

/// Right-hand side `b` before centering: i.i.d. standard normal, on all
/// nodes or on `nnz` nodes drawn without replacement.
pub fn poisson_rhs(n: usize, mode: PoissonMode, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = vec![0.0; n];
    match mode {
        PoissonMode::Dense => b.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng)),
        PoissonMode::Sparse { nnz } => {
            if nnz > n {
                return Err(GtfError::InvalidParameter(format!("nnz = {nnz} exceeds n = {n}")));
            }
            let mut idx = sample(&mut rng, n, nnz).into_vec();
            idx.sort_unstable();
            for i in idx {
                // a zero draw has probability zero; redraw to keep exactly nnz
                let mut v: f64 = 0.0;
                while v == 0.0 {
                    v = StandardNormal.sample(&mut rng);
                }
                b[i] = v;
            }
        }
    }
    Ok(b)
}

/// `x = L†b` for the centered draw `b ← b − mean(b)`, solved by PCG on the
/// mean-zero subspace of a connected graph.
pub fn poisson_equation_signal(g: &Graph, mode: PoissonMode, seed: u64) -> Result<Vec<f64>> {
    let n = g.n();
    if !g.is_connected() {
        return Err(GtfError::Disconnected);
    }
    let mut b = poisson_rhs(n, mode, seed)?;
    let mb = b.iter().sum::<f64>() / n as f64;
    b.iter_mut().for_each(|v| *v -= mb);
    let mut x = vec![0.0; n];
    if n == 1 || norm2(&b) == 0.0 {
        return Ok(x);
    }
    let l = laplacian(g);
    let diag = l.diagonal();
    let apply = |v: &[f64], out: &mut [f64]| l.mul_vec_into(v, out);
    pcg(apply, &diag, &b, &mut x, 1e-12, 50 * n + 1000);
    // the iterates stay mean-zero in exact arithmetic; clean up the drift
    let mx = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mx);
    Ok(x)
}

/// Decaying random walks. `decay` overrides the per-starter termination
/// probability that is otherwise drawn uniformly from (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkSpec {
    pub starters: usize,
    pub max_walks: usize,
    pub decay: Option<f64>,
}

impl Default for RandomWalkSpec {
    fn default() -> Self {
        RandomWalkSpec { starters: 10, max_walks: 1000, decay: None }
    }
}

/// Visit counts of walks from `starters` distinct uniformly chosen nodes.
/// Each starter gets a decay probability and a walk count uniform in
/// `0..=max_walks`; a walk counts its start node, then before every step
/// stops with the decay probability and otherwise moves to a uniform
/// neighbor (walks at isolated nodes stop).
pub fn random_walk_signal(g: &Graph, spec: &RandomWalkSpec, seed: u64) -> Result<Vec<f64>> {
    let n = g.n();
    if n == 0 {
        return Err(GtfError::InvalidParameter("graph is empty".into()));
    }
    if spec.starters > n {
        return Err(GtfError::InvalidParameter(format!("{} starters on {n} nodes", spec.starters)));
    }
    if let Some(d) = spec.decay {
        if !(d > 0.0 && d <= 1.0) {
            return Err(GtfError::InvalidParameter(format!("decay must lie in (0, 1], got {d}")));
        }
    }
    let nbrs: Vec<Vec<usize>> = g.adjacency().into_iter().map(|a| a.into_iter().map(|(v, _)| v).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starters = sample(&mut rng, n, spec.starters).into_vec();
    starters.sort_unstable();
    let mut visits = vec![0u64; n];
    for s in starters {
        let decay = match spec.decay {
            Some(d) => d,
            None => loop {
                let d: f64 = rng.random();
                if d > 0.0 {
                    break d;
                }
            },
        };
        let walks = rng.random_range(0..=spec.max_walks);
        for _ in 0..walks {
            let mut at = s;
            visits[at] += 1;
            while !nbrs[at].is_empty() && rng.random::<f64>() >= decay {
                at = nbrs[at][rng.random_range(0..nbrs[at].len())];
                visits[at] += 1;
            }
        }
    }
    Ok(visits.into_iter().map(|v| v as f64).collect())
}

/// `y = x + σz` with `z` standard normal from a generator keyed by `seed`.
pub fn add_noise(x: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(GtfError::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(x.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Generator {
    /// [`five_bump_mixture`] on a `rows x cols` grid.
    Mixture { rows: usize, cols: usize },
    PoissonDense,
    PoissonSparse { nnz: usize },
    RandomWalk(RandomWalkSpec),
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Mixture { .. } => "mixture",
            Generator::PoissonDense => "poisson-dense",
            Generator::PoissonSparse { .. } => "poisson-sparse",
            Generator::RandomWalk(_) => "random-walk",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub graph: Graph,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub generator: Generator,
}

/// Builds an instance. The mixture generator makes its own grid; the others
/// need `graph`. The signal uses `seed` and the noise `seed + 1`.
pub fn generate(generator: &Generator, graph: Option<&Graph>, sigma: f64, seed: u64) -> Result<SyntheticInstance> {
    let need = || graph.cloned().ok_or_else(|| GtfError::InvalidParameter(format!("{} needs a graph", generator.name())));
    let (graph, x) = match generator {
        Generator::Mixture { rows, cols } => {
            let g = grid2d(*rows, *cols)?;
            let x = gaussian_mixture_signal(&grid2d_coords(*rows, *cols), &five_bump_mixture(*rows, *cols))?;
            (g, x)
        }
        Generator::PoissonDense => {
            let g = need()?;
            let x = poisson_equation_signal(&g, PoissonMode::Dense, seed)?;
            (g, x)
        }
        Generator::PoissonSparse { nnz } => {
            let g = need()?;
            let x = poisson_equation_signal(&g, PoissonMode::Sparse { nnz: *nnz }, seed)?;
            (g, x)
        }
        Generator::RandomWalk(spec) => {
            let g = need()?;
            let x = random_walk_signal(&g, spec, seed)?;
            (g, x)
        }
    };
    let y = add_noise(&x, sigma, seed.wrapping_add(1))?;
    Ok(SyntheticInstance { graph, x, y, sigma, seed, generator: generator.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    Gtf,
    Laplacian,
}

impl SweepMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMethod::Gtf => "gtf",
            SweepMethod::Laplacian => "laplacian",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub noise_snr: f64,
    pub method: SweepMethod,
    pub best_mse: f64,
    pub best_lambda: f64,
}

/// Laplacian smoothing grid: 30 geometric values over `[1e-4, 1e3]`.
pub fn laplacian_lambda_grid() -> Vec<f64> {
    (0..30).map(|i| 1e3 * 10f64.powf(-7.0 * i as f64 / 29.0)).rev().collect()
}

/// Best achievable MSE of GTF (order `k`, automatic λ path) and Laplacian
/// smoothing at each noise level. Level `i` draws its noise with seed
/// `seed + i`.
pub fn noise_sweep(g: &Graph, x: &[f64], k: usize, sigmas: &[f64], seed: u64, opts: &SolverOptions) -> Result<Vec<SweepRow>> {
    check_len(g.n(), x.len())?;
    if dot(x, x) == 0.0 {
        return Err(GtfError::InvalidParameter("noise sweep needs a nonzero signal".into()));
    }
    let lap_grid = laplacian_lambda_grid();
    let levels: Vec<Result<[SweepRow; 2]>> = sigmas
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let snr = noise_snr(x, sigma)?;
            let y = add_noise(x, sigma, seed.wrapping_add(i as u64))?;
            let path = lambda_path(&y, g, k, &LambdaGrid::Auto, Some(x), Method::Auto, opts)?;
            let (gl, gm) = path
                .entries
                .iter()
                .map(|e| (e.lambda, e.mse.unwrap_or(f64::INFINITY)))
                .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            let mut lb = (0.0, f64::INFINITY);
            for &lam in &lap_grid {
                let m = mse(&laplacian_smooth(&y, g, k, lam)?, x)?;
                if m < lb.1 {
                    lb = (lam, m);
                }
            }
            Ok([
                SweepRow { sigma, noise_snr: snr, method: SweepMethod::Gtf, best_mse: gm, best_lambda: gl },
                SweepRow { sigma, noise_snr: snr, method: SweepMethod::Laplacian, best_mse: lb.1, best_lambda: lb.0 },
            ])
        })
        .collect();
    let mut rows = Vec::with_capacity(2 * sigmas.len());
    for l in levels {
        rows.extend(l?);
    }
    Ok(rows)
}

/// CSV with columns `noise_snr,method,best_mse,sigma,best_lambda`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["noise_snr", "method", "best_mse", "sigma", "best_lambda"])?;
    for r in rows {
        w.write_record([
            fmt_float(r.noise_snr),
            r.method.name().to_string(),
            fmt_float(r.best_mse),
            fmt_float(r.sigma),
            fmt_float(r.best_lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}
