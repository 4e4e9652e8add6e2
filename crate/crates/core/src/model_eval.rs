//! Active sets, degrees of freedom, null-space structure of fits, λ paths
//! and error metrics.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::difference::{cgls, DifferenceOperator, DENSE_LIMIT};
use crate::error::{check_len, GtfError, Result};
use crate::graph::{connected_components, laplacian, Graph};
use crate::linalg::{dot, norm_inf, pinv, project_onto_span};
use crate::solvers::{active_threshold, solve, GtfFit, Method, SolverOptions};

/// Rows of `Δβ̂` above the active threshold.
pub fn active_set(fit: &GtfFit, g: &Graph) -> Result<Vec<usize>> {
    check_len(g.n(), fit.beta.len())?;
    let op = DifferenceOperator::new(g, fit.order);
    let db = op.apply_unchecked(&fit.beta);
    let thr = active_threshold(&db);
    Ok(db.iter().enumerate().filter(|(_, d)| d.abs() > thr).map(|(r, _)| r).collect())
}

/// Unbiased degrees-of-freedom estimate: `max{|A|, 1}` for odd `k`, the
/// number of connected components of `G` with the active edges removed for
/// even `k`. On a disconnected graph the odd-`k` count is taken per
/// component and summed.
pub fn estimate_df(fit: &GtfFit, g: &Graph) -> Result<usize> {
    let a = active_set(fit, g)?;
    if fit.order.is_multiple_of(2) {
        return Ok(connected_components(g, &a)?.count);
    }
    let comps = connected_components(g, &[])?;
    let mut per = vec![0usize; comps.count];
    for &r in &a {
        per[comps.labels[r]] += 1;
    }
    Ok(per.iter().map(|&c| c.max(1)).sum())
}

fn component_indicators(g: &Graph) -> Result<Vec<Vec<f64>>> {
    let comps = connected_components(g, &[])?;
    Ok(comps
        .members()
        .iter()
        .map(|m| {
            let mut v = vec![0.0; g.n()];
            m.iter().for_each(|&i| v[i] = 1.0);
            v
        })
        .collect())
}

/// Relative distance of `β̂` from the subspace its active set predicts:
/// `span{1_{G_c}} + (L†)^{k/2}·span{1_{C_t}}` over the components `C_t` of
/// `G_{−A}` (even `k`), or `span{1_{G_c}} + {(L†)^{(k+1)/2} e_a : a ∈ A}`
/// (odd `k`).
pub fn nullspace_residual(fit: &GtfFit, g: &Graph) -> Result<f64> {
    let n = g.n();
    if n > DENSE_LIMIT {
        return Err(GtfError::TooLarge { n, limit: DENSE_LIMIT });
    }
    let a = active_set(fit, g)?;
    let lp = pinv(&laplacian(g).to_dense());
    let k = fit.order;
    let (q, seeds): (usize, Vec<Vec<f64>>) = if k.is_multiple_of(2) {
        let comps = connected_components(g, &a)?;
        let ind = comps
            .members()
            .iter()
            .map(|m| {
                let mut v = vec![0.0; n];
                m.iter().for_each(|&i| v[i] = 1.0);
                v
            })
            .collect();
        (k / 2, ind)
    } else {
        let unit = a
            .iter()
            .map(|&r| {
                let mut v = vec![0.0; n];
                v[r] = 1.0;
                v
            })
            .collect();
        (k.div_ceil(2), unit)
    };
    let mut cols = component_indicators(g)?;
    for s in seeds {
        let mut v = DVector::from_vec(s);
        for _ in 0..q {
            v = &lp * v;
        }
        cols.push(v.as_slice().to_vec());
    }
    let basis = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_column_slice(&fit.beta);
    let bn = b.norm();
    if bn == 0.0 {
        return Ok(0.0);
    }
    let proj = project_onto_span(&basis, &b);
    Ok((b - proj).norm() / bn)
}

/// `y` minus its componentwise mean (the projection off the penalty's
/// null space).
fn remove_component_means(y: &[f64], g: &Graph) -> Result<Vec<f64>> {
    let comps = connected_components(g, &[])?;
    let mut sums = vec![0.0; comps.count];
    let mut sizes = vec![0.0; comps.count];
    for (i, &c) in comps.labels.iter().enumerate() {
        sums[c] += y[i];
        sizes[c] += 1.0;
    }
    Ok(y.iter().zip(&comps.labels).map(|(v, &c)| v - sums[c] / sizes[c]).collect())
}

/// Smallest λ certified to fuse the fit onto the penalty null space:
/// `‖(Δᵀ)†(y − P_null y)‖∞`. Dense pseudoinverse up to `DENSE_LIMIT`
/// nodes, CGLS beyond.
pub fn lambda_crit(y: &[f64], g: &Graph, k: usize) -> Result<f64> {
    check_len(g.n(), y.len())?;
    let op = DifferenceOperator::new(g, k);
    let r = remove_component_means(y, g)?;
    if op.rows() == 0 {
        return Ok(0.0);
    }
    if g.n() <= DENSE_LIMIT {
        let dt = op.to_dense().transpose();
        let v = pinv(&dt) * DVector::from_vec(r);
        return Ok(v.amax());
    }
    let v = cgls(
        |x| op.apply_transpose_unchecked(x),
        |x| op.apply_unchecked(x),
        &r,
        op.rows(),
        1e-12,
        20 * g.n() + 1000,
    );
    Ok(norm_inf(&v))
}

#[derive(Debug, Clone)]
pub enum LambdaGrid {
    /// 50 geometric values from `λ_crit` down four decades.
    Auto,
    Values(Vec<f64>),
}

impl LambdaGrid {
    pub const AUTO_POINTS: usize = 50;

    pub fn geometric(hi: f64, lo: f64, count: usize) -> Result<LambdaGrid> {
        if !(hi > 0.0 && lo > 0.0 && hi >= lo) || count == 0 {
            return Err(GtfError::InvalidParameter(format!("bad geometric grid {lo}:{hi}:{count}")));
        }
        if count == 1 {
            return Ok(LambdaGrid::Values(vec![hi]));
        }
        let r = (lo / hi).ln() / (count - 1) as f64;
        Ok(LambdaGrid::Values((0..count).map(|i| hi * (r * i as f64).exp()).collect()))
    }
}

#[derive(Debug, Clone)]
pub struct PathEntry {
    pub lambda: f64,
    pub df: usize,
    pub objective: f64,
    pub mse: Option<f64>,
    pub snr: Option<f64>,
    pub fit: GtfFit,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub entries: Vec<PathEntry>,
}

impl PathResult {
    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.fit.converged)
    }

    /// CSV with columns `lambda,df,objective,mse,snr` (metric columns are
    /// empty without a ground truth).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "df", "objective", "mse", "snr"])?;
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        for e in &self.entries {
            w.write_record([fmt_float(e.lambda), e.df.to_string(), fmt_float(e.objective), opt(e.mse), opt(e.snr)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation, with explicit infinities.
pub fn fmt_float(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

/// Fits along a decreasing λ grid with warm starts.
pub fn lambda_path(
    y: &[f64],
    g: &Graph,
    k: usize,
    grid: &LambdaGrid,
    truth: Option<&[f64]>,
    method: Method,
    opts: &SolverOptions,
) -> Result<PathResult> {
    check_len(g.n(), y.len())?;
    if let Some(t) = truth {
        check_len(g.n(), t.len())?;
    }
    let lambdas = match grid {
        LambdaGrid::Auto => {
            let hi = lambda_crit(y, g, k)?;
            if hi == 0.0 {
                vec![0.0]
            } else {
                match LambdaGrid::geometric(hi, hi * 1e-4, LambdaGrid::AUTO_POINTS)? {
                    LambdaGrid::Values(v) => v,
                    LambdaGrid::Auto => unreachable!(),
                }
            }
        }
        LambdaGrid::Values(v) => v.clone(),
    };
    if lambdas.is_empty() {
        return Err(GtfError::InvalidParameter("empty lambda grid".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) || lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(GtfError::InvalidParameter("lambda grid must be nonnegative and strictly decreasing".into()));
    }
    let mut entries = Vec::with_capacity(lambdas.len());
    let mut prev: Option<GtfFit> = None;
    for &lam in &lambdas {
        let mut o = opts.clone();
        if let Some(p) = &prev {
            // warm start: β for ADMM, the dual for projected Newton
            let uses_dual = matches!(method, Method::Newton) || (matches!(method, Method::Auto) && k == 1);
            o.initial = if uses_dual { p.dual.clone() } else { Some(p.beta.clone()) };
        }
        let fit = solve(y, g, k, lam, method, &o)?;
        let df = estimate_df(&fit, g)?;
        let (m, s) = match truth {
            Some(t) => {
                let m = mse(&fit.beta, t)?;
                (Some(m), Some(denoised_snr(&fit.beta, t)?))
            }
            None => (None, None),
        };
        entries.push(PathEntry { lambda: lam, df, objective: fit.objective, mse: m, snr: s, fit: fit.clone() });
        prev = Some(fit);
    }
    Ok(PathResult { entries })
}

/// `‖β̂ − β₀‖² / n`
pub fn mse(beta: &[f64], beta0: &[f64]) -> Result<f64> {
    check_len(beta0.len(), beta.len())?;
    if beta.is_empty() {
        return Ok(0.0);
    }
    Ok(beta.iter().zip(beta0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / beta.len() as f64)
}

/// Input negative SnR in dB: `10 log₁₀(nσ² / ‖x‖²)`.
pub fn noise_snr(x: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(GtfError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(10.0 * (x.len() as f64 * sigma * sigma / dot(x, x)).log10())
}

/// Denoised negative SnR in dB: `10 log₁₀(MSE / ‖x‖²)`; `-inf` for an
/// exact fit.
pub fn denoised_snr(beta: &[f64], x: &[f64]) -> Result<f64> {
    let m = mse(beta, x)?;
    if m == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (m / dot(x, x)).log10())
}

/// Monte Carlo comparison of the df estimate with Stein's covariance form
/// `Σᵢ cov(β̂ᵢ, yᵢ)/σ²`, estimated per draw by `Σᵢ β̂ᵢ(yᵢ − β₀ᵢ)/σ²`.
#[derive(Debug, Clone, Serialize)]
pub struct SteinReport {
    pub reps: usize,
    pub df_mean: f64,
    pub df_se: f64,
    pub stein_mean: f64,
    pub stein_se: f64,
    /// Mean and standard error of the per-draw difference `df̂ − stein`.
    pub diff_mean: f64,
    pub diff_se: f64,
    pub unconverged: usize,
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Per-draw generator: stream `rep` of a ChaCha8 generator keyed by `seed`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

pub fn stein_df_monte_carlo(
    g: &Graph,
    k: usize,
    lambda: f64,
    beta0: &[f64],
    sigma: f64,
    reps: usize,
    seed: u64,
) -> Result<SteinReport> {
    check_len(g.n(), beta0.len())?;
    if reps < 2 {
        return Err(GtfError::InvalidParameter("need at least two replications".into()));
    }
    if !(sigma > 0.0) {
        return Err(GtfError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let opts = SolverOptions::default();
    let draws: Vec<Result<(f64, f64, bool)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep as u64);
            let y: Vec<f64> = beta0
                .iter()
                .map(|b| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    b + sigma * z
                })
                .collect();
            let fit = solve(&y, g, k, lambda, Method::Auto, &opts)?;
            let df = estimate_df(&fit, g)? as f64;
            let noise: Vec<f64> = y.iter().zip(beta0).map(|(a, b)| a - b).collect();
            let stein = dot(&fit.beta, &noise) / (sigma * sigma);
            Ok((df, stein, fit.converged))
        })
        .collect();
    let mut df = Vec::with_capacity(reps);
    let mut st = Vec::with_capacity(reps);
    let mut unconverged = 0;
    for d in draws {
        let (a, b, c) = d?;
        df.push(a);
        st.push(b);
        unconverged += usize::from(!c);
    }
    let diff: Vec<f64> = df.iter().zip(&st).map(|(a, b)| a - b).collect();
    let (df_mean, df_se) = mean_se(&df);
    let (stein_mean, stein_se) = mean_se(&st);
    let (diff_mean, diff_se) = mean_se(&diff);
    Ok(SteinReport { reps, df_mean, df_se, stein_mean, stein_se, diff_mean, diff_se, unconverged })
}
