//! GTF estimators: ADMM for any order, projected Newton on the dual,
//! the exact max-flow path for `k = 0`, Laplacian smoothing, sparse GTF.

mod admm;
mod newton;
mod polish;
mod smooth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::difference::DifferenceOperator;
use crate::error::{check_len, GtfError, Result};
use crate::flow::tv_denoise_certified;
use crate::graph::Graph;
use crate::linalg::{norm1, norm_inf};

pub use admm::{gtf_admm, gtf_admm_weighted, sparse_gtf};
pub use newton::gtf_projected_newton;
pub use smooth::laplacian_smooth;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Augmented Lagrangian parameter; `None` means `max(λ, 1e-3)`.
    pub rho: Option<f64>,
    pub max_iterations: usize,
    /// Stopping tolerance. ADMM compares residuals against `tolerance·√n`,
    /// projected Newton compares the duality gap against
    /// `tolerance·(1 + |objective|)`.
    pub tolerance: f64,
    pub cg_tolerance: f64,
    pub adaptive_rho: bool,
    /// Snap the iterate onto its identified active set and accept it when
    /// the optimality conditions certify it.
    pub polish: bool,
    /// Starting value for `β` (ADMM) or `v` (projected Newton).
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rho: None,
            max_iterations: 5000,
            tolerance: 1e-8,
            cg_tolerance: 1e-10,
            adaptive_rho: true,
            polish: true,
            initial: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rho {
            if !(r > 0.0 && r.is_finite()) {
                return Err(GtfError::InvalidParameter(format!("rho must be positive, got {r}")));
            }
        }
        if !(self.tolerance > 0.0) || !(self.cg_tolerance > 0.0) {
            return Err(GtfError::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(GtfError::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Requested solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Admm,
    Newton,
    MaxFlow,
}

impl FromStr for Method {
    type Err = GtfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "admm" => Ok(Method::Admm),
            "newton" => Ok(Method::Newton),
            "maxflow" => Ok(Method::MaxFlow),
            other => Err(GtfError::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Algorithm that actually produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "maxflow")]
    MaxFlow,
    #[serde(rename = "newton")]
    ProjectedNewton,
    #[serde(rename = "admm+maxflow")]
    AdmmMaxFlow,
    #[serde(rename = "admm+soft-threshold")]
    AdmmSoftThreshold,
    #[serde(rename = "sparse-admm")]
    SparseAdmm,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MaxFlow => "maxflow",
            Algorithm::ProjectedNewton => "newton",
            Algorithm::AdmmMaxFlow => "admm+maxflow",
            Algorithm::AdmmSoftThreshold => "admm+soft-threshold",
            Algorithm::SparseAdmm => "sparse-admm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct GtfFit {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub order: usize,
    /// Dual vector `v` over the rows of the penalty operator, with
    /// `β̂ = y − Δᵀv` and `‖v‖∞ ≤ λ`.
    pub dual: Option<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration residual (ADMM: max of primal and dual residual;
    /// Newton: duality gap).
    pub residuals: Vec<f64>,
    pub algorithm: Algorithm,
    /// Whether the returned point came from the active-set polishing step.
    pub polished: bool,
}

impl GtfFit {
    /// Turns an unconverged fit into `MaxIterationsExceeded`.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(GtfError::MaxIterationsExceeded { iterations: self.iterations })
        }
    }
}

/// Componentwise `sign(x)·max(|x| − t, 0)`.
pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    assert!(t >= 0.0, "threshold must be nonnegative");
    x.iter().map(|&v| soft(v, t)).collect()
}

#[inline]
pub(crate) fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `½‖y − β‖² + λ‖Δβ‖₁`
pub fn gtf_objective(op: &DifferenceOperator, y: &[f64], lambda: f64, beta: &[f64]) -> Result<f64> {
    check_len(op.n(), y.len())?;
    Ok(weighted_objective(op, y, None, lambda, beta))
}

/// `½ Σ ωᵢ(βᵢ − tᵢ)² + λ‖Δβ‖₁` (`ω = 1` when absent).
pub(crate) fn weighted_objective(op: &DifferenceOperator, t: &[f64], omega: Option<&[f64]>, lambda: f64, beta: &[f64]) -> f64 {
    let loss: f64 = beta
        .iter()
        .zip(t)
        .enumerate()
        .map(|(i, (b, ti))| omega.map_or(1.0, |w| w[i]) * (b - ti) * (b - ti))
        .sum();
    let pen = if lambda == 0.0 { 0.0 } else { lambda * norm1(&op.apply_unchecked(beta)) };
    0.5 * loss + pen
}

/// Threshold above which `|(Δβ̂)_ℓ|` counts as nonzero.
pub fn active_threshold(delta_beta: &[f64]) -> f64 {
    1e-8 * norm_inf(delta_beta).max(1.0)
}

/// Violations of the optimality conditions of a fit.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `‖v‖∞ / λ` (0 when `λ = 0`).
    pub dual_ratio: f64,
    /// `‖β̂ − (y − Δᵀv)‖∞`
    pub stationarity: f64,
    /// Largest `|v_ℓ − λ·sign((Δβ̂)_ℓ)|` over rows above the active threshold.
    pub sign_violation: f64,
}

impl KktReport {
    pub fn certifies(&self, lambda: f64) -> bool {
        self.dual_ratio <= 1.0 + 1e-8 && self.stationarity <= 1e-6 && self.sign_violation <= 1e-6 * lambda.max(1.0)
    }
}

/// KKT report of `fit` for data `y`; `None` when the fit carries no dual.
pub fn kkt_report(y: &[f64], g: &Graph, fit: &GtfFit) -> Result<Option<KktReport>> {
    check_len(g.n(), y.len())?;
    let Some(v) = &fit.dual else {
        return Ok(None);
    };
    let op = DifferenceOperator::new(g, fit.order);
    check_len(op.rows(), v.len())?;
    let lam = fit.lambda;
    let dtv = op.apply_transpose_unchecked(v);
    let stationarity = fit.beta.iter().zip(y).zip(&dtv).fold(0.0f64, |m, ((b, yi), d)| m.max((b - (yi - d)).abs()));
    let dual_ratio = if lam > 0.0 { norm_inf(v) / lam } else if norm_inf(v) == 0.0 { 0.0 } else { f64::INFINITY };
    let db = op.apply_unchecked(&fit.beta);
    let thr = active_threshold(&db);
    let sign_violation = db
        .iter()
        .zip(v)
        .filter(|(d, _)| d.abs() > thr)
        .fold(0.0f64, |m, (d, vl)| m.max((vl - lam * d.signum()).abs()));
    Ok(Some(KktReport { dual_ratio, stationarity, sign_violation }))
}

pub(crate) fn validate_problem(n: usize, y: &[f64], lambda: f64) -> Result<()> {
    check_len(n, y.len())?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(GtfError::InvalidParameter(format!("lambda must be a finite nonnegative number, got {lambda}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GtfError::InvalidParameter("signal contains non-finite values".into()));
    }
    Ok(())
}

/// Exact `k = 0` fit through the parametric max-flow prox.
pub fn gtf_maxflow(y: &[f64], g: &Graph, lambda: f64) -> Result<GtfFit> {
    validate_problem(g.n(), y, lambda)?;
    let sol = tv_denoise_certified(g, y, lambda)?;
    let op = DifferenceOperator::new(g, 0);
    let objective = weighted_objective(&op, y, None, lambda, &sol.x);
    Ok(GtfFit {
        beta: sol.x,
        lambda,
        order: 0,
        dual: Some(sol.edge_dual),
        objective,
        iterations: sol.blocks,
        converged: true,
        residuals: Vec::new(),
        algorithm: Algorithm::MaxFlow,
        polished: false,
    })
}

/// Routes to a solver. `Auto` follows the usual computation table:
/// `k = 0` exact max-flow, `k = 1` projected Newton, even `k ≥ 2` ADMM with
/// the max-flow prox, odd `k ≥ 3` ADMM with soft-thresholding.
pub fn solve(y: &[f64], g: &Graph, k: usize, lambda: f64, method: Method, opts: &SolverOptions) -> Result<GtfFit> {
    match method {
        Method::Auto => match k {
            0 => gtf_maxflow(y, g, lambda),
            1 => gtf_projected_newton(y, g, k, lambda, opts),
            _ => gtf_admm(y, g, k, lambda, opts),
        },
        Method::Admm => gtf_admm(y, g, k, lambda, opts),
        Method::Newton => gtf_projected_newton(y, g, k, lambda, opts),
        Method::MaxFlow if k == 0 => gtf_maxflow(y, g, lambda),
        Method::MaxFlow => Err(GtfError::InvalidParameter(format!("max-flow solver only handles k = 0, got k = {k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::chain;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -1.0, 0.5], 1.0), vec![2.0, 0.0, 0.0]);
        assert_eq!(soft_threshold(&[3.0, -1.0, 0.5], 0.0), vec![3.0, -1.0, 0.5]);
        assert_eq!(soft_threshold(&[-4.0], 1.5), vec![-2.5]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("auto".parse::<Method>().unwrap(), Method::Auto);
        assert_eq!("maxflow".parse::<Method>().unwrap(), Method::MaxFlow);
        assert!("simplex".parse::<Method>().is_err());
    }

    #[test]
    fn maxflow_route_rejects_higher_order() {
        let g = chain(4).unwrap();
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(solve(&y, &g, 1, 1.0, Method::MaxFlow, &SolverOptions::default()).is_err());
    }

    #[test]
    fn auto_routing() {
        let g = chain(12).unwrap();
        let y: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64).collect();
        let opts = SolverOptions::default();
        let expect = [
            Algorithm::MaxFlow,
            Algorithm::ProjectedNewton,
            Algorithm::AdmmMaxFlow,
            Algorithm::AdmmSoftThreshold,
        ];
        for (k, want) in expect.iter().enumerate() {
            let fit = solve(&y, &g, k, 0.3, Method::Auto, &opts).unwrap();
            assert_eq!(fit.algorithm, *want, "k = {k}");
        }
    }

    #[test]
    fn options_validation() {
        let mut o = SolverOptions::default();
        assert!(o.validate().is_ok());
        o.rho = Some(0.0);
        assert!(o.validate().is_err());
        let o = SolverOptions { tolerance: 0.0, ..SolverOptions::default() };
        assert!(o.validate().is_err());
    }
}
