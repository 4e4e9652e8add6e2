//! Projected Newton on the box-constrained dual
//!
//!   min_v ½‖y − Δᵀv‖²   s.t.  ‖v‖∞ ≤ λ,
//!
//! with primal recovery `β = y − Δᵀv`. Coordinates sitting on the box with
//! an outward-pointing descent direction are held fixed; the free block of
//! the Hessian `ΔΔᵀ` is inverted by Jacobi PCG and the step is chosen by
//! Armijo backtracking along the projection arc.

use super::polish::{polish, PolishProblem};
use super::{validate_problem, weighted_objective, Algorithm, GtfFit, SolverOptions};
use crate::difference::{DifferenceOperator, DENSE_LIMIT};
use crate::error::{check_len, GtfError, Result};
use crate::graph::Graph;
use crate::linalg::{dot, norm1, pcg};

const BOUND_EPS: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;

pub fn gtf_projected_newton(y: &[f64], g: &Graph, k: usize, lambda: f64, opts: &SolverOptions) -> Result<GtfFit> {
    let op = DifferenceOperator::new(g, k);
    let n = op.n();
    validate_problem(n, y, lambda)?;
    opts.validate()?;
    let rows = op.rows();
    let finish = |beta: Vec<f64>, v: Vec<f64>, iterations: usize, converged: bool, residuals: Vec<f64>, polished: bool| GtfFit {
        objective: weighted_objective(&op, y, None, lambda, &beta),
        beta,
        lambda,
        order: k,
        dual: Some(v),
        iterations,
        converged,
        residuals,
        algorithm: Algorithm::ProjectedNewton,
        polished,
    };
    if lambda == 0.0 || rows == 0 {
        return Ok(finish(y.to_vec(), vec![0.0; rows], 0, true, Vec::new(), false));
    }

    let delta = op.to_sparse();
    let hdiag: Vec<f64> = delta.row_square_sums();
    // ‖ΔΔᵀ‖₂ ≤ ‖Δ‖₁‖Δ‖∞, used for the projected-gradient fallback step
    let mut col_abs = vec![0.0; n];
    let mut row_abs: f64 = 0.0;
    for r in 0..rows {
        let mut s = 0.0;
        for (c, v) in delta.row(r) {
            col_abs[c] += v.abs();
            s += v.abs();
        }
        row_abs = row_abs.max(s);
    }
    let lip = (row_abs * col_abs.iter().cloned().fold(0.0, f64::max)).max(1e-300);

    let dense = (opts.polish && n <= DENSE_LIMIT).then(|| op.to_dense());
    let row_lambda = vec![lambda; rows];

    let clamp = |v: f64| v.clamp(-lambda, lambda);
    let mut v: Vec<f64> = match &opts.initial {
        Some(v0) => {
            check_len(rows, v0.len())?;
            v0.iter().map(|&a| clamp(a)).collect()
        }
        None => vec![0.0; rows],
    };
    let primal_of = |v: &[f64]| -> Vec<f64> { y.iter().zip(delta.tr_mul_vec(v)).map(|(a, b)| a - b).collect() };
    let half_yy = 0.5 * dot(y, y);
    let mut tol = opts.tolerance;
    let mut residuals = Vec::new();
    let mut stalls = 0usize;
    let mut cg_trouble = 0.0f64;

    for it in 1..=opts.max_iterations {
        let beta = primal_of(&v);
        let db = delta.mul_vec(&beta);
        let grad: Vec<f64> = db.iter().map(|d| -d).collect();
        let fval = 0.5 * dot(&beta, &beta);
        let primal = 0.5 * (dot(&beta, &beta) - 2.0 * dot(&beta, y) + 2.0 * half_yy) + lambda * norm1(&db);
        let gap = primal - (half_yy - fval);
        residuals.push(gap);
        if gap <= tol * (1.0 + primal.abs()) {
            if let Some(d) = &dense {
                let active: Vec<(usize, f64)> = v
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| x.abs() >= lambda * (1.0 - 1e-12))
                    .map(|(r, x)| (r, x.signum()))
                    .collect();
                let p = PolishProblem { delta: d, row_lambda: &row_lambda, target: y, omega: None };
                if let Some(pol) = polish(&p, &active, &v) {
                    return Ok(finish(pol.beta, pol.dual, it, true, residuals, true));
                }
                if tol > 1e-15 {
                    tol = (tol * 0.01).max(1e-15);
                    continue;
                }
            }
            return Ok(finish(beta, v, it, true, residuals, false));
        }

        // hold coordinates on the box whose descent direction leaves it
        let free: Vec<bool> = (0..rows)
            .map(|r| !((v[r] >= lambda - BOUND_EPS && grad[r] < 0.0) || (v[r] <= -lambda + BOUND_EPS && grad[r] > 0.0)))
            .collect();
        let idx: Vec<usize> = (0..rows).filter(|&r| free[r]).collect();
        let mut dir = vec![0.0; rows];
        if !idx.is_empty() {
            let rhs: Vec<f64> = idx.iter().map(|&r| -grad[r]).collect();
            let diag: Vec<f64> = idx.iter().map(|&r| hdiag[r]).collect();
            let apply = |x: &[f64], out: &mut [f64]| {
                let mut full = vec![0.0; rows];
                for (a, &r) in idx.iter().enumerate() {
                    full[r] = x[a];
                }
                let hx = delta.mul_vec(&delta.tr_mul_vec(&full));
                for (a, &r) in idx.iter().enumerate() {
                    out[a] = hx[r];
                }
            };
            let mut sol = vec![0.0; idx.len()];
            let out = pcg(apply, &diag, &rhs, &mut sol, opts.cg_tolerance, 10 * idx.len() + 100);
            if !out.converged {
                cg_trouble = cg_trouble.max(out.relative_residual);
            }
            for (a, &r) in idx.iter().enumerate() {
                dir[r] = sol[a];
            }
        }
        if dot(&grad, &dir) >= 0.0 {
            dir = grad.iter().map(|gr| -gr / lip).collect();
        }

        let step_to = |alpha: f64, dir: &[f64]| -> Vec<f64> { v.iter().zip(dir).map(|(a, d)| clamp(a + alpha * d)).collect() };
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..50 {
            let cand = step_to(alpha, &dir);
            let b = primal_of(&cand);
            let fc = 0.5 * dot(&b, &b);
            let decrease: f64 = grad.iter().zip(cand.iter().zip(&v)).map(|(gr, (c, o))| gr * (c - o)).sum();
            if fc <= fval + ARMIJO * decrease {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let (cand, fc) = match accepted {
            Some(c) => c,
            None => {
                let gstep: Vec<f64> = grad.iter().map(|gr| -gr / lip).collect();
                let cand = step_to(1.0, &gstep);
                let b = primal_of(&cand);
                let fc = 0.5 * dot(&b, &b);
                (cand, fc)
            }
        };
        if fval - fc <= 1e-16 * fval.abs().max(1.0) {
            stalls += 1;
            if stalls > 50 {
                if cg_trouble > 0.0 {
                    return Err(GtfError::IllConditioned(cg_trouble));
                }
                let beta = primal_of(&cand);
                return Ok(finish(beta, cand, it, false, residuals, false));
            }
        } else {
            stalls = 0;
        }
        v = cand;
    }
    let beta = primal_of(&v);
    Ok(finish(beta, v, opts.max_iterations, false, residuals, false))
}
