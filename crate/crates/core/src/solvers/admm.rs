//! Scaled-form ADMM with the splitting `z = L^q β`.
//!
//! Even `k`: `q = k/2`, penalty `λ‖Dz‖₁`, z-update is the graph TV prox.
//! Odd `k`: `q = (k+1)/2`, penalty `λ‖z‖₁`, z-update is soft-thresholding.
//! The β-update solves `(Ω + ρL^{2q})β = Ωt + ρL^q(z + u)` by Jacobi PCG,
//! with `Ω = I`, `t = y` for the plain problem.

use nalgebra::DMatrix;

use super::polish::{polish, PolishProblem};
use super::{soft, validate_problem, weighted_objective, Algorithm, GtfFit, SolverOptions};
use crate::difference::{DifferenceOperator, Parity, DENSE_LIMIT};
use crate::error::{check_len, GtfError, Result};
use crate::flow::tv_denoise_certified;
use crate::graph::Graph;
use crate::linalg::{norm2, norm_inf, pcg};
use crate::sparse::CsrMatrix;

/// Largest `n` for which polishing is also attempted between convergence
/// checks.
const EARLY_POLISH_LIMIT: usize = 200;
const POLISH_EVERY: usize = 25;

pub fn gtf_admm(y: &[f64], g: &Graph, k: usize, lambda: f64, opts: &SolverOptions) -> Result<GtfFit> {
    let op = DifferenceOperator::new(g, k);
    admm(&op, y, None, lambda, opts)
}

/// ADMM for `min ½ Σ ωᵢ(βᵢ − tᵢ)² + λ‖Δβ‖₁` with positive weights `ω`.
/// The dual of the returned fit satisfies `Ω(β̂ − t) + Δᵀv = 0`.
pub fn gtf_admm_weighted(
    t: &[f64],
    omega: &[f64],
    g: &Graph,
    k: usize,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<GtfFit> {
    check_len(g.n(), omega.len())?;
    if omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(GtfError::InvalidParameter("loss weights must be positive".into()));
    }
    let op = DifferenceOperator::new(g, k);
    admm(&op, t, Some(omega), lambda, opts)
}

/// `L^q` as an explicit sparse matrix (identity for `q = 0`).
pub(crate) fn laplacian_power_matrix(l: &CsrMatrix, q: usize) -> CsrMatrix {
    let mut acc = CsrMatrix::identity(l.nrows());
    for _ in 0..q {
        acc = acc.matmul(l);
    }
    acc
}

// Near-ties left by inexact inner solves show up as tiny nonzero
// differences, so progressively looser support cuts (relative to ‖z‖∞) are
// offered to the polisher, which rejects any wrong guess.
const SUPPORT_CUTS: [f64; 3] = [1e-14, 1e-9, 1e-6];

fn support(values: &[f64], thr: f64, offset: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    values.iter().enumerate().filter(move |(_, d)| d.abs() > thr).map(move |(r, d)| (offset + r, d.signum()))
}

fn penalty_rows(op: &DifferenceOperator, z: &[f64]) -> Vec<f64> {
    match op.parity() {
        Parity::Even => op.incidence().mul_vec(z),
        Parity::Odd => z.to_vec(),
    }
}

fn dedup_candidates(mut c: Vec<Vec<(usize, f64)>>) -> Vec<Vec<(usize, f64)>> {
    c.dedup();
    c
}

fn active_candidates(op: &DifferenceOperator, z: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let rows = penalty_rows(op, z);
    let scale = norm_inf(z).max(1e-300);
    dedup_candidates(SUPPORT_CUTS.iter().map(|rel| support(&rows, rel * scale, 0).collect()).collect())
}

struct Iterate {
    beta: Vec<f64>,
    dual: Vec<f64>,
}

fn admm(op: &DifferenceOperator, t: &[f64], omega: Option<&[f64]>, lambda: f64, opts: &SolverOptions) -> Result<GtfFit> {
    let n = op.n();
    validate_problem(n, t, lambda)?;
    opts.validate()?;
    let algorithm = match op.parity() {
        Parity::Even => Algorithm::AdmmMaxFlow,
        Parity::Odd => Algorithm::AdmmSoftThreshold,
    };
    let finish = |it: Iterate, iterations: usize, converged: bool, residuals: Vec<f64>, polished: bool| GtfFit {
        objective: weighted_objective(op, t, omega, lambda, &it.beta),
        beta: it.beta,
        lambda,
        order: op.order(),
        dual: Some(it.dual),
        iterations,
        converged,
        residuals,
        algorithm,
        polished,
    };
    if lambda == 0.0 || op.rows() == 0 {
        let it = Iterate { beta: t.to_vec(), dual: vec![0.0; op.rows()] };
        return Ok(finish(it, 0, true, Vec::new(), false));
    }

    let w: Vec<f64> = omega.map_or_else(|| vec![1.0; n], |w| w.to_vec());
    let wt: Vec<f64> = w.iter().zip(t).map(|(a, b)| a * b).collect();
    let lq = laplacian_power_matrix(op.laplacian(), op.laplacian_power());
    let lq_sq = lq.row_square_sums();
    let even = op.parity() == Parity::Even;

    let dense = (opts.polish && n <= DENSE_LIMIT).then(|| op.to_dense());
    let row_lambda = vec![lambda; op.rows()];
    let try_polish = |z: &[f64], dual: &[f64], dense: &DMatrix<f64>| {
        let p = PolishProblem { delta: dense, row_lambda: &row_lambda, target: t, omega };
        active_candidates(op, z).iter().find_map(|a| polish(&p, a, dual))
    };

    let mut rho = opts.rho.unwrap_or(lambda.max(1e-3));
    let mut beta = match &opts.initial {
        Some(b) => {
            check_len(n, b.len())?;
            b.clone()
        }
        None => t.to_vec(),
    };
    let mut z = lq.mul_vec(&beta);
    let mut u = vec![0.0; n];
    let mut edge_dual = vec![0.0; op.rows()];
    let mut lqb = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut residuals = Vec::new();
    let sqrt_n = (n as f64).sqrt();
    let mut tol = opts.tolerance * sqrt_n;
    let tol_floor = 1e-13 * sqrt_n;
    let cg_tol = opts.cg_tolerance.min(1e-2 * opts.tolerance).max(1e-15);

    let dual_of = |rho: f64, u: &[f64], edge_dual: &[f64]| -> Vec<f64> {
        if even {
            edge_dual.iter().map(|v| rho * v).collect()
        } else {
            u.iter().map(|v| -rho * v).collect()
        }
    };

    for it in 1..=opts.max_iterations {
        for i in 0..n {
            tmp[i] = z[i] + u[i];
        }
        lq.mul_vec_into(&tmp, &mut rhs);
        for i in 0..n {
            rhs[i] = wt[i] + rho * rhs[i];
        }
        let diag: Vec<f64> = w.iter().zip(&lq_sq).map(|(a, d)| a + rho * d).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            let mut s = vec![0.0; x.len()];
            lq.mul_vec_into(x, &mut s);
            lq.mul_vec_into(&s, out);
            for i in 0..x.len() {
                out[i] = w[i] * x[i] + rho * out[i];
            }
        };
        pcg(apply, &diag, &rhs, &mut beta, cg_tol, 20 * n + 200);

        lq.mul_vec_into(&beta, &mut lqb);
        let z_prev = z.clone();
        let arg: Vec<f64> = lqb.iter().zip(&u).map(|(a, b)| a - b).collect();
        if even {
            let sol = tv_denoise_certified(op.graph(), &arg, lambda / rho)?;
            z = sol.x;
            edge_dual = sol.edge_dual;
        } else {
            let thr = lambda / rho;
            z = arg.iter().map(|&a| soft(a, thr)).collect();
        }
        for i in 0..n {
            u[i] += z[i] - lqb[i];
        }
        let r_norm = norm2(&z.iter().zip(&lqb).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dz: Vec<f64> = z.iter().zip(&z_prev).map(|(a, b)| a - b).collect();
        let s_norm = rho * norm2(&lq.mul_vec(&dz));
        residuals.push(r_norm.max(s_norm));

        let within = r_norm <= tol && s_norm <= tol;
        if let Some(d) = &dense {
            if within || (n <= EARLY_POLISH_LIMIT && it % POLISH_EVERY == 0) {
                if let Some(p) = try_polish(&z, &dual_of(rho, &u, &edge_dual), d) {
                    return Ok(finish(Iterate { beta: p.beta, dual: p.dual }, it, true, residuals, true));
                }
            }
        }
        if within {
            if dense.is_none() || tol <= tol_floor {
                let it_state = Iterate { beta: beta.clone(), dual: dual_of(rho, &u, &edge_dual) };
                return Ok(finish(it_state, it, true, residuals, false));
            }
            // support not identified yet; keep iterating at a tighter level
            tol = (tol * 0.1).max(tol_floor);
        }

        if opts.adaptive_rho && it % 10 == 0 {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u.iter_mut().for_each(|v| *v *= 0.5);
            } else if s_norm > 10.0 * r_norm {
                rho *= 0.5;
                u.iter_mut().for_each(|v| *v *= 2.0);
            }
        }
    }
    let state = Iterate { beta, dual: dual_of(rho, &u, &edge_dual) };
    Ok(finish(state, opts.max_iterations, false, residuals, false))
}

/// Sparse GTF: `min ½‖y − β‖² + λ₁‖Δβ‖₁ + λ₂‖β‖₁`.
///
/// Two-block ADMM over `(z, w) = (L^q β, β)`; the β-update solves
/// `(I + ρL^{2q} + ρI)β = y + ρL^q(z + u) + ρ(w + u₂)`. Components below
/// `1e-10` in magnitude are set to zero at the end.
pub fn sparse_gtf(y: &[f64], g: &Graph, k: usize, lambda1: f64, lambda2: f64, opts: &SolverOptions) -> Result<GtfFit> {
    let op = DifferenceOperator::new(g, k);
    let n = op.n();
    validate_problem(n, y, lambda1)?;
    if !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return Err(GtfError::InvalidParameter(format!("lambda2 must be a finite nonnegative number, got {lambda2}")));
    }
    opts.validate()?;
    let rows = op.rows();
    let objective = |beta: &[f64]| {
        weighted_objective(&op, y, None, lambda1, beta) + lambda2 * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let finish = |beta: Vec<f64>, dual: Vec<f64>, iterations: usize, converged: bool, residuals: Vec<f64>, polished: bool| {
        let mut beta = beta;
        for b in beta.iter_mut() {
            if b.abs() < 1e-10 {
                *b = 0.0;
            }
        }
        GtfFit {
            objective: objective(&beta),
            beta,
            lambda: lambda1,
            order: k,
            dual: Some(dual),
            iterations,
            converged,
            residuals,
            algorithm: Algorithm::SparseAdmm,
            polished,
        }
    };
    if lambda2 == 0.0 {
        let mut fit = admm(&op, y, None, lambda1, opts)?;
        fit.algorithm = Algorithm::SparseAdmm;
        let mut dual = fit.dual.take().unwrap_or_else(|| vec![0.0; rows]);
        dual.extend(std::iter::repeat_n(0.0, n));
        return Ok(finish(fit.beta, dual, fit.iterations, fit.converged, fit.residuals, fit.polished));
    }
    if lambda1 == 0.0 || rows == 0 {
        let beta: Vec<f64> = y.iter().map(|&v| soft(v, lambda2)).collect();
        let mut dual = vec![0.0; rows];
        dual.extend(y.iter().zip(&beta).map(|(a, b)| a - b));
        return Ok(finish(beta, dual, 0, true, Vec::new(), false));
    }

    let even = op.parity() == Parity::Even;
    let lq = laplacian_power_matrix(op.laplacian(), op.laplacian_power());
    let lq_sq = lq.row_square_sums();

    // stacked operator [Δ; I] with per-row levels (λ₁, λ₂) for polishing
    let dense = (opts.polish && n <= DENSE_LIMIT).then(|| {
        let d = op.to_dense();
        let mut stacked = DMatrix::zeros(rows + n, n);
        stacked.view_mut((0, 0), (rows, n)).copy_from(&d);
        stacked.view_mut((rows, 0), (n, n)).fill_with_identity();
        stacked
    });
    let mut row_lambda = vec![lambda1; rows];
    row_lambda.extend(std::iter::repeat_n(lambda2, n));

    let mut rho = opts.rho.unwrap_or(lambda1.max(lambda2).max(1e-3));
    let mut beta = opts.initial.clone().unwrap_or_else(|| y.to_vec());
    check_len(n, beta.len())?;
    let mut z = lq.mul_vec(&beta);
    let mut wv = beta.clone();
    let mut u = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut edge_dual = vec![0.0; rows];
    let mut lqb = vec![0.0; n];
    let mut residuals = Vec::new();
    let sqrt_n = (n as f64).sqrt();
    let mut tol = opts.tolerance * sqrt_n;
    let tol_floor = 1e-13 * sqrt_n;
    let cg_tol = opts.cg_tolerance.min(1e-2 * opts.tolerance).max(1e-15);

    let dual_of = |rho: f64, u: &[f64], u2: &[f64], edge_dual: &[f64]| -> Vec<f64> {
        let mut d: Vec<f64> = if even {
            edge_dual.iter().map(|v| rho * v).collect()
        } else {
            u.iter().map(|v| -rho * v).collect()
        };
        d.extend(u2.iter().map(|v| -rho * v));
        d
    };
    let active_of = |z: &[f64], wv: &[f64]| {
        let dz = penalty_rows(&op, z);
        let zs = norm_inf(z).max(1e-300);
        let ws = norm_inf(wv).max(1e-300);
        let cands = SUPPORT_CUTS
            .iter()
            .map(|rel| support(&dz, rel * zs, 0).chain(support(wv, rel * ws, rows)).collect())
            .collect();
        dedup_candidates(cands)
    };

    for it in 1..=opts.max_iterations {
        let zu: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + b).collect();
        let mut rhs = lq.mul_vec(&zu);
        for i in 0..n {
            rhs[i] = y[i] + rho * rhs[i] + rho * (wv[i] + u2[i]);
        }
        let diag: Vec<f64> = lq_sq.iter().map(|d| 1.0 + rho + rho * d).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            let s = lq.mul_vec(x);
            lq.mul_vec_into(&s, out);
            for i in 0..x.len() {
                out[i] = (1.0 + rho) * x[i] + rho * out[i];
            }
        };
        pcg(apply, &diag, &rhs, &mut beta, cg_tol, 20 * n + 200);
        lq.mul_vec_into(&beta, &mut lqb);

        let z_prev = z.clone();
        let w_prev = wv.clone();
        let arg: Vec<f64> = lqb.iter().zip(&u).map(|(a, b)| a - b).collect();
        if even {
            let sol = tv_denoise_certified(op.graph(), &arg, lambda1 / rho)?;
            z = sol.x;
            edge_dual = sol.edge_dual;
        } else {
            z = arg.iter().map(|&a| soft(a, lambda1 / rho)).collect();
        }
        wv = beta.iter().zip(&u2).map(|(b, c)| soft(b - c, lambda2 / rho)).collect();
        for i in 0..n {
            u[i] += z[i] - lqb[i];
            u2[i] += wv[i] - beta[i];
        }
        let r_norm = (norm2(&z.iter().zip(&lqb).map(|(a, b)| a - b).collect::<Vec<_>>()).powi(2)
            + norm2(&wv.iter().zip(&beta).map(|(a, b)| a - b).collect::<Vec<_>>()).powi(2))
        .sqrt();
        let dz: Vec<f64> = z.iter().zip(&z_prev).map(|(a, b)| a - b).collect();
        let dw: Vec<f64> = wv.iter().zip(&w_prev).map(|(a, b)| a - b).collect();
        let s_norm = rho * (norm2(&lq.mul_vec(&dz)).powi(2) + norm2(&dw).powi(2)).sqrt();
        residuals.push(r_norm.max(s_norm));

        let within = r_norm <= tol && s_norm <= tol;
        if let Some(d) = &dense {
            if within || (n <= EARLY_POLISH_LIMIT && it % POLISH_EVERY == 0) {
                let p = PolishProblem { delta: d, row_lambda: &row_lambda, target: y, omega: None };
                let guess = dual_of(rho, &u, &u2, &edge_dual);
                if let Some(pol) = active_of(&z, &wv).iter().find_map(|a| polish(&p, a, &guess)) {
                    return Ok(finish(pol.beta, pol.dual, it, true, residuals, true));
                }
            }
        }
        if within {
            if dense.is_none() || tol <= tol_floor {
                return Ok(finish(beta, dual_of(rho, &u, &u2, &edge_dual), it, true, residuals, false));
            }
            tol = (tol * 0.1).max(tol_floor);
        }
        if opts.adaptive_rho && it % 10 == 0 {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u.iter_mut().chain(u2.iter_mut()).for_each(|v| *v *= 0.5);
            } else if s_norm > 10.0 * r_norm {
                rho *= 0.5;
                u.iter_mut().chain(u2.iter_mut()).for_each(|v| *v *= 2.0);
            }
        }
    }
    let dual = dual_of(rho, &u, &u2, &edge_dual);
    Ok(finish(beta, dual, opts.max_iterations, false, residuals, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{chain, grid2d};
    use crate::linalg::{max_abs_diff, mean};

    fn wiggle(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i as f64) * 0.7).sin() * 2.0 + if i > n / 2 { 1.5 } else { 0.0 }).collect()
    }

    #[test]
    fn zero_lambda_returns_data() {
        let g = chain(10).unwrap();
        let y = wiggle(10);
        for k in 0..4 {
            let fit = gtf_admm(&y, &g, k, 0.0, &SolverOptions::default()).unwrap();
            assert_eq!(fit.beta, y);
        }
    }

    #[test]
    fn two_node_fused_lasso() {
        let g = chain(2).unwrap();
        let fit = gtf_admm(&[3.0, 1.0], &g, 0, 0.5, &SolverOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(max_abs_diff(&fit.beta, &[2.5, 1.5]) < 1e-10);
    }

    #[test]
    fn large_lambda_gives_mean() {
        let g = grid2d(4, 5).unwrap();
        let y = wiggle(20);
        for k in 0..4 {
            let fit = gtf_admm(&y, &g, k, 1e4, &SolverOptions::default()).unwrap();
            let m = mean(&y);
            assert!(fit.beta.iter().all(|b| (b - m).abs() < 1e-6), "k = {k}");
        }
    }

    #[test]
    fn weighted_reduces_to_plain_with_unit_weights() {
        let g = chain(15).unwrap();
        let y = wiggle(15);
        let a = gtf_admm(&y, &g, 1, 0.4, &SolverOptions::default()).unwrap();
        let b = gtf_admm_weighted(&y, &[1.0; 15], &g, 1, 0.4, &SolverOptions::default()).unwrap();
        assert!(max_abs_diff(&a.beta, &b.beta) < 1e-9);
        assert!(gtf_admm_weighted(&y, &[0.0; 15], &g, 1, 0.4, &SolverOptions::default()).is_err());
    }

    #[test]
    fn sparse_gtf_reductions() {
        let g = chain(12).unwrap();
        let y = wiggle(12);
        let opts = SolverOptions::default();
        let plain = gtf_admm(&y, &g, 0, 0.3, &opts).unwrap();
        let sp = sparse_gtf(&y, &g, 0, 0.3, 0.0, &opts).unwrap();
        assert!(max_abs_diff(&plain.beta, &sp.beta) < 1e-7);
        let sep = sparse_gtf(&y, &g, 1, 0.0, 0.8, &opts).unwrap();
        let want: Vec<f64> = y.iter().map(|&v| soft(v, 0.8)).collect();
        assert!(max_abs_diff(&sep.beta, &want) < 1e-12);
    }
}
