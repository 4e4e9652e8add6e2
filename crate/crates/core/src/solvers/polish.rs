//! Active-set polishing.
//!
//! Given a guess of the active rows `A` and their signs `s`, the problem
//! restricted to that support is the equality-constrained quadratic
//!
//!   min ½(β − t)ᵀΩ(β − t) + Σ_{a∈A} λ_a s_a Δ_a β   s.t.  Δ_{−A} β = 0,
//!
//! solved in a basis of `null(Δ_{−A})`. The point is returned only when a
//! dual vector with `v_A = λ s`, `|v_{−A}| ≤ λ` and exact stationarity
//! exists, which makes it the global minimizer.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{null_space, pinv};

const MAX_PROJECTIONS: usize = 200;

pub(crate) struct PolishProblem<'a> {
    /// Dense penalty operator, rows × n.
    pub delta: &'a DMatrix<f64>,
    /// Per-row penalty level (rows with level 0 are unpenalized).
    pub row_lambda: &'a [f64],
    pub target: &'a [f64],
    pub omega: Option<&'a [f64]>,
}

pub(crate) struct Polished {
    pub beta: Vec<f64>,
    pub dual: Vec<f64>,
}

/// `active` holds `(row, sign)` pairs; `dual_guess` is the solver's current
/// dual and seeds the inactive part of the certificate.
pub(crate) fn polish(p: &PolishProblem<'_>, active: &[(usize, f64)], dual_guess: &[f64]) -> Option<Polished> {
    let delta = p.delta;
    let (rows, n) = delta.shape();
    let omega: Vec<f64> = p.omega.map_or_else(|| vec![1.0; n], |w| w.to_vec());
    let t = DVector::from_column_slice(p.target);
    let om = DVector::from_vec(omega.clone());

    let mut is_active = vec![false; rows];
    let mut lin = DVector::zeros(n);
    for &(a, s) in active {
        if p.row_lambda[a] == 0.0 {
            continue;
        }
        is_active[a] = true;
        lin += delta.row(a).transpose() * (p.row_lambda[a] * s);
    }
    let inactive: Vec<usize> = (0..rows).filter(|&r| !is_active[r] && p.row_lambda[r] > 0.0).collect();

    let mut d_in = DMatrix::zeros(inactive.len(), n);
    for (ri, &r) in inactive.iter().enumerate() {
        d_in.set_row(ri, &delta.row(r));
    }
    let basis = null_space(&d_in);
    if basis.ncols() == 0 {
        return None;
    }
    let om_t = om.component_mul(&t);
    let rhs = basis.transpose() * (&om_t - &lin);
    let mut gram = basis.transpose() * DMatrix::from_diagonal(&om) * &basis;
    // symmetrize against roundoff before factoring
    gram = (&gram + gram.transpose()) * 0.5;
    let coef = gram.cholesky()?.solve(&rhs);
    let beta = &basis * coef;

    // Δ_{−A}ᵀ v_{−A} must equal Ω(t − β) − Σ λ_a s_a Δ_aᵀ
    let target_grad = om.component_mul(&(&t - &beta)) - &lin;
    let mut dual = vec![0.0; rows];
    for &(a, s) in active {
        if is_active[a] {
            dual[a] = p.row_lambda[a] * s;
        }
    }
    if !inactive.is_empty() {
        let v0 = DVector::from_iterator(inactive.len(), inactive.iter().map(|&r| dual_guess[r]));
        let dt = d_in.transpose();
        let dt_pinv = pinv(&dt);
        let lam_in: Vec<f64> = inactive.iter().map(|&r| p.row_lambda[r]).collect();
        // alternate between the affine set `Δ_{−A}ᵀ v = grad` and the box;
        // on graphs with cycles the inactive dual is not unique and the
        // nearest affine point can sit just outside the box
        let mut v = v0;
        for _ in 0..MAX_PROJECTIONS {
            let resid = &target_grad - &dt * &v;
            v += &dt_pinv * resid;
            let outside = v.iter().zip(&lam_in).any(|(x, l)| x.abs() > l * (1.0 + 1e-12));
            if !outside {
                break;
            }
            for (x, l) in v.iter_mut().zip(&lam_in) {
                *x = x.clamp(-l, *l);
            }
        }
        for (ri, &r) in inactive.iter().enumerate() {
            dual[r] = v[ri];
        }
    }

    let scale = 1.0 + t.amax() * omega.iter().cloned().fold(0.0, f64::max) + p.row_lambda.iter().cloned().fold(0.0, f64::max);
    // stationarity Ω(β − t) + Δᵀv = 0
    let dv = DVector::from_column_slice(&dual);
    let stat = (om.component_mul(&(&beta - &t)) + delta.transpose() * &dv).amax();
    if !(stat <= 1e-9 * scale) {
        return None;
    }
    for r in 0..rows {
        let lam = p.row_lambda[r];
        if dual[r].abs() > lam * (1.0 + 1e-9) {
            return None;
        }
        dual[r] = dual[r].clamp(-lam, lam);
    }
    // the fitted differences on A may vanish but must not oppose their sign
    let db = delta * &beta;
    let dscale = 1e-9 * (1.0 + db.amax());
    for &(a, s) in active {
        if is_active[a] && db[a] * s < -dscale {
            return None;
        }
    }
    Some(Polished { beta: beta.as_slice().to_vec(), dual })
}
