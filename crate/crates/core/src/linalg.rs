//! Vector helpers, preconditioned conjugate gradient and dense
//! pseudoinverse utilities.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff below which a direction counts as null.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.iter().sum::<f64>() / a.len() as f64
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradient for a symmetric positive
/// (semi)definite operator. `x` holds the initial guess and receives the
/// solution. Convergence is `‖b − Ax‖ ≤ rel_tol·‖b‖`.
pub fn pcg<F>(apply: F, diag: &[f64], b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rnorm = norm2(&r);
    let mut best = rnorm;
    let mut since_best = 0;
    let mut it = 0;
    while rnorm > rel_tol * bnorm && it < max_iter {
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = norm2(&r);
        it += 1;
        if rnorm < 0.5 * best {
            best = rnorm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 10 * n.max(50) {
                break;
            }
        }
    }
    // recompute the true residual, the recurrence drifts on long runs
    apply(x, &mut ax);
    let true_res = norm2(&sub(b, &ax)) / bnorm;
    CgOutcome { iterations: it, relative_residual: true_res, converged: true_res <= rel_tol.max(1e-15) * 10.0 }
}

/// Singular value decomposition `A = U diag(s) Vᵀ` with singular values in
/// descending order. `full` requests square `U` and `V`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

// nalgebra's implicit-shift SVD loses accuracy on rank-deficient matrices
// with clustered singular values (reconstruction errors near 1e-3 on 0/1
// indicator matrices), so decompositions go through faer.
pub fn svd(a: &DMatrix<f64>, full: bool) -> Svd {
    let m = to_faer(a);
    let (u, s, v) = if full {
        let d = m.svd().expect("SVD failed to converge");
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    } else {
        let d = m.thin_svd().expect("SVD failed to converge");
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    };
    Svd { u, s, v }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix; only the lower triangle is read.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = to_faer(a).self_adjoint_eigen(faer::Side::Lower).expect("eigendecomposition failed to converge");
    (e.S().column_vector().iter().copied().collect(), from_faer(e.U()))
}

fn cutoff(s: &[f64]) -> f64 {
    RANK_TOL * s.iter().cloned().fold(0.0, f64::max)
}

/// Moore–Penrose pseudoinverse via SVD; singular values at or below
/// `RANK_TOL · σ_max` are treated as zero.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let d = svd(a, false);
    let cut = cutoff(&d.s);
    let mut out = DMatrix::zeros(c, r);
    for (k, &s) in d.s.iter().enumerate() {
        if s > cut {
            out += (d.v.column(k) / s) * d.u.column(k).transpose();
        }
    }
    out
}

/// Numerical rank with the same cutoff as [`pinv`].
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = svd(a, false).s;
    let cut = cutoff(&s);
    s.iter().filter(|&&x| x > cut).count()
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let d = svd(a, true);
    let cut = cutoff(&d.s).max(f64::MIN_POSITIVE);
    let r = d.s.iter().filter(|&&x| x > cut).count();
    d.v.columns(r, n - r).into_owned()
}

/// Least-squares projection of `x` onto the column span of `basis`
/// (columns need not be orthonormal or independent).
pub fn project_onto_span(basis: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return DVector::zeros(x.len());
    }
    let coef = pinv(basis) * x;
    basis * coef
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcg_solves_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = [1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        let out = pcg(
            |v, o| {
                let r = &a * DVector::from_column_slice(v);
                o.copy_from_slice(r.as_slice());
            },
            &[4.0, 3.0, 2.0],
            &b,
            &mut x,
            1e-12,
            100,
        );
        assert!(out.converged);
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        assert!(max_abs_diff(&x, exact.as_slice()) < 1e-10);
    }

    #[test]
    fn pinv_satisfies_penrose_identities() {
        let a = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let p = pinv(&a);
        assert!((&a * &p * &a - &a).abs().max() < 1e-12);
        assert!((&p * &a * &p - &p).abs().max() < 1e-12);
        let row = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
        let p = pinv(&row);
        assert!((p[(0, 0)] + 0.5).abs() < 1e-15 && (p[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn null_space_of_incidence_is_constants() {
        let a = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let ns = null_space(&a);
        assert_eq!(ns.ncols(), 1);
        let c = ns.column(0);
        assert!((c[0] - c[1]).abs() < 1e-12 && (c[1] - c[2]).abs() < 1e-12);
    }
}
