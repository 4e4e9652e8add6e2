//! Graph difference operators of arbitrary order, kept in factored form.
//!
//! For order `k` the operator is `L^((k+1)/2)` when `k` is odd and
//! `D L^(k/2)` when `k` is even, with `D` the weighted oriented incidence
//! matrix and `L = DᵀD`. Applications are chains of sparse products; the
//! explicit power of `L` is never formed.

use nalgebra::DMatrix;

use crate::error::{check_len, GtfError, Result};
use crate::graph::{incidence_matrix, laplacian, Graph};
use crate::linalg::{self, norm1};
use crate::sparse::CsrMatrix;

/// Largest `n` for which dense SVD based quantities are computed.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone)]
pub struct DifferenceOperator {
    order: usize,
    graph: Graph,
    incidence: CsrMatrix,
    laplacian: CsrMatrix,
}

impl DifferenceOperator {
    pub fn new(g: &Graph, k: usize) -> Self {
        DifferenceOperator {
            order: k,
            graph: g.clone(),
            incidence: incidence_matrix(g),
            laplacian: laplacian(g),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn parity(&self) -> Parity {
        if self.order % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Number of rows: `n` for odd order, `m` for even order.
    pub fn rows(&self) -> usize {
        match self.parity() {
            Parity::Odd => self.graph.n(),
            Parity::Even => self.graph.m(),
        }
    }

    /// Power of `L` carried by the operator (`k/2` even, `(k+1)/2` odd).
    pub fn laplacian_power(&self) -> usize {
        match self.parity() {
            Parity::Odd => self.order.div_ceil(2),
            Parity::Even => self.order / 2,
        }
    }

    pub fn incidence(&self) -> &CsrMatrix {
        &self.incidence
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    /// `L^q x`
    pub fn apply_laplacian_pow(&self, q: usize, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut tmp = vec![0.0; x.len()];
        for _ in 0..q {
            self.laplacian.mul_vec_into(&cur, &mut tmp);
            std::mem::swap(&mut cur, &mut tmp);
        }
        cur
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let lx = self.apply_laplacian_pow(self.laplacian_power(), x);
        match self.parity() {
            Parity::Odd => lx,
            Parity::Even => self.incidence.mul_vec(&lx),
        }
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), v.len())?;
        Ok(self.apply_transpose_unchecked(v))
    }

    pub(crate) fn apply_transpose_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let q = self.laplacian_power();
        match self.parity() {
            Parity::Odd => self.apply_laplacian_pow(q, v),
            Parity::Even => self.apply_laplacian_pow(q, &self.incidence.tr_mul_vec(v)),
        }
    }

    /// `‖Δβ‖₁`
    pub fn penalty_value(&self, beta: &[f64]) -> Result<f64> {
        Ok(norm1(&self.apply(beta)?))
    }

    /// Explicit dense matrix, built column by column from the factored form.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(self.rows(), n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply_unchecked(&e);
            out.set_column(j, &nalgebra::DVector::from_vec(col));
            e[j] = 0.0;
        }
        out
    }

    /// Explicit sparse matrix (fill-in grows with the order; meant for small k).
    pub fn to_sparse(&self) -> CsrMatrix {
        let mut acc = match self.parity() {
            Parity::Odd => self.laplacian.clone(),
            Parity::Even => self.incidence.clone(),
        };
        let extra = match self.parity() {
            Parity::Odd => self.laplacian_power() - 1,
            Parity::Even => self.laplacian_power(),
        };
        for _ in 0..extra {
            acc = acc.matmul(&self.laplacian);
        }
        acc
    }
}

pub fn graph_difference_operator(g: &Graph, k: usize) -> DifferenceOperator {
    DifferenceOperator::new(g, k)
}

/// Node-level form of the penalty for unit-weight graphs and `k ≤ 2`:
/// edge differences (k = 0), degree-scaled deviations from the neighbor
/// average (k = 1), and edge differences of those node terms (k = 2).
pub fn elementwise_penalty(g: &Graph, k: usize, beta: &[f64]) -> Result<f64> {
    if k > 2 {
        return Err(GtfError::UnsupportedOrder(k));
    }
    if !g.is_unit_weight() {
        return Err(GtfError::WeightedGraph);
    }
    check_len(g.n(), beta.len())?;
    if k == 0 {
        return Ok(g.edges().iter().map(|e| (beta[e.i] - beta[e.j]).abs()).sum());
    }
    let adj = g.adjacency();
    let node_term: Vec<f64> = (0..g.n())
        .map(|i| {
            let ni = adj[i].len();
            if ni == 0 {
                return 0.0;
            }
            let avg = adj[i].iter().map(|&(j, _)| beta[j]).sum::<f64>() / ni as f64;
            ni as f64 * (beta[i] - avg)
        })
        .collect();
    if k == 1 {
        return Ok(node_term.iter().map(|t| t.abs()).sum());
    }
    Ok(g.edges().iter().map(|e| (node_term[e.i] - node_term[e.j]).abs()).sum())
}

/// Univariate `(k+1)`st difference matrix of size `(n−k−1) × n`.
pub fn univariate_difference_operator(n: usize, k: usize) -> Result<CsrMatrix> {
    if n < k + 2 {
        return Err(GtfError::InvalidParameter(format!("need n >= k + 2 (n = {n}, k = {k})")));
    }
    let first = |size: usize| {
        let trip: Vec<_> = (0..size - 1).flat_map(|r| [(r, r, -1.0), (r, r + 1, 1.0)]).collect();
        CsrMatrix::from_triplets(size - 1, size, &trip)
    };
    let mut acc = first(n);
    for t in 1..=k {
        acc = first(n - t).matmul(&acc);
    }
    Ok(acc)
}

/// Rows of the chain-graph operator whose removal leaves the univariate
/// difference matrix: `k/2` from each end for even `k`, `(k+1)/2` for odd.
pub fn boundary_trim(g: &Graph, k: usize) -> Result<Vec<usize>> {
    if !g.is_chain() {
        return Err(GtfError::NotAChain);
    }
    let rows = if k % 2 == 1 { g.n() } else { g.m() };
    let t = if k % 2 == 1 { k.div_ceil(2) } else { k / 2 };
    if 2 * t > rows {
        return Err(GtfError::InvalidParameter(format!("chain too short to trim {t} rows per side")));
    }
    let mut out: Vec<usize> = (0..t).collect();
    out.extend(rows - t..rows);
    Ok(out)
}

/// Largest column norm of the pseudoinverse of a dense matrix.
pub fn max_column_norm_pinv_dense(a: &DMatrix<f64>) -> f64 {
    let p = linalg::pinv(a);
    (0..p.ncols()).map(|j| p.column(j).norm()).fold(0.0, f64::max)
}

/// `M = max_j ‖Δ† e_j‖₂` through a dense SVD (`n ≤ DENSE_LIMIT`).
pub fn max_column_norm_pinv(op: &DifferenceOperator) -> Result<f64> {
    if op.n() > DENSE_LIMIT {
        return Err(GtfError::TooLarge { n: op.n(), limit: DENSE_LIMIT });
    }
    Ok(max_column_norm_pinv_dense(&op.to_dense()))
}

/// Per-column variant for large operators: each `Δ† e_j` is the minimum
/// norm least-squares solution of `Δx = e_j`, computed matrix-free by CGLS.
pub fn max_column_norm_pinv_iterative(op: &DifferenceOperator, columns: &[usize]) -> Result<f64> {
    let r = op.rows();
    let mut best: f64 = 0.0;
    for &j in columns {
        if j >= r {
            return Err(GtfError::IndexOutOfRange { index: j, size: r });
        }
        let mut e = vec![0.0; r];
        e[j] = 1.0;
        let x = cgls(
            |x| op.apply_unchecked(x),
            |v| op.apply_transpose_unchecked(v),
            &e,
            op.n(),
            1e-12,
            50 * op.n().max(100),
        );
        best = best.max(linalg::norm2(&x));
    }
    Ok(best)
}

/// CGLS from a zero start; converges to the minimum-norm least-squares
/// solution of `A x = b`.
pub(crate) fn cgls<A, At>(apply: A, apply_t: At, b: &[f64], n: usize, tol: f64, max_iter: usize) -> Vec<f64>
where
    A: Fn(&[f64]) -> Vec<f64>,
    At: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut s = apply_t(&r);
    let mut p = s.clone();
    let mut gamma = linalg::dot(&s, &s);
    let g0 = gamma.sqrt();
    if g0 == 0.0 {
        return x;
    }
    for _ in 0..max_iter {
        let q = apply(&p);
        let qq = linalg::dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        for i in 0..r.len() {
            r[i] -= alpha * q[i];
        }
        s = apply_t(&r);
        let gnew = linalg::dot(&s, &s);
        if gnew.sqrt() <= tol * g0 {
            break;
        }
        let beta = gnew / gamma;
        gamma = gnew;
        for i in 0..n {
            p[i] = s[i] + beta * p[i];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, chain, grid2d};

    #[test]
    fn order_one_on_chain_is_laplacian() {
        let op = graph_difference_operator(&chain(3).unwrap(), 1);
        assert_eq!(op.rows(), 3);
        let d = op.to_dense();
        assert_eq!(
            d,
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
        );
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn order_zero_is_incidence() {
        let g = grid2d(3, 3).unwrap();
        let op = graph_difference_operator(&g, 0);
        assert_eq!(op.to_dense(), incidence_matrix(&g).to_dense());
        let op0 = graph_difference_operator(&chain(3).unwrap(), 0);
        assert_eq!(op0.apply(&[3.0, 1.0, 2.0]).unwrap(), vec![-2.0, 1.0]);
    }

    #[test]
    fn constants_are_annihilated() {
        let g = grid2d(3, 3).unwrap();
        for k in 0..4 {
            let out = graph_difference_operator(&g, k).apply(&[2.5; 9]).unwrap();
            assert!(out.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn dimension_errors() {
        let op = graph_difference_operator(&chain(4).unwrap(), 2);
        assert!(matches!(op.apply(&[1.0; 3]), Err(GtfError::DimensionMismatch { .. })));
        assert!(op.apply_transpose(&[1.0; 4]).is_err());
        assert!(op.penalty_value(&[0.0; 5]).is_err());
    }

    #[test]
    fn penalty_examples() {
        let op = graph_difference_operator(&chain(3).unwrap(), 0);
        assert_eq!(op.penalty_value(&[0.0, 1.0, 3.0]).unwrap(), 3.0);
        let star = build_graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let beta = [0.0, 1.0, 1.0, 1.0];
        assert_eq!(elementwise_penalty(&star, 1, &beta).unwrap(), 6.0);
        assert_eq!(graph_difference_operator(&star, 1).penalty_value(&beta).unwrap(), 6.0);
        assert!(matches!(elementwise_penalty(&star, 3, &beta), Err(GtfError::UnsupportedOrder(3))));
        let weighted = build_graph(2, &[(0, 1, 2.0)]).unwrap();
        assert!(matches!(elementwise_penalty(&weighted, 0, &[0.0, 1.0]), Err(GtfError::WeightedGraph)));
    }

    #[test]
    fn univariate_operators() {
        let d1 = univariate_difference_operator(4, 0).unwrap().to_dense();
        assert_eq!(
            d1,
            DMatrix::from_row_slice(3, 4, &[-1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 1.0])
        );
        let d2 = univariate_difference_operator(4, 1).unwrap().to_dense();
        assert_eq!(d2, DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 1.0, 0.0, 0.0, 1.0, -2.0, 1.0]));
        assert!(univariate_difference_operator(3, 2).is_err());
        // degree-k polynomials are annihilated by (k+1)st differences
        for k in 0..4 {
            let d = univariate_difference_operator(10, k).unwrap();
            let poly: Vec<f64> = (1..=10).map(|t| (t as f64).powi(k as i32) - 3.0 * t as f64).collect();
            let poly = if k == 0 { vec![4.0; 10] } else { poly };
            assert!(d.mul_vec(&poly).iter().all(|v| v.abs() < 1e-6), "k = {k}");
        }
    }

    #[test]
    fn boundary_trim_rows() {
        let g = chain(6).unwrap();
        assert!(boundary_trim(&g, 0).unwrap().is_empty());
        assert_eq!(boundary_trim(&g, 1).unwrap(), vec![0, 5]);
        assert_eq!(boundary_trim(&chain(8).unwrap(), 2).unwrap(), vec![0, 6]);
        assert!(matches!(boundary_trim(&grid2d(2, 2).unwrap(), 1), Err(GtfError::NotAChain)));
    }

    #[test]
    fn pinv_column_norm_two_nodes() {
        let op = graph_difference_operator(&chain(2).unwrap(), 0);
        // Δ† = (−1/2, 1/2)ᵀ, whose column norm is 1/√2
        let want = 0.5f64.sqrt();
        assert!((max_column_norm_pinv(&op).unwrap() - want).abs() < 1e-12);
        let it = max_column_norm_pinv_iterative(&op, &[0]).unwrap();
        assert!((it - want).abs() < 1e-12);
    }
}
