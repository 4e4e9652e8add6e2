//! Graph Laplacian smoothing, `β̂ = (I + λL^{k+1})⁻¹ y`.

use super::admm::laplacian_power_matrix;
use super::validate_problem;
use crate::error::Result;
use crate::graph::{connected_components, laplacian, Graph};
use crate::linalg::pcg;

pub fn laplacian_smooth(y: &[f64], g: &Graph, k: usize, lambda: f64) -> Result<Vec<f64>> {
    let n = g.n();
    validate_problem(n, y, lambda)?;
    if lambda == 0.0 {
        return Ok(y.to_vec());
    }
    let l = laplacian(g);
    let lp = laplacian_power_matrix(&l, k + 1);
    let diag: Vec<f64> = lp.diagonal().iter().map(|d| 1.0 + lambda * d).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        lp.mul_vec_into(x, out);
        for i in 0..x.len() {
            out[i] = x[i] + lambda * out[i];
        }
    };
    // the componentwise mean is untouched by the penalty; solve for the rest
    let comps = connected_components(g, &[])?;
    let mut means = vec![0.0; comps.count];
    let mut sizes = vec![0.0; comps.count];
    for (i, &c) in comps.labels.iter().enumerate() {
        means[c] += y[i];
        sizes[c] += 1.0;
    }
    let base: Vec<f64> = comps.labels.iter().map(|&c| means[c] / sizes[c]).collect();
    let rest: Vec<f64> = y.iter().zip(&base).map(|(a, b)| a - b).collect();
    let mut dev = vec![0.0; n];
    pcg(apply, &diag, &rest, &mut dev, 1e-13, 50 * n + 1000);
    Ok(base.iter().zip(&dev).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::chain;
    use crate::linalg::{max_abs_diff, mean};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn matches_dense_solve() {
        let g = chain(10).unwrap();
        let y: Vec<f64> = (0..10).map(|i| ((i * i) % 7) as f64 - 3.0).collect();
        let got = laplacian_smooth(&y, &g, 0, 1.0).unwrap();
        let l = laplacian(&g).to_dense();
        let a = DMatrix::identity(10, 10) + l;
        let want = a.lu().solve(&DVector::from_column_slice(&y)).unwrap();
        assert!(max_abs_diff(&got, want.as_slice()) < 1e-10);
    }

    #[test]
    fn limits() {
        let g = chain(8).unwrap();
        let y = [1.0, 4.0, -2.0, 0.0, 3.0, 3.0, 1.0, -1.0];
        assert_eq!(laplacian_smooth(&y, &g, 1, 0.0).unwrap(), y.to_vec());
        let flat = laplacian_smooth(&y, &g, 0, 1e12).unwrap();
        let m = mean(&y);
        assert!(flat.iter().all(|b| (b - m).abs() < 1e-4));
    }
}
