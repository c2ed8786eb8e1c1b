use std::collections::VecDeque;

use super::matrix::Matrix;
use super::tol;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2_000_000;

/// Stationary distribution of a row-stochastic matrix by power iteration.
///
/// Iterates the lazy chain `½(I + P)`, which has the same stationary vector
/// but no periodic eigenvalues, and stops once `||πP − π||₁ ≤ tol` for the
/// original `P`. Reducible chains are rejected up front: their stationary
/// vector is not unique, so iteration "converging" would be meaningless.
pub fn power_stationary(p: &Matrix, tol: f64) -> Result<Vec<f64>> {
    if !p.is_square() || p.rows() == 0 {
        return Err(Error::Dimension(format!("transition matrix must be square, got {}x{}", p.rows(), p.cols())));
    }
    let n = p.rows();
    for (i, row) in p.row_iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > tol::ROW_SUM || row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Input(format!("row {i} is not a probability vector (sum {s})")));
        }
    }
    if !strongly_connected(p) {
        return Err(Error::Convergence("chain is reducible; no unique stationary distribution".into()));
    }

    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..MAX_ITERATIONS {
        let next = p.vec_mat(&pi);
        let residual: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            return Ok(pi);
        }
        for (x, y) in pi.iter_mut().zip(&next) {
            *x = 0.5 * (*x + y);
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
    }
    Err(Error::Convergence(format!("power iteration did not reach tolerance {tol:e}")))
}

fn strongly_connected(p: &Matrix) -> bool {
    let n = p.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let w = if forward { p[(i, j)] } else { p[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SeededRng;

    #[test]
    fn identity_chain_is_reducible() {
        assert!(matches!(power_stationary(&Matrix::identity(2), 1e-12), Err(Error::Convergence(_))));
    }

    #[test]
    fn doubly_stochastic_gives_uniform() {
        let p = Matrix::from_rows(&[vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]]).unwrap();
        let pi = power_stationary(&p, 1e-14).unwrap();
        assert!(pi.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-13));
    }

    #[test]
    fn periodic_chain_still_converges() {
        let p = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let pi = power_stationary(&p, 1e-14).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reversible_chain_matches_gibbs_weights() {
        // Random symmetric conductances c_ij give a reversible walk with
        // π_i ∝ Σ_j c_ij, computed directly.
        let mut rng = SeededRng::new(5);
        let n = 5;
        let mut c = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let w = rng.uniform_range(0.1, 1.0);
                c[(i, j)] = w;
                c[(j, i)] = w;
            }
        }
        let mass: Vec<f64> = c.row_iter().map(|r| r.iter().sum()).collect();
        let p = Matrix::from_fn(n, n, |i, j| c[(i, j)] / mass[i]);
        let total: f64 = mass.iter().sum();
        let pi = power_stationary(&p, 1e-14).unwrap();
        for (x, m) in pi.iter().zip(&mass) {
            assert!((x - m / total).abs() <= 1e-10);
        }
    }

    #[test]
    fn residual_meets_tolerance() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1, 0.0], vec![0.2, 0.7, 0.1], vec![0.0, 0.5, 0.5]]).unwrap();
        let tol = 1e-13;
        let pi = power_stationary(&p, tol).unwrap();
        let next = p.vec_mat(&pi);
        let r: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        assert!(r <= tol);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let p = Matrix::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(power_stationary(&p, 1e-12), Err(Error::Input(_))));
    }
}
