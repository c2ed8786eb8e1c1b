use super::matrix::Matrix;
use super::tol;
use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order
/// and eigenvectors stored as the matching columns.
#[derive(Clone, Debug)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SymEigResult {
    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let q = &self.eigenvectors;
        let scaled = Matrix::from_fn(q.rows(), q.cols(), |i, j| q[(i, j)] * self.eigenvalues[j]);
        scaled.matmul_t(q)
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver.
///
/// The input is symmetrised as `(A + Aᵀ)/2` after the symmetry check so that
/// round-off asymmetry below the tolerance cannot leak into the rotations.
pub fn sym_eig(a: &Matrix) -> Result<SymEigResult> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("sym_eig needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let scale = a.frobenius().max(1.0);
    let asym = a.max_asymmetry();
    if asym > tol::SYMMETRY * scale {
        return Err(Error::Symmetry(asym));
    }
    if !a.is_finite() {
        return Err(Error::Input("sym_eig input has non-finite entries".into()));
    }

    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);
    let target = f64::EPSILON * m.frobenius();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }
    if off_diagonal_norm(&m) > 1e3 * target.max(f64::MIN_POSITIVE) {
        return Err(Error::Convergence(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEigResult { eigenvalues, eigenvectors })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies the Jacobi rotation J(p, q, θ) as `m ← Jᵀ m J`, `v ← v J`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
