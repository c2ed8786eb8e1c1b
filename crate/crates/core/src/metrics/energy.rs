use crate::numerics::Matrix;

/// `E = −(1/2N) Tr(X Wᵀ W Xᵀ) + (λ/4)(||W||²_F − 1)²`.
pub fn joint_energy(x: &Matrix, w: &Matrix, lambda_reg: f64) -> f64 {
    let y = x.matmul_t(w);
    let variance = y.frobenius_sq() / (2.0 * x.rows() as f64);
    -variance + lambda_reg * lyapunov(w)
}

/// `∇_X E = −(1/N) X Wᵀ W`.
pub fn grad_x(x: &Matrix, w: &Matrix) -> Matrix {
    let y = x.matmul_t(w);
    (&y * w).scale(-1.0 / x.rows() as f64)
}

/// `∇_W E = −(1/N) W XᵀX + λ(||W||²_F − 1) W`.
pub fn grad_w(x: &Matrix, w: &Matrix, lambda_reg: f64) -> Matrix {
    let y = x.matmul_t(w);
    let mut g = y.t_matmul(x).scale(-1.0 / x.rows() as f64);
    g.add_scaled(lambda_reg * (w.frobenius_sq() - 1.0), w);
    g
}

/// `V = ¼(||W||²_F − 1)²`.
pub fn lyapunov(w: &Matrix) -> f64 {
    let s = w.frobenius_sq() - 1.0;
    0.25 * s * s
}

/// `dV/dτ` along the averaged flow: `−γ Tr(W Σ Wᵀ)(||W||²_F − 1)²`.
///
/// Differentiating `V` gives `(||W||² − 1)⟨W, Ẇ⟩`, and
/// `⟨W, Ẇ⟩ = γ Tr(WΣWᵀ)(1 − ||W||²)`, so there is no factor of one half.
pub fn lyapunov_rate(w: &Matrix, sigma: &Matrix, gamma: f64) -> f64 {
    let ws = w * sigma;
    let tr: f64 = ws.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
    let s = w.frobenius_sq() - 1.0;
    -gamma * tr * s * s
}

/// `Σ_Y = W Σ̂ Wᵀ = (1/N) YᵀY` with `Y = X Wᵀ`.
pub fn latent_covariance(x: &Matrix, w: &Matrix) -> Matrix {
    let y = x.matmul_t(w);
    y.t_matmul(&y).scale(1.0 / x.rows() as f64)
}

/// `||offdiag(Σ_Y)||_F / ||Σ_Y||_F`, zero for a zero matrix.
pub fn ortho_error(sigma_y: &Matrix) -> f64 {
    let total = sigma_y.frobenius_sq();
    if total == 0.0 {
        return 0.0;
    }
    let diag: f64 = sigma_y.diagonal().iter().map(|d| d * d).sum();
    ((total - diag).max(0.0) / total).sqrt()
}

/// Participation ratio `(Σλ)² / Σλ²` of the eigenvalues, zero for a zero
/// matrix. Uses `Tr(Σ)` and `||Σ||²_F`, which equal the eigenvalue sums for
/// symmetric input.
pub fn effective_rank(sigma_y: &Matrix) -> f64 {
    let f2 = sigma_y.frobenius_sq();
    if f2 == 0.0 {
        return 0.0;
    }
    sigma_y.trace().powi(2) / f2
}
