use crate::error::{Error, Result};
use crate::numerics::matrix::{axpy, dot, norm};
use crate::numerics::{sym_eig, tol, Matrix};

/// Eigen-split of a covariance into its top-`m` subspace and complement.
#[derive(Clone, Debug)]
pub struct SpectralReference {
    pub sigma: Matrix,
    /// `n×m`, leading eigenvectors as columns.
    pub q_m: Matrix,
    /// `n×(n−m)`.
    pub q_perp: Matrix,
    /// All `n` eigenvalues, descending.
    pub lambda: Vec<f64>,
}

impl SpectralReference {
    pub fn new(sigma: &Matrix, m: usize) -> Result<Self> {
        let eig = sym_eig(sigma)?;
        let n = sigma.rows();
        if m == 0 || m > n {
            return Err(Error::Dimension(format!("latent dimension {m} outside 1..={n}")));
        }
        Ok(SpectralReference {
            sigma: sigma.clone(),
            q_m: eig.eigenvectors.columns(0, m),
            q_perp: eig.eigenvectors.columns(m, n),
            lambda: eig.eigenvalues,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.q_m.cols()
    }

    /// `λ_m − λ_{m+1}` (infinite when `m = n`).
    pub fn spectral_gap(&self) -> f64 {
        let m = self.latent_dim();
        self.lambda.get(m).map_or(f64::INFINITY, |next| self.lambda[m - 1] - next)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceAngle {
    pub sin_theta: f64,
    /// `W` was numerically rank deficient; `sin_theta` is then reported as 1.
    pub rank_deficient: bool,
}

/// Sine of the largest principal angle between `row(W)` and `span(Q_m)`.
///
/// Equivalent to `√(1 − σ_min(Q_mᵀ Ŵᵀ)²)` for a row-orthonormalised `Ŵ`, but
/// evaluated as the largest singular value of `Q_⊥ᵀ Ŵᵀ`, which keeps full
/// relative precision when the angle is tiny.
pub fn subspace_angle(w: &Matrix, reference: &SpectralReference) -> SubspaceAngle {
    let Some(w_hat) = orthonormal_rows(w) else {
        log::debug!("subspace angle requested for a rank-deficient W");
        return SubspaceAngle { sin_theta: 1.0, rank_deficient: true };
    };
    if reference.q_perp.cols() == 0 {
        return SubspaceAngle { sin_theta: 0.0, rank_deficient: false };
    }
    let c = &w_hat * &reference.q_perp;
    let gram = c.matmul_t(&c);
    let top = sym_eig(&gram).map(|e| e.eigenvalues[0]).unwrap_or(1.0);
    SubspaceAngle { sin_theta: top.max(0.0).sqrt().min(1.0), rank_deficient: false }
}

/// Rows of `W` made orthonormal (modified Gram–Schmidt, two passes); `None`
/// when a row is numerically dependent on the previous ones.
pub fn orthonormal_rows(w: &Matrix) -> Option<Matrix> {
    let mut out = w.clone();
    for i in 0..w.rows() {
        let original = norm(w.row(i));
        for _ in 0..2 {
            for k in 0..i {
                let (done, rest) = out.as_mut_slice().split_at_mut(i * w.cols());
                let qk = &done[k * w.cols()..(k + 1) * w.cols()];
                let ri = &mut rest[..w.cols()];
                let p = dot(qk, ri);
                axpy(-p, qk, ri);
            }
        }
        let r = norm(out.row(i));
        if original == 0.0 || r <= tol::RANK * original {
            return None;
        }
        out.row_mut(i).iter_mut().for_each(|x| *x /= r);
    }
    Some(out)
}

/// `||W Q_⊥||_F`.
pub fn noise_projection(w: &Matrix, reference: &SpectralReference) -> f64 {
    (w * &reference.q_perp).frobenius()
}

/// `||W Σ − Γ̂ W||_F` with `Γ̂ = diag(W Σ Wᵀ)`.
pub fn stationarity_residual(w: &Matrix, sigma: &Matrix) -> f64 {
    let ws = w * sigma;
    let mut r = ws.clone();
    for i in 0..w.rows() {
        let gamma = dot(ws.row(i), w.row(i));
        axpy(-gamma, w.row(i), r.row_mut(i));
    }
    r.frobenius()
}
