use crate::error::{Error, Result};
use crate::numerics::{tol, Matrix};

/// `dW/dτ = γ (W Σ − Tr(W Σ Wᵀ) W)`.
pub fn averaged_rhs(w: &Matrix, sigma: &Matrix, gamma: f64) -> Result<Matrix> {
    check_sigma(w, sigma)?;
    Ok(rhs(w, sigma, gamma))
}

fn check_sigma(w: &Matrix, sigma: &Matrix) -> Result<()> {
    if !sigma.is_square() || sigma.rows() != w.cols() {
        return Err(Error::Dimension(format!(
            "Σ must be {n}x{n}, got {}x{}",
            sigma.rows(),
            sigma.cols(),
            n = w.cols()
        )));
    }
    if sigma.max_asymmetry() > tol::SYMMETRY * sigma.frobenius().max(1.0) {
        return Err(Error::Input("Σ is not symmetric".into()));
    }
    Ok(())
}

fn rhs(w: &Matrix, sigma: &Matrix, gamma: f64) -> Matrix {
    let ws = w * sigma;
    let tr: f64 = ws.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
    let mut out = ws;
    out.add_scaled(-tr, w);
    out.scale(gamma)
}

/// One classical Runge–Kutta step of the averaged flow.
pub fn rk4_step(w: &Matrix, sigma: &Matrix, gamma: f64, h: f64) -> Matrix {
    let k1 = rhs(w, sigma, gamma);
    let mut y = w.clone();
    y.add_scaled(0.5 * h, &k1);
    let k2 = rhs(&y, sigma, gamma);
    let mut y = w.clone();
    y.add_scaled(0.5 * h, &k2);
    let k3 = rhs(&y, sigma, gamma);
    let mut y = w.clone();
    y.add_scaled(h, &k3);
    let k4 = rhs(&y, sigma, gamma);
    let mut out = w.clone();
    out.add_scaled(h / 6.0, &k1);
    out.add_scaled(h / 3.0, &k2);
    out.add_scaled(h / 3.0, &k3);
    out.add_scaled(h / 6.0, &k4);
    out
}

/// Integrates from `τ = 0` to `tau_end` with step `h` (the last step is
/// shortened to land exactly on `tau_end`).
pub fn integrate_averaged(w0: &Matrix, sigma: &Matrix, gamma: f64, tau_end: f64, h: f64) -> Result<Matrix> {
    Ok(averaged_trajectory(w0, sigma, gamma, &[tau_end], h)?.pop().expect("one checkpoint").1)
}

/// States at each requested time (ascending), integrating with step `h`.
pub fn averaged_trajectory(
    w0: &Matrix,
    sigma: &Matrix,
    gamma: f64,
    checkpoints: &[f64],
    h: f64,
) -> Result<Vec<(f64, Matrix)>> {
    check_sigma(w0, sigma)?;
    if !(h > 0.0) {
        return Err(Error::Input(format!("step must be positive, got {h}")));
    }
    if checkpoints.windows(2).any(|p| p[1] < p[0]) || checkpoints.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Input("checkpoints must be non-negative and ascending".into()));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut w = w0.clone();
    let mut tau = 0.0;
    for &target in checkpoints {
        while target - tau > 1e-12 * h {
            let step = h.min(target - tau);
            w = rk4_step(&w, sigma, gamma, step);
            tau += step;
        }
        out.push((target, w.clone()));
    }
    Ok(out)
}

/// Predicted ratio of two eigen-components of a row of `W` under the
/// averaged flow: `(c_k0 / c_j0) · exp(−γ (λ_j − λ_k) τ)`.
pub fn closed_form_ratio(c_k0: f64, c_j0: f64, lambda_j: f64, lambda_k: f64, gamma: f64, tau: f64) -> Result<f64> {
    if c_j0 == 0.0 {
        return Err(Error::DivisionByZero("reference component c_j0 is zero".into()));
    }
    Ok(c_k0 / c_j0 * (-gamma * (lambda_j - lambda_k) * tau).exp())
}
