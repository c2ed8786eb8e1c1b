//! The coupled slow–fast integrator: projected Langevin moves for the agents,
//! swarm-averaged Oja plasticity for `W`, and the averaged ODE that the
//! plasticity follows when the timescales separate.

mod ode;

use serde::{Deserialize, Serialize};

pub use ode::{averaged_rhs, averaged_trajectory, closed_form_ratio, integrate_averaged, rk4_step};

use crate::error::{Error, Result};
use crate::geometry::Swarm;
use crate::metrics::lyapunov;
use crate::numerics::{gauss_matrix, tol, Matrix, SeededRng};

/// The `m×n` representation matrix and a count of plasticity updates applied.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    w: Matrix,
    pub updates: u64,
}

impl WeightMatrix {
    pub fn new(w: Matrix) -> Result<Self> {
        if w.rows() == 0 || w.rows() > w.cols() {
            return Err(Error::Dimension(format!("W must be m×n with 1 ≤ m ≤ n, got {}x{}", w.rows(), w.cols())));
        }
        if !w.is_finite() {
            return Err(Error::Input("W has non-finite entries".into()));
        }
        Ok(WeightMatrix { w, updates: 0 })
    }

    /// Gaussian entries rescaled to the requested Frobenius norm.
    pub fn gaussian(rng: &mut SeededRng, m: usize, n: usize, frobenius: f64) -> Result<Self> {
        let g = gauss_matrix(rng, m, n)?;
        let s = frobenius / g.frobenius();
        WeightMatrix::new(g.scale(s))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn into_matrix(self) -> Matrix {
        self.w
    }

    pub fn latent_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn frobenius(&self) -> f64 {
        self.w.frobenius()
    }

    /// Whether the divergence guard should stop the run.
    pub fn diverged(&self) -> bool {
        let f = self.frobenius();
        !f.is_finite() || f > tol::DIVERGENCE_NORM || lyapunov(&self.w) > tol::DIVERGENCE_LYAPUNOV
    }
}

/// Step sizes and physical constants of the coupled system.
///
/// `gamma` scales the averaged ODE only; in the discrete plasticity step it
/// is absorbed into `eta_w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub eta_x: f64,
    pub eta_w: f64,
    pub diffusion: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_reg: f64,
    pub steps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            eta_x: 1e-2,
            eta_w: 1e-3,
            diffusion: 0.5,
            beta: 1.0,
            gamma: 1.0,
            lambda_reg: 1.0,
            steps: 15_000,
        }
    }
}

impl DynamicsConfig {
    /// Zero step sizes and a zero diffusion are allowed: they switch off one
    /// half of the coupled system.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_x", self.eta_x),
            ("eta_w", self.eta_w),
            ("diffusion", self.diffusion),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda_reg", self.lambda_reg),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Input(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `η_w / η_x`.
    pub fn timescale_ratio(&self) -> f64 {
        self.eta_w / self.eta_x
    }

    /// Timescale separation `ε = η_w / (γ η_x)`.
    pub fn separation(&self) -> f64 {
        self.eta_w / (self.gamma * self.eta_x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LangevinReport {
    /// Agents whose retraction failed and which kept their previous position.
    pub projection_failures: usize,
}

/// One projected Euler–Maruyama step for every agent:
/// `x ← Π(x + η_x D β WᵀW x + √(2 D η_x) ξ)`.
///
/// Each agent draws its noise from its own stream seeded with
/// `step_seed ^ index`, so the result does not depend on scheduling.
pub fn langevin_step(swarm: &mut Swarm, w: &WeightMatrix, cfg: &DynamicsConfig, rng: &mut SeededRng) -> Result<LangevinReport> {
    let step_seed = rng.next_u64();
    let noise = (2.0 * cfg.diffusion * cfg.eta_x).sqrt();
    move_agents(swarm, w, cfg.eta_x * cfg.diffusion * cfg.beta, noise, Some(step_seed))
}

/// The drift-only part of [`langevin_step`].
pub fn drift_step(swarm: &mut Swarm, w: &WeightMatrix, cfg: &DynamicsConfig) -> Result<LangevinReport> {
    move_agents(swarm, w, cfg.eta_x * cfg.diffusion * cfg.beta, 0.0, None)
}

fn move_agents(
    swarm: &mut Swarm,
    w: &WeightMatrix,
    drift: f64,
    noise: f64,
    step_seed: Option<u64>,
) -> Result<LangevinReport> {
    let n = swarm.ambient_dim();
    if w.ambient_dim() != n {
        return Err(Error::Dimension(format!("W has {} columns, swarm lives in R^{n}", w.ambient_dim())));
    }
    if drift == 0.0 && noise == 0.0 {
        return Ok(LangevinReport::default());
    }
    let w = w.matrix();
    let manifold = swarm.manifold.clone();

    let update = |(i, row): (usize, &mut [f64])| -> usize {
        let g = w.vec_mat(&w.mat_vec(row));
        let mut next: Vec<f64> = row.iter().zip(&g).map(|(x, gi)| x + drift * gi).collect();
        if let Some(seed) = step_seed {
            let mut agent_rng = SeededRng::new(seed ^ i as u64);
            for v in next.iter_mut() {
                *v += noise * agent_rng.normal();
            }
        }
        match manifold.project(&next) {
            Ok(p) => {
                row.copy_from_slice(&p);
                0
            }
            Err(e) => {
                log::warn!("agent {i}: {e}; keeping previous position");
                1
            }
        }
    };

    #[cfg(feature = "parallel")]
    let projection_failures = {
        use rayon::prelude::*;
        swarm.positions.as_mut_slice().par_chunks_exact_mut(n).enumerate().map(update).sum::<usize>()
    };
    #[cfg(not(feature = "parallel"))]
    let projection_failures = swarm.positions.as_mut_slice().chunks_exact_mut(n).enumerate().map(update).sum::<usize>();
    Ok(LangevinReport { projection_failures })
}

/// Swarm-averaged Oja update
/// `W ← W + η_w (1/N) Σᵢ [(W xᵢ) xᵢᵀ − ||W xᵢ||² W]`.
///
/// The sum is reorganised as `W Σ̂ − Tr(W Σ̂ Wᵀ) W` with `Σ̂ = (1/N) XᵀX`,
/// accumulated over agents in index order.
pub fn oja_update(w: &WeightMatrix, positions: &Matrix, eta_w: f64) -> Result<WeightMatrix> {
    if positions.cols() != w.ambient_dim() {
        return Err(Error::Dimension(format!("W has {} columns, data has {}", w.ambient_dim(), positions.cols())));
    }
    if positions.rows() == 0 {
        return Err(Error::Input("Oja update needs at least one sample".into()));
    }
    let mut next = w.matrix().clone();
    next.add_scaled(eta_w, &oja_increment(w.matrix(), positions));
    Ok(WeightMatrix { w: next, updates: w.updates + 1 })
}

/// `ΔW = (1/N) Σᵢ [(W xᵢ) xᵢᵀ − ||W xᵢ||² W]`.
pub fn oja_increment(w: &Matrix, x: &Matrix) -> Matrix {
    let inv_n = 1.0 / x.rows() as f64;
    let y = x.matmul_t(w); // N×m, rows W xᵢ
    let mut delta = y.t_matmul(x).scale(inv_n);
    let energy = y.frobenius_sq() * inv_n;
    delta.add_scaled(-energy, w);
    delta
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub projection_failures: usize,
    pub diverged: bool,
}

/// One iteration of the coupled loop: move the agents, then update `W` from
/// the post-move swarm.
pub fn coupled_step(
    swarm: &mut Swarm,
    w: &mut WeightMatrix,
    cfg: &DynamicsConfig,
    rng: &mut SeededRng,
) -> Result<StepReport> {
    let moved = langevin_step(swarm, w, cfg, rng)?;
    if cfg.eta_w != 0.0 {
        *w = oja_update(w, &swarm.positions, cfg.eta_w)?;
    }
    Ok(StepReport { projection_failures: moved.projection_failures, diverged: w.diverged() })
}

#[cfg(test)]
mod tests;
