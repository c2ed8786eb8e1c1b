//! Joint energy and its gradients, the Lyapunov functional, spectral
//! alignment and disentanglement diagnostics, and a linear probe.

mod energy;
mod probe;
mod record;
mod spectral;

pub use energy::{effective_rank, grad_w, grad_x, joint_energy, latent_covariance, lyapunov, lyapunov_rate, ortho_error};
pub use probe::linear_probe;
pub use record::MetricsRecord;
pub use spectral::{
    noise_projection, orthonormal_rows, stationarity_residual, subspace_angle, SpectralReference, SubspaceAngle,
};

#[cfg(test)]
mod tests;
