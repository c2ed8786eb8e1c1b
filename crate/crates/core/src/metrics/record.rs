use serde::{Deserialize, Serialize};

use super::energy::{effective_rank, joint_energy, latent_covariance, lyapunov, ortho_error};
use super::spectral::{noise_projection, subspace_angle, SpectralReference};
use crate::numerics::{sym_eig, Matrix};

/// Diagnostics at one step of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "dV")]
    pub dv: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub frob_w: f64,
    pub sin_theta: f64,
    pub ortho_error: f64,
    pub eff_rank: f64,
    pub noise_proj: f64,
    pub latent_eigs: Vec<f64>,
}

impl MetricsRecord {
    /// Metrics of `(X, W)` against `reference`; `dv` is `V − v_prev`.
    pub fn compute(
        step: usize,
        x: &Matrix,
        w: &Matrix,
        lambda_reg: f64,
        v_prev: f64,
        reference: &SpectralReference,
    ) -> MetricsRecord {
        let sigma_y = latent_covariance(x, w);
        let latent_eigs = sym_eig(&sigma_y).map(|e| e.eigenvalues).unwrap_or_else(|_| vec![f64::NAN; w.rows()]);
        let v = lyapunov(w);
        MetricsRecord {
            step,
            v,
            dv: v - v_prev,
            e: joint_energy(x, w, lambda_reg),
            frob_w: w.frobenius(),
            sin_theta: subspace_angle(w, reference).sin_theta,
            ortho_error: ortho_error(&sigma_y),
            eff_rank: effective_rank(&sigma_y),
            noise_proj: noise_projection(w, reference),
            latent_eigs,
        }
    }

    pub const SCALAR_COLUMNS: [&'static str; 9] =
        ["step", "V", "dV", "E", "frob_W", "sin_theta", "ortho_error", "eff_rank", "noise_proj"];

    pub fn csv_header(m: usize) -> String {
        let mut cols: Vec<String> = Self::SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend((1..=m).map(|k| format!("latent_eig_{k}")));
        cols.join(",")
    }

    /// Shortest round-trip formatting, so equal runs give equal bytes.
    pub fn csv_row(&self) -> String {
        let mut out = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            self.v,
            self.dv,
            self.e,
            self.frob_w,
            self.sin_theta,
            self.ortho_error,
            self.eff_rank,
            self.noise_proj
        );
        for l in &self.latent_eigs {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out
    }

    /// Named scalar metrics, in CSV column order (step excluded).
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("V", self.v),
            ("dV", self.dv),
            ("E", self.e),
            ("frob_W", self.frob_w),
            ("sin_theta", self.sin_theta),
            ("ortho_error", self.ortho_error),
            ("eff_rank", self.eff_rank),
            ("noise_proj", self.noise_proj),
        ]
    }
}
