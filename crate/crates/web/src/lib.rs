//! Browser bindings for three small demos: a coupled swarm run, the averaged
//! ODE against its closed-form decay, and the graph generator error on the
//! circle.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use dcrl::dynamics::{averaged_trajectory, closed_form_ratio};
use dcrl::harness::{self, ExperimentConfig, Resolved};
use dcrl::numerics::Matrix;

fn resolve(text: &str) -> Result<Resolved, String> {
    ExperimentConfig::from_toml(text).and_then(|c| c.resolve()).map_err(|e| e.to_string())
}

/// Outcome of [`simulate`].
#[wasm_bindgen]
pub struct SwarmRun {
    steps: Vec<f64>,
    lyapunov: Vec<f64>,
    sin_theta: Vec<f64>,
    latent: Vec<f64>,
    phase: String,
    frobenius: f64,
}

#[wasm_bindgen]
impl SwarmRun {
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> Vec<f64> {
        self.steps.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lyapunov(&self) -> Vec<f64> {
        self.lyapunov.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sin_theta(&self) -> Vec<f64> {
        self.sin_theta.clone()
    }

    /// Final latent coordinates `Y = X Wᵀ`, row-major `N × 2`.
    #[wasm_bindgen(getter)]
    pub fn latent(&self) -> Vec<f64> {
        self.latent.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn phase(&self) -> String {
        self.phase.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn frobenius(&self) -> f64 {
        self.frobenius
    }
}

/// One seed of the coupled system with a two-dimensional latent space.
/// `kind` is any manifold kind accepted by the config (`swiss_roll`,
/// `torus`, …) and `ratio` is `η_w/η_x`.
#[wasm_bindgen]
pub fn simulate(kind: &str, population: usize, steps: usize, ratio: f64, seed: u32) -> Result<SwarmRun, String> {
    let every = (steps / 100).max(1);
    let r = resolve(&format!(
        "[experiment]\npopulation = {population}\nlatent_dim = 2\nsteps = {steps}\nseeds = [{seed}]\n\
         metrics_every = {every}\n[manifold]\nkind = \"{kind}\"\n"
    ))?;
    let r = r.with(|c| c.dynamics.eta_w = ratio * c.dynamics.eta_x).map_err(|e| e.to_string())?;
    let run = harness::simulate(&r, seed.into()).map_err(|e| e.to_string())?;
    Ok(SwarmRun {
        steps: run.records.iter().map(|m| m.step as f64).collect(),
        lyapunov: run.records.iter().map(|m| m.v).collect(),
        sin_theta: run.records.iter().map(|m| m.sin_theta).collect(),
        latent: run.swarm.positions.matmul_t(run.w.matrix()).into_vec(),
        phase: format!("{:?}", run.summary.phase),
        frobenius: run.w.frobenius(),
    })
}

/// Averaged ODE on `diag(l1, l2, l3)` from `W₀ = (½, ½, ½)`, sampled at
/// `samples` times in `[0, tau_max]`. Rows of five: `τ`, integrated and
/// closed-form `w₂/w₁`, integrated and closed-form `w₃/w₁`.
#[wasm_bindgen]
pub fn decay_curves(l1: f64, l2: f64, l3: f64, tau_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(tau_max > 0.0) {
        return Err("need at least two samples and a positive horizon".into());
    }
    let lambdas = [l1, l2, l3];
    let w0 = Matrix::row_vector(&[0.5, 0.5, 0.5]);
    let taus: Vec<f64> = (0..samples).map(|i| tau_max * i as f64 / (samples - 1) as f64).collect();
    let traj = averaged_trajectory(&w0, &Matrix::diag(&lambdas), 1.0, &taus, 1e-3).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(5 * samples);
    for (tau, w) in traj {
        out.push(tau);
        for k in [1, 2] {
            out.push(w.row(0)[k] / w.row(0)[0]);
            out.push(closed_form_ratio(0.5, 0.5, lambdas[0], lambdas[k], 1.0, tau).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// `[scaling diagnostic, sup error]` of the graph generator on `n` uniform
/// points of the unit circle with connectivity radius `epsilon`, tested on
/// `cos θ` with zero potential.
#[wasm_bindgen]
pub fn generator_error(n: usize, epsilon: f64, seed: u32) -> Result<Vec<f64>, String> {
    let r = resolve(&format!(
        "[experiment]\npopulation = {n}\nlatent_dim = 1\nseeds = [{seed}]\n[manifold]\nkind = \"circle\"\n"
    ))?;
    let entry = harness::generator_test(&r, &[(n, epsilon)]).map_err(|e| e.to_string())?.remove(0);
    if entry.isolated_nodes[0] > 0 {
        return Err(format!("{} isolated nodes; increase ε or N", entry.isolated_nodes[0]));
    }
    Ok(vec![entry.scaling_diagnostic, entry.median_sup_error])
}
