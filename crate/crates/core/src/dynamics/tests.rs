use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::geometry::{sample_uniform, ManifoldSpec};
use crate::metrics::lyapunov;
use crate::numerics::{gauss_matrix, Matrix};

fn cfg(eta_x: f64, eta_w: f64, diffusion: f64) -> DynamicsConfig {
    DynamicsConfig { eta_x, eta_w, diffusion, ..DynamicsConfig::default() }
}

#[test]
fn zero_diffusion_leaves_swarm_unchanged() {
    let spec = ManifoldSpec::swiss_roll_default();
    let mut swarm = sample_uniform(&spec, 100, &mut SeededRng::new(1)).unwrap();
    let before = swarm.positions.clone();
    let w = WeightMatrix::gaussian(&mut SeededRng::new(2), 2, 3, 1.0).unwrap();
    langevin_step(&mut swarm, &w, &cfg(0.1, 0.0, 0.0), &mut SeededRng::new(3)).unwrap();
    assert_eq!(swarm.positions, before);
}

#[test]
fn radial_drift_is_cancelled_on_the_sphere() {
    let spec = ManifoldSpec::Sphere { radius: 1.0, ambient_dim: 3 };
    let mut swarm = sample_uniform(&spec, 200, &mut SeededRng::new(4)).unwrap();
    let before = swarm.positions.clone();
    let w = WeightMatrix::new(Matrix::identity(3)).unwrap();
    drift_step(&mut swarm, &w, &cfg(0.05, 0.0, 1.0)).unwrap();
    assert!(swarm.positions.max_abs_diff(&before) < 1e-15);
}

#[test]
fn mean_displacement_matches_drift() {
    let spec = ManifoldSpec::synthetic(vec![1.0, 1.0], 0).unwrap();
    let n = 10_000;
    let mut swarm = sample_uniform(&spec, n, &mut SeededRng::new(5)).unwrap();
    let before = swarm.positions.clone();
    let w = WeightMatrix::new(Matrix::row_vector(&[1.0, 0.0])).unwrap();
    let c = DynamicsConfig { eta_x: 0.01, diffusion: 0.5, beta: 2.0, ..DynamicsConfig::default() };
    langevin_step(&mut swarm, &w, &c, &mut SeededRng::new(6)).unwrap();
    let disp: f64 = (0..n).map(|i| swarm.positions[(i, 0)] - before[(i, 0)]).sum::<f64>() / n as f64;
    let mean_x1: f64 = before.column(0).iter().sum::<f64>() / n as f64;
    let expected = c.eta_x * c.diffusion * c.beta * mean_x1;
    let se = (2.0 * c.diffusion * c.eta_x / n as f64).sqrt();
    assert!((disp - expected).abs() <= 3.0 * se, "{disp} vs {expected}");
}

#[test]
fn langevin_is_reproducible() {
    let spec = ManifoldSpec::Torus { major: 2.0, minor: 0.5 };
    let w = WeightMatrix::gaussian(&mut SeededRng::new(7), 2, 3, 1.0).unwrap();
    let run = || {
        let mut s = sample_uniform(&spec, 64, &mut SeededRng::new(8)).unwrap();
        let mut rng = SeededRng::new(9);
        for _ in 0..5 {
            langevin_step(&mut s, &w, &cfg(0.01, 0.0, 0.5), &mut rng).unwrap();
        }
        s.positions
    };
    let a = run();
    assert_eq!(a, run());
    let s = Swarm::new(a, Arc::new(spec.clone())).unwrap();
    assert!(s.max_constraint_residual() < 1e-10);
}

#[test]
fn oja_special_cases() {
    let w = WeightMatrix::gaussian(&mut SeededRng::new(10), 2, 3, 1.0).unwrap();
    let next = oja_update(&w, &Matrix::zeros(4, 3), 0.1).unwrap();
    assert_eq!(next.matrix(), w.matrix());
    assert_eq!(next.updates, 1);

    let e1 = WeightMatrix::new(Matrix::row_vector(&[1.0, 0.0, 0.0])).unwrap();
    let x = Matrix::row_vector(&[1.0, 0.0, 0.0]);
    assert_eq!(oja_increment(e1.matrix(), &x).max_abs(), 0.0);
}

#[test]
fn oja_matches_per_sample_loop() {
    let mut rng = SeededRng::new(11);
    let x = gauss_matrix(&mut rng, 7, 3).unwrap();
    let w = gauss_matrix(&mut rng, 2, 3).unwrap();
    let mut delta = Matrix::zeros(2, 3);
    for xi in x.row_iter() {
        let wx = w.mat_vec(xi);
        let energy: f64 = wx.iter().map(|v| v * v).sum();
        for a in 0..2 {
            for b in 0..3 {
                delta[(a, b)] += (wx[a] * xi[b] - energy * w[(a, b)]) / 7.0;
            }
        }
    }
    assert!(oja_increment(&w, &x).max_abs_diff(&delta) <= 1e-14);
}

#[test]
fn oja_step_equals_averaged_rhs_on_the_sample() {
    let mut rng = SeededRng::new(12);
    let x = gauss_matrix(&mut rng, 50, 4).unwrap();
    let w = WeightMatrix::new(gauss_matrix(&mut rng, 2, 4).unwrap()).unwrap();
    let eta = 0.03;
    let next = oja_update(&w, &x, eta).unwrap();
    let rhs = averaged_rhs(w.matrix(), &x.second_moment(), 1.0).unwrap();
    let step = next.matrix() - w.matrix();
    assert!(step.max_abs_diff(&rhs.scale(eta)) <= 1e-12);
}

#[test]
fn averaged_rhs_cases() {
    let sigma = Matrix::diag(&[3.0, 2.0, 1.0]);
    assert_eq!(averaged_rhs(&Matrix::zeros(1, 3), &sigma, 1.0).unwrap().max_abs(), 0.0);
    let q1 = Matrix::row_vector(&[1.0, 0.0, 0.0]);
    assert!(averaged_rhs(&q1, &sigma, 2.0).unwrap().max_abs() < 1e-15);
    let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(averaged_rhs(&Matrix::zeros(1, 2), &asym, 1.0), Err(Error::Input(_))));
}

#[test]
fn rk4_ratio_matches_closed_form() {
    let sigma = Matrix::diag(&[3.0, 2.0, 1.0]);
    let w0 = Matrix::row_vector(&[0.3, -0.5, 0.4]);
    let w = integrate_averaged(&w0, &sigma, 1.0, 2.0, tol::RK4_STEP).unwrap();
    let predicted = closed_form_ratio(0.4, 0.3, 3.0, 1.0, 1.0, 2.0).unwrap();
    let observed = w[(0, 2)] / w[(0, 0)];
    assert!(((observed - predicted) / predicted).abs() <= 1e-6);
}

#[test]
fn closed_form_ratio_cases() {
    assert_eq!(closed_form_ratio(2.0, 4.0, 3.0, 1.0, 1.0, 0.0).unwrap(), 0.5);
    assert_eq!(closed_form_ratio(2.0, 4.0, 1.5, 1.5, 1.0, 7.0).unwrap(), 0.5);
    let r = closed_form_ratio(1.0, 1.0, 2.0, 1.0, 1.0, std::f64::consts::LN_2).unwrap();
    assert!((r - 0.5).abs() < 1e-15);
    assert!(matches!(closed_form_ratio(1.0, 0.0, 2.0, 1.0, 1.0, 1.0), Err(Error::DivisionByZero(_))));
}

#[test]
fn lyapunov_is_monotone_along_rk4() {
    let mut rng = SeededRng::new(13);
    let a = gauss_matrix(&mut rng, 4, 4).unwrap();
    let sigma = a.t_matmul(&a);
    let mut w = gauss_matrix(&mut rng, 2, 4).unwrap().scale(0.3);
    let mut last = lyapunov(&w);
    for _ in 0..5000 {
        w = rk4_step(&w, &sigma, 1.0, tol::RK4_STEP);
        let v = lyapunov(&w);
        assert!(v <= last + 1e-15);
        last = v;
    }
}

#[test]
fn unit_norm_fixed_points_are_eigenvectors() {
    let sigma = Matrix::diag(&[2.0, 1.2, 0.5]);
    let w0 = Matrix::row_vector(&[0.2, 0.6, -0.3]);
    let w = integrate_averaged(&w0, &sigma, 1.0, 40.0, 1e-2).unwrap();
    assert!((w.frobenius() - 1.0).abs() < 1e-10);
    let ws = &w * &sigma;
    let tr = crate::numerics::matrix::dot(ws.row(0), w.row(0));
    let residual = (&ws - &w.scale(tr)).frobenius();
    assert!(residual < 1e-10, "{residual}");
}

#[test]
fn plasticity_consumes_post_move_positions() {
    let spec = ManifoldSpec::swiss_roll_default();
    let swarm0 = sample_uniform(&spec, 80, &mut SeededRng::new(14)).unwrap();
    let w0 = WeightMatrix::gaussian(&mut SeededRng::new(15), 2, 3, 0.5).unwrap();
    let c = cfg(0.01, 0.001, 0.5);

    let (mut s, mut w) = (swarm0.clone(), w0.clone());
    coupled_step(&mut s, &mut w, &c, &mut SeededRng::new(16)).unwrap();

    let mut moved = swarm0.clone();
    langevin_step(&mut moved, &w0, &c, &mut SeededRng::new(16)).unwrap();
    assert_eq!(s.positions, moved.positions);
    assert_eq!(w, oja_update(&w0, &moved.positions, c.eta_w).unwrap());
    assert_ne!(w, oja_update(&w0, &swarm0.positions, c.eta_w).unwrap());
}

#[test]
fn divergence_guard_trips() {
    let big = WeightMatrix::new(Matrix::row_vector(&[2e6, 0.0])).unwrap();
    assert!(big.diverged());
    let v_big = WeightMatrix::new(Matrix::row_vector(&[2000.0, 0.0])).unwrap();
    assert!(v_big.diverged());
    assert!(!WeightMatrix::new(Matrix::row_vector(&[10.0, 0.0])).unwrap().diverged());
}

#[test]
fn config_validation() {
    assert!(DynamicsConfig::default().validate().is_ok());
    assert!(DynamicsConfig { eta_x: -1.0, ..DynamicsConfig::default() }.validate().is_err());
    assert!(DynamicsConfig { diffusion: f64::NAN, ..DynamicsConfig::default() }.validate().is_err());
    assert!((DynamicsConfig::default().timescale_ratio() - 0.1).abs() < 1e-15);
}

proptest! {
    #[test]
    fn closed_form_agrees_with_rk4(seed in any::<u64>(), tau in 0.1f64..5.0) {
        let mut rng = SeededRng::new(seed);
        let mut lams: Vec<f64> = (0..3).map(|_| rng.uniform_range(0.0, 2.0)).collect();
        lams.sort_by(|a, b| b.total_cmp(a));
        lams[1] = lams[1].min(lams[0] - 0.1);
        lams[2] = lams[2].min(lams[1] - 0.1);
        let sigma = Matrix::diag(&lams);
        let c: Vec<f64> = (0..3).map(|_| rng.uniform_range(0.2, 1.0)).collect();
        let w = integrate_averaged(&Matrix::row_vector(&c), &sigma, 1.0, tau, tol::RK4_STEP).unwrap();
        for k in 1..3 {
            let predicted = closed_form_ratio(c[k], c[0], lams[0], lams[k], 1.0, tau).unwrap();
            let observed = w[(0, k)] / w[(0, 0)];
            prop_assert!(((observed - predicted) / predicted).abs() <= 1e-6);
        }
    }
}
