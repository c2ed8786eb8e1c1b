use proptest::prelude::*;

use super::*;
use crate::dynamics::rk4_step;
use crate::numerics::{gauss_matrix, random_orthogonal, sym_eig, Matrix, SeededRng};

fn gauss(seed: u64, r: usize, c: usize) -> Matrix {
    gauss_matrix(&mut SeededRng::new(seed), r, c).unwrap()
}

fn random_psd(seed: u64, n: usize) -> Matrix {
    let a = gauss(seed, n, n);
    a.t_matmul(&a).scale(1.0 / n as f64)
}

#[test]
fn energy_special_cases() {
    let x = gauss(1, 5, 3);
    assert!((joint_energy(&x, &Matrix::zeros(2, 3), 0.8) - 0.2).abs() < 1e-15);
    let w = Matrix::from_rows(&[vec![0.6, 0.0, 0.0], vec![0.0, 0.8, 0.0]]).unwrap();
    assert!(joint_energy(&Matrix::zeros(5, 3), &w, 3.0).abs() < 1e-15);
}

#[test]
fn energy_matches_sample_loop() {
    let (x, w, lam) = (gauss(2, 5, 3), gauss(3, 2, 3), 0.7);
    let n = x.rows() as f64;
    let mut variance = 0.0;
    for row in x.row_iter() {
        let wx = w.mat_vec(row);
        variance += wx.iter().map(|v| v * v).sum::<f64>();
    }
    let reg = lam / 4.0 * (w.frobenius_sq() - 1.0).powi(2);
    let oracle = -variance / (2.0 * n) + reg;
    assert!((joint_energy(&x, &w, lam) - oracle).abs() < 1e-14);
}

#[test]
fn gradients_vanish_at_zero_weights() {
    let x = gauss(4, 6, 3);
    let w = Matrix::zeros(2, 3);
    assert_eq!(grad_x(&x, &w).max_abs(), 0.0);
    assert_eq!(grad_w(&x, &w, 0.0).max_abs(), 0.0);
}

pub(crate) fn finite_difference_error(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let (n, d, m) = (3 + rng.below(6), 2 + rng.below(4), 1 + rng.below(2));
    let x = gauss_matrix(&mut rng, n, d).unwrap();
    let w = gauss_matrix(&mut rng, m, d).unwrap().scale(0.7);
    let lam = rng.uniform_range(0.1, 2.0);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let gx = grad_x(&x, &w);
    for k in 0..x.as_slice().len() {
        let (mut p, mut q) = (x.clone(), x.clone());
        p.as_mut_slice()[k] += h;
        q.as_mut_slice()[k] -= h;
        let fd = (joint_energy(&p, &w, lam) - joint_energy(&q, &w, lam)) / (2.0 * h);
        worst = worst.max((fd - gx.as_slice()[k]).abs());
    }
    let gw = grad_w(&x, &w, lam);
    for k in 0..w.as_slice().len() {
        let (mut p, mut q) = (w.clone(), w.clone());
        p.as_mut_slice()[k] += h;
        q.as_mut_slice()[k] -= h;
        let fd = (joint_energy(&x, &p, lam) - joint_energy(&x, &q, lam)) / (2.0 * h);
        worst = worst.max((fd - gw.as_slice()[k]).abs());
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..100 {
        let e = finite_difference_error(seed);
        assert!(e <= 1e-6, "seed {seed}: {e}");
    }
}

#[test]
fn euler_descent_decreases_energy() {
    let mut x = gauss(5, 8, 3).scale(0.5);
    let mut w = gauss(6, 2, 3).scale(0.4);
    let (lam, h) = (1.0, 1e-2);
    let mut last = joint_energy(&x, &w, lam);
    for _ in 0..100 {
        let (gx, gw) = (grad_x(&x, &w), grad_w(&x, &w, lam));
        x.add_scaled(-h, &gx);
        w.add_scaled(-h, &gw);
        let e = joint_energy(&x, &w, lam);
        assert!(e < last);
        last = e;
    }
}

#[test]
fn lyapunov_special_cases() {
    let sigma = random_psd(7, 3);
    let unit = Matrix::from_rows(&[vec![0.6, 0.8, 0.0]]).unwrap();
    assert!(lyapunov(&unit).abs() < 1e-15);
    assert!(lyapunov_rate(&unit, &sigma, 1.0).abs() < 1e-15);
    let zero = Matrix::zeros(2, 3);
    assert_eq!(lyapunov(&zero), 0.25);
    assert_eq!(lyapunov_rate(&zero, &sigma, 1.0), 0.0);
}

#[test]
fn lyapunov_rate_matches_trajectory_derivative() {
    for seed in 0..5 {
        let sigma = random_psd(10 + seed, 4);
        let w0 = gauss(20 + seed, 2, 4).scale(0.5);
        let gamma = 1.3;
        let delta = 1e-5;
        let mut w = w0.clone();
        for _ in 0..300 {
            w = rk4_step(&w, &sigma, gamma, 1e-3);
        }
        let before = rk4_step(&w, &sigma, gamma, -delta);
        let after = rk4_step(&w, &sigma, gamma, delta);
        let fd = (lyapunov(&after) - lyapunov(&before)) / (2.0 * delta);
        let rate = lyapunov_rate(&w, &sigma, gamma);
        assert!((fd - rate).abs() <= 1e-8, "{fd} vs {rate}");
    }
}

#[test]
fn lyapunov_rate_is_never_positive() {
    let mut rng = SeededRng::new(11);
    for _ in 0..10_000 {
        let n = 1 + rng.below(5);
        let m = 1 + rng.below(n);
        let a = gauss_matrix(&mut rng, n, n).unwrap();
        let sigma = a.t_matmul(&a);
        let w = gauss_matrix(&mut rng, m, n).unwrap().scale(rng.uniform_range(0.0, 2.0));
        assert!(lyapunov_rate(&w, &sigma, rng.uniform_range(0.0, 3.0)) <= 0.0);
    }
}

#[test]
fn latent_covariance_identities() {
    let x = gauss(12, 40, 5);
    let sigma = x.second_moment();
    let eig = sym_eig(&sigma).unwrap();
    let top = eig.eigenvectors.columns(0, 3).transpose();
    let sy = latent_covariance(&x, &top);
    assert!(sy.max_abs_diff(&Matrix::diag(&eig.eigenvalues[..3])) <= 1e-10);

    assert_eq!(latent_covariance(&x, &Matrix::zeros(2, 5)).max_abs(), 0.0);

    let w = gauss(13, 2, 5);
    let direct = &(&w * &sigma) * &w.transpose();
    assert!(latent_covariance(&x, &w).max_abs_diff(&direct) <= 1e-12);
}

#[test]
fn ortho_error_cases() {
    assert_eq!(ortho_error(&Matrix::diag(&[3.0, 1.0])), 0.0);
    assert_eq!(ortho_error(&Matrix::from_rows(&[vec![2.5]]).unwrap()), 0.0);
    assert_eq!(ortho_error(&Matrix::zeros(2, 2)), 0.0);
    let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert!((ortho_error(&ones) - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn effective_rank_cases() {
    assert!((effective_rank(&Matrix::identity(4)) - 4.0).abs() < 1e-15);
    let v = [0.6, 0.8];
    let proj = Matrix::from_fn(2, 2, |i, j| v[i] * v[j]);
    assert!((effective_rank(&proj) - 1.0).abs() < 1e-14);
    assert!((effective_rank(&Matrix::diag(&[3.0, 1.0])) - 1.6).abs() < 1e-15);
    assert_eq!(effective_rank(&Matrix::zeros(3, 3)), 0.0);
}

fn reference(seed: u64, n: usize, m: usize) -> SpectralReference {
    SpectralReference::new(&random_psd(seed, n), m).unwrap()
}

#[test]
fn subspace_angle_cases() {
    let r = reference(14, 5, 2);
    let qm_t = r.q_m.transpose();
    assert!(subspace_angle(&qm_t, &r).sin_theta < 1e-14);
    let perp = r.q_perp.columns(0, 2).transpose();
    assert!((subspace_angle(&perp, &r).sin_theta - 1.0).abs() < 1e-14);

    for theta in [0.05f64, 0.3, 1.0, 1.4] {
        // Rotate the second principal direction toward q_{m+1}.
        let mut w = qm_t.clone();
        for j in 0..5 {
            w[(1, j)] = theta.cos() * r.q_m[(j, 1)] + theta.sin() * r.q_perp[(j, 0)];
        }
        let s = subspace_angle(&w.scale(2.5), &r);
        assert!((s.sin_theta - theta.sin()).abs() < 1e-10, "{theta}");
    }

    let deficient = Matrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0, 0.0]]).unwrap();
    let s = subspace_angle(&deficient, &r);
    assert!(s.rank_deficient);
    assert_eq!(s.sin_theta, 1.0);
}

#[test]
fn noise_projection_cases() {
    let r = reference(15, 4, 1);
    assert!(noise_projection(&r.q_m.transpose(), &r) < 1e-15);
    assert!((noise_projection(&r.q_perp.columns(0, 1).transpose(), &r) - 1.0).abs() < 1e-14);
    let w = gauss(16, 1, 4);
    let inside = (&w * &r.q_m).frobenius_sq();
    let pythagoras = (w.frobenius_sq() - inside).sqrt();
    assert!((noise_projection(&w, &r) - pythagoras).abs() < 1e-12);
}

#[test]
fn stationarity_residual_cases() {
    let r = reference(17, 5, 3);
    assert!(stationarity_residual(&r.q_m.transpose(), &r.sigma) < 1e-10);
    assert!(stationarity_residual(&gauss(18, 3, 5), &r.sigma) > 1e-3);
}

#[test]
fn probe_separates_blobs() {
    let mut rng = SeededRng::new(19);
    let n = 200;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = i % 2;
        let shift = if c == 0 { -3.0 } else { 3.0 };
        data.push(vec![shift + 0.5 * rng.normal(), 0.5 * rng.normal()]);
        labels.push(c);
    }
    let y = Matrix::from_rows(&data).unwrap();
    assert!(linear_probe(&y, &labels, 5).unwrap() >= 0.99);
}

#[test]
fn probe_is_at_chance_on_shuffled_labels() {
    let mut rng = SeededRng::new(20);
    let n = 2000;
    let y = gauss_matrix(&mut rng, n, 2).unwrap();
    let mut labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    rng.shuffle(&mut labels);
    let acc = linear_probe(&y, &labels, 5).unwrap();
    assert!((acc - 0.5).abs() <= 0.05, "{acc}");
}

#[test]
fn probe_rejects_degenerate_input() {
    let y = gauss(21, 60, 2);
    assert!(matches!(linear_probe(&y, &[1; 60], 5), Err(crate::Error::DegenerateLabels)));
    assert!(linear_probe(&gauss(22, 20, 2), &[0, 1].repeat(10), 5).is_err());
}

#[test]
fn diagnostics_are_basis_invariant() {
    let x = gauss(23, 50, 4);
    let w = gauss(24, 2, 4);
    let rot = random_orthogonal(&mut SeededRng::new(25), 4).unwrap();
    let (xr, wr) = (&x * &rot, &w * &rot);
    let r1 = SpectralReference::new(&x.second_moment(), 2).unwrap();
    let r2 = SpectralReference::new(&xr.second_moment(), 2).unwrap();
    let (s1, s2) = (latent_covariance(&x, &w), latent_covariance(&xr, &wr));
    assert!((ortho_error(&s1) - ortho_error(&s2)).abs() < 1e-10);
    assert!((effective_rank(&s1) - effective_rank(&s2)).abs() < 1e-10);
    assert!((subspace_angle(&w, &r1).sin_theta - subspace_angle(&wr, &r2).sin_theta).abs() < 1e-10);
    assert!((noise_projection(&w, &r1) - noise_projection(&wr, &r2)).abs() < 1e-10);
}

#[test]
fn eigen_aligned_latent_covariance_is_diagonal() {
    let x = gauss(26, 100, 6);
    let r = SpectralReference::new(&x.second_moment(), 3).unwrap();
    let sy = latent_covariance(&x, &r.q_m.transpose());
    assert!(ortho_error(&sy) * sy.frobenius() < 1e-10);
}

#[test]
fn csv_row_matches_header() {
    let x = gauss(27, 30, 3);
    let w = gauss(28, 2, 3);
    let r = SpectralReference::new(&x.second_moment(), 2).unwrap();
    let rec = MetricsRecord::compute(7, &x, &w, 1.0, 0.0, &r);
    assert_eq!(
        MetricsRecord::csv_header(2),
        "step,V,dV,E,frob_W,sin_theta,ortho_error,eff_rank,noise_proj,latent_eig_1,latent_eig_2"
    );
    assert_eq!(rec.csv_row().split(',').count(), 11);
    assert!(rec.csv_row().starts_with("7,"));
    assert_eq!(rec.dv, rec.v);
}

proptest! {
    #[test]
    fn record_invariants(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let n = 2 + rng.below(5);
        let m = 1 + rng.below(n);
        let x = gauss_matrix(&mut rng, 20, n).unwrap();
        let w = gauss_matrix(&mut rng, m, n).unwrap();
        let r = SpectralReference::new(&x.second_moment(), m).unwrap();
        let rec = MetricsRecord::compute(0, &x, &w, 1.0, 0.0, &r);
        prop_assert!(rec.v >= 0.0 && rec.frob_w >= 0.0);
        prop_assert!((0.0..=1.0).contains(&rec.sin_theta));
        prop_assert!((0.0..=1.0).contains(&rec.ortho_error));
        prop_assert!(rec.eff_rank >= 1.0 - 1e-12 && rec.eff_rank <= m as f64 + 1e-12);
        prop_assert!(rec.latent_eigs.windows(2).all(|p| p[0] >= p[1]));
    }
}
