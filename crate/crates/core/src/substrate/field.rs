use crate::geometry::Swarm;
use crate::numerics::matrix::dot;

/// Scalar function on the manifold. Derivatives are optional; when present
/// the gradient is the Riemannian gradient expressed in ambient coordinates.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn laplace_beltrami(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn evaluate(&self, swarm: &Swarm) -> Vec<f64> {
        swarm.positions.row_iter().map(|r| self.value(r)).collect()
    }
}

/// Constant function; all derivatives vanish on any manifold.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }

    fn laplace_beltrami(&self, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// Restriction of the linear function `a·x` to the round sphere of radius `r`
/// in `R^n` (the circle for `n = 2`). These are first eigenfunctions of the
/// Laplace–Beltrami operator: `Δ(a·x) = −(n−1)/r² · a·x`.
#[derive(Clone, Debug)]
pub struct SphereLinear {
    pub coeffs: Vec<f64>,
    pub radius: f64,
}

impl SphereLinear {
    /// `cos θ` on the circle of radius `r`.
    pub fn circle_cos(radius: f64) -> Self {
        SphereLinear { coeffs: vec![1.0 / radius, 0.0], radius }
    }

    /// The height coordinate `z` on the 2-sphere of radius `r`.
    pub fn sphere_z(radius: f64) -> Self {
        SphereLinear { coeffs: vec![0.0, 0.0, 1.0], radius }
    }
}

impl ScalarField for SphereLinear {
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let ax = dot(&self.coeffs, x) / (self.radius * self.radius);
        Some(self.coeffs.iter().zip(x).map(|(a, xi)| a - ax * xi).collect())
    }

    fn laplace_beltrami(&self, x: &[f64]) -> Option<f64> {
        let n = self.coeffs.len() as f64;
        Some(-(n - 1.0) / (self.radius * self.radius) * dot(&self.coeffs, x))
    }
}

/// Gaussian bump `exp(−|x − c|² / 2w²)` in ambient coordinates (value only).
#[derive(Clone, Debug)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
}

impl ScalarField for Bump {
    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Field defined by an arbitrary closure (value only).
pub struct FnField<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}
