use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, norm};
use crate::numerics::{random_orthogonal, tol, Matrix, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Sphere,
    SwissRoll,
    SCurve,
    Torus,
    MoebiusStrip,
    SyntheticSpectrum,
}

/// An embedded manifold (or, for `SyntheticSpectrum`, a Gaussian measure on
/// the whole ambient space). Points are stored in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldSpec {
    /// Circle of the given radius in the plane.
    Circle { radius: f64 },
    /// Round sphere `S^{n−1}` in `R^n`.
    Sphere { radius: f64, ambient_dim: usize },
    /// `(s·t·cos t, h, s·t·sin t)` for `t ∈ [t_min, t_max]`, `|h| ≤ height/2`.
    SwissRoll { t_min: f64, t_max: f64, height: f64, scale: f64 },
    /// Two three-quarter circles of radius `scale` joined into an S, extruded
    /// along y: `(s·sin t, h, s·sgn(t)(cos t − 1))`, `t ∈ [−3π/2, 3π/2]`.
    SCurve { height: f64, scale: f64 },
    /// Ring torus with tube radius `minor` around a circle of radius `major`.
    Torus { major: f64, minor: f64 },
    /// `((R + w cos(u/2)) cos u, (R + w cos(u/2)) sin u, w sin(u/2))`, `|w| ≤ half_width`.
    MoebiusStrip { radius: f64, half_width: f64 },
    /// `N(0, R diag(λ) Rᵀ)` with a fixed orthogonal `R`.
    SyntheticSpectrum { eigenvalues: Vec<f64>, rotation: Matrix },
}

impl ManifoldSpec {
    pub fn swiss_roll_default() -> Self {
        ManifoldSpec::SwissRoll { t_min: 1.5 * PI, t_max: 4.5 * PI, height: 2.0, scale: 0.1 }
    }

    /// Gaussian proxy with the given spectrum, rotated by a Haar-random
    /// orthogonal matrix drawn from `rotation_seed`.
    pub fn synthetic(eigenvalues: Vec<f64>, rotation_seed: u64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Input("synthetic spectrum needs at least one eigenvalue".into()));
        }
        let rotation = random_orthogonal(&mut SeededRng::new(rotation_seed), eigenvalues.len())?;
        let spec = ManifoldSpec::SyntheticSpectrum { eigenvalues, rotation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            ManifoldSpec::Circle { .. } => ManifoldKind::Circle,
            ManifoldSpec::Sphere { .. } => ManifoldKind::Sphere,
            ManifoldSpec::SwissRoll { .. } => ManifoldKind::SwissRoll,
            ManifoldSpec::SCurve { .. } => ManifoldKind::SCurve,
            ManifoldSpec::Torus { .. } => ManifoldKind::Torus,
            ManifoldSpec::MoebiusStrip { .. } => ManifoldKind::MoebiusStrip,
            ManifoldSpec::SyntheticSpectrum { .. } => ManifoldKind::SyntheticSpectrum,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldSpec::Circle { .. } => 2,
            ManifoldSpec::Sphere { ambient_dim, .. } => *ambient_dim,
            ManifoldSpec::SyntheticSpectrum { eigenvalues, .. } => eigenvalues.len(),
            _ => 3,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ManifoldSpec::Circle { .. } => 1,
            ManifoldSpec::Sphere { ambient_dim, .. } => ambient_dim - 1,
            ManifoldSpec::SyntheticSpectrum { eigenvalues, .. } => eigenvalues.len(),
            _ => 2,
        }
    }

    /// Whether points are constrained to a surface (everything except the
    /// Gaussian proxy).
    pub fn is_curved(&self) -> bool {
        !matches!(self, ManifoldSpec::SyntheticSpectrum { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Input(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            ManifoldSpec::Circle { radius } => positive("radius", *radius),
            ManifoldSpec::Sphere { radius, ambient_dim } => {
                positive("radius", *radius)?;
                if *ambient_dim < 2 {
                    return Err(Error::Input("sphere ambient dimension must be at least 2".into()));
                }
                Ok(())
            }
            ManifoldSpec::SwissRoll { t_min, t_max, height, scale } => {
                positive("height", *height)?;
                positive("scale", *scale)?;
                if !(t_min < t_max) || *t_min < 0.0 {
                    return Err(Error::Input(format!("swiss roll needs 0 ≤ t_min < t_max, got [{t_min}, {t_max}]")));
                }
                Ok(())
            }
            ManifoldSpec::SCurve { height, scale } => {
                positive("height", *height)?;
                positive("scale", *scale)
            }
            ManifoldSpec::Torus { major, minor } => {
                positive("minor", *minor)?;
                positive("major", *major)?;
                if minor >= major {
                    return Err(Error::Input("torus needs minor < major".into()));
                }
                Ok(())
            }
            ManifoldSpec::MoebiusStrip { radius, half_width } => {
                positive("radius", *radius)?;
                positive("half_width", *half_width)?;
                if half_width >= radius {
                    return Err(Error::Input("moebius strip needs half_width < radius".into()));
                }
                Ok(())
            }
            ManifoldSpec::SyntheticSpectrum { eigenvalues, rotation } => {
                if eigenvalues.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                    return Err(Error::Input("spectrum eigenvalues must be finite and non-negative".into()));
                }
                if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::Input("spectrum eigenvalues must be sorted descending".into()));
                }
                if rotation.shape() != (eigenvalues.len(), eigenvalues.len()) {
                    return Err(Error::Dimension("rotation does not match spectrum length".into()));
                }
                Ok(())
            }
        }
    }

    /// Covariance of the sampling measure when it is known in closed form.
    pub fn population_covariance(&self) -> Option<Matrix> {
        match self {
            ManifoldSpec::SyntheticSpectrum { eigenvalues, rotation } => {
                let scaled = Matrix::from_fn(rotation.rows(), rotation.cols(), |i, j| rotation[(i, j)] * eigenvalues[j]);
                Some(scaled.matmul_t(rotation))
            }
            ManifoldSpec::Circle { radius } => Some(Matrix::identity(2).scale(radius * radius / 2.0)),
            ManifoldSpec::Sphere { radius, ambient_dim } => {
                Some(Matrix::identity(*ambient_dim).scale(radius * radius / *ambient_dim as f64))
            }
            _ => None,
        }
    }

    /// One draw from the area-uniform measure (or the Gaussian for the proxy).
    pub fn sample_point(&self, rng: &mut SeededRng) -> Vec<f64> {
        match self {
            ManifoldSpec::Circle { radius } => {
                let th = rng.uniform_range(0.0, TAU);
                vec![radius * th.cos(), radius * th.sin()]
            }
            ManifoldSpec::Sphere { radius, ambient_dim } => loop {
                let mut g = vec![0.0; *ambient_dim];
                rng.fill_normal(&mut g);
                let r = norm(&g);
                if r > 1e-12 {
                    break g.iter().map(|x| radius * x / r).collect();
                }
            },
            ManifoldSpec::SwissRoll { t_min, t_max, height, scale } => {
                // Area element s·√(1+t²) dt dh; rejection on the t marginal.
                let bound = (1.0 + t_max * t_max).sqrt();
                let t = loop {
                    let t = rng.uniform_range(*t_min, *t_max);
                    if rng.uniform() * bound <= (1.0 + t * t).sqrt() {
                        break t;
                    }
                };
                let h = rng.uniform_range(-height / 2.0, height / 2.0);
                swiss_roll_point(*scale, t, h).to_vec()
            }
            ManifoldSpec::SCurve { height, scale } => {
                // Unit-speed parameterisation, so uniform t is area-uniform.
                let t = rng.uniform_range(-1.5 * PI, 1.5 * PI);
                let h = rng.uniform_range(-height / 2.0, height / 2.0);
                s_curve_point(*scale, t, h).to_vec()
            }
            ManifoldSpec::Torus { major, minor } => {
                // Area element r·(R + r cos θ) dθ dφ; rejection on θ.
                let theta = loop {
                    let th = rng.uniform_range(0.0, TAU);
                    if rng.uniform() * (major + minor) <= major + minor * th.cos() {
                        break th;
                    }
                };
                let phi = rng.uniform_range(0.0, TAU);
                torus_point(*major, *minor, theta, phi).to_vec()
            }
            ManifoldSpec::MoebiusStrip { radius, half_width } => {
                // Area element √((R + w cos(u/2))² + w²/4) du dw.
                let bound = ((radius + half_width).powi(2) + half_width * half_width / 4.0).sqrt();
                loop {
                    let u = rng.uniform_range(0.0, TAU);
                    let w = rng.uniform_range(-half_width, *half_width);
                    let a = radius + w * (u / 2.0).cos();
                    if rng.uniform() * bound <= (a * a + w * w / 4.0).sqrt() {
                        break moebius_point(*radius, u, w).to_vec();
                    }
                }
            }
            ManifoldSpec::SyntheticSpectrum { eigenvalues, rotation } => {
                let z: Vec<f64> = eigenvalues.iter().map(|l| l.sqrt() * rng.normal()).collect();
                rotation.mat_vec(&z)
            }
        }
    }

    /// Nearest-point retraction onto the manifold. Identity for the proxy.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ambient_dim() {
            return Err(Error::Dimension(format!("expected {} coordinates, got {}", self.ambient_dim(), v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("cannot project a non-finite point".into()));
        }
        match self {
            ManifoldSpec::Circle { radius } | ManifoldSpec::Sphere { radius, .. } => {
                let r = norm(v);
                if r < 1e-300 {
                    return Err(Error::Projection { iterations: 0, residual: *radius });
                }
                Ok(v.iter().map(|x| radius * x / r).collect())
            }
            ManifoldSpec::SwissRoll { t_min, t_max, height, scale } => {
                let t = swiss_roll_nearest_t(*scale, *t_min, *t_max, v[0], v[2]);
                let h = v[1].clamp(-height / 2.0, height / 2.0);
                Ok(swiss_roll_point(*scale, t, h).to_vec())
            }
            ManifoldSpec::SCurve { height, scale } => {
                let t = s_curve_nearest_t(*scale, v[0], v[2]);
                let h = v[1].clamp(-height / 2.0, height / 2.0);
                Ok(s_curve_point(*scale, t, h).to_vec())
            }
            ManifoldSpec::Torus { major, minor } => torus_newton(*major, *minor, v).map(|(p, _)| p),
            ManifoldSpec::MoebiusStrip { radius, half_width } => {
                let (u, w) = moebius_nearest(*radius, *half_width, v);
                Ok(moebius_point(*radius, u, w).to_vec())
            }
            ManifoldSpec::SyntheticSpectrum { .. } => Ok(v.to_vec()),
        }
    }

    /// Distance-like measure of how far `x` is from satisfying the manifold
    /// constraint. Zero for the unconstrained proxy.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        match self {
            ManifoldSpec::Circle { radius } | ManifoldSpec::Sphere { radius, .. } => (norm(x) - radius).abs(),
            ManifoldSpec::Torus { major, minor } => torus_residual(*major, *minor, x),
            ManifoldSpec::SyntheticSpectrum { .. } => 0.0,
            _ => match self.project(x) {
                Ok(p) => norm(&x.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>()),
                Err(_) => f64::INFINITY,
            },
        }
    }

    /// Intrinsic chart coordinates of a point on the manifold, where a global
    /// chart exists: `(t, h)` for the Swiss roll and S-curve, the angle for
    /// the circle, `(θ, φ)` for the torus and `(u, w)` for the Möbius strip.
    pub fn chart_coordinates(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            ManifoldSpec::Circle { .. } => Some(vec![x[1].atan2(x[0])]),
            ManifoldSpec::SwissRoll { t_min, t_max, scale, .. } => {
                Some(vec![swiss_roll_nearest_t(*scale, *t_min, *t_max, x[0], x[2]), x[1]])
            }
            ManifoldSpec::SCurve { scale, .. } => Some(vec![s_curve_nearest_t(*scale, x[0], x[2]), x[1]]),
            ManifoldSpec::Torus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                Some(vec![x[2].atan2(rho - major), x[1].atan2(x[0])])
            }
            ManifoldSpec::MoebiusStrip { radius, half_width } => {
                let (u, w) = moebius_nearest(*radius, *half_width, x);
                Some(vec![u, w])
            }
            _ => None,
        }
    }
}

pub fn swiss_roll_point(scale: f64, t: f64, h: f64) -> [f64; 3] {
    [scale * t * t.cos(), h, scale * t * t.sin()]
}

/// Arc length of the unit-scale spiral `t ↦ t(cos t, sin t)` from 0 to `t`.
pub fn swiss_roll_arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

/// Nearest spiral parameter to the planar point `(x, z)`: every branch where
/// the spiral crosses the ray through the point, plus both ends of the
/// domain, is refined by Newton steps on the squared distance.
fn swiss_roll_nearest_t(scale: f64, t_min: f64, t_max: f64, x: f64, z: f64) -> f64 {
    let dist2 = |t: f64| {
        let (s, c) = t.sin_cos();
        (scale * t * c - x).powi(2) + (scale * t * s - z).powi(2)
    };
    let refine = |mut t: f64| {
        for _ in 0..8 {
            let (s, c) = t.sin_cos();
            let (ex, ez) = (scale * t * c - x, scale * t * s - z);
            let (dx, dz) = (scale * (c - t * s), scale * (s + t * c));
            let (ddx, ddz) = (scale * (-2.0 * s - t * c), scale * (2.0 * c - t * s));
            let g = dx * ex + dz * ez;
            let h = dx * dx + dz * dz + ddx * ex + ddz * ez;
            let step = if h > 0.0 { g / h } else { g / (dx * dx + dz * dz) };
            let next = (t - step).clamp(t_min, t_max);
            if (next - t).abs() <= 1e-12 * t.abs().max(1.0) {
                return next;
            }
            t = next;
        }
        t
    };

    // Candidate starts with the parameter window each one is responsible
    // for; windows cover the domain, and `|r − s·t|` bounds the distance from
    // below on a window, so starts are tried nearest-first and the search
    // stops once no remaining window can beat the best distance found.
    let phi = z.atan2(x).rem_euclid(TAU);
    let r = x.hypot(z);
    let k_lo = ((t_min - phi) / TAU).ceil() as i64;
    let k_hi = ((t_max - phi) / TAU).floor() as i64;
    let mut starts: Vec<(f64, f64)> = (k_lo..=k_hi)
        .map(|k| phi + TAU * k as f64)
        .map(|t| (t, radial_gap(r, scale, t - PI, t + PI)))
        .collect();
    starts.push((t_min, radial_gap(r, scale, t_min, t_min + TAU)));
    starts.push((t_max, radial_gap(r, scale, t_max - TAU, t_max)));
    starts.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut best = (f64::INFINITY, t_min);
    for (t0, bound) in starts {
        if bound * bound >= best.0 {
            break;
        }
        let t = refine(t0);
        let d = dist2(t);
        if d < best.0 {
            best = (d, t);
        }
    }
    best.1
}

/// `min |r − s·t|` over `t ∈ [a, b]`.
fn radial_gap(r: f64, scale: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = (scale * a, scale * b);
    if r < lo {
        lo - r
    } else if r > hi {
        r - hi
    } else {
        0.0
    }
}

pub fn s_curve_point(scale: f64, t: f64, h: f64) -> [f64; 3] {
    [scale * t.sin(), h, scale * t.signum() * (t.cos() - 1.0)]
}

/// Exact nearest parameter on the planar S: each half is a circular arc, so
/// the foot point is a radial projection clamped to the arc's extent.
fn s_curve_nearest_t(scale: f64, x: f64, z: f64) -> f64 {
    let end = 1.5 * PI;
    // Upper half (t ≥ 0): centre (0, −s), point = centre + s(sin t, cos t).
    let mut ta = x.atan2(z + scale).rem_euclid(TAU);
    if ta > end {
        ta = if ta - end < TAU - ta { end } else { 0.0 };
    }
    // Lower half (t ≤ 0): centre (0, s), point = centre + s(sin t, −cos t).
    let mut tb = x.atan2(scale - z);
    if tb > 0.0 {
        tb -= TAU;
    }
    if tb < -end {
        tb = if -end - tb < tb + TAU { -end } else { 0.0 };
    }
    let d = |t: f64| {
        let p = s_curve_point(scale, t, 0.0);
        (p[0] - x).powi(2) + (p[2] - z).powi(2)
    };
    if d(ta) <= d(tb) {
        ta
    } else {
        tb
    }
}

pub fn torus_point(major: f64, minor: f64, theta: f64, phi: f64) -> [f64; 3] {
    let a = major + minor * theta.cos();
    [a * phi.cos(), a * phi.sin(), minor * theta.sin()]
}

fn torus_residual(major: f64, minor: f64, x: &[f64]) -> f64 {
    let rho = x[0].hypot(x[1]);
    ((rho - major).hypot(x[2]) - minor).abs()
}

/// Newton projection onto the level set `h(x) = (ρ − R)² + z² − r² = 0`,
/// stepping along `∇h`. The gradient lines of `h` are the straight rays from
/// the tube's core circle, so the iteration lands on the exact nearest point.
/// Returns the point and the iteration count.
pub fn torus_newton(major: f64, minor: f64, v: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut x = v.to_vec();
    for it in 0..=tol::PROJECTION_MAX_ITER {
        let rho = x[0].hypot(x[1]);
        if torus_residual(major, minor, &x) <= 1e-14 * major {
            return Ok((x, it));
        }
        if rho < 1e-300 || (rho - major).hypot(x[2]) < 1e-300 {
            break;
        }
        let h = (rho - major).powi(2) + x[2] * x[2] - minor * minor;
        let gr = 2.0 * (rho - major);
        let grad = [gr * x[0] / rho, gr * x[1] / rho, 2.0 * x[2]];
        let g2 = dot(&grad, &grad);
        for (xi, gi) in x.iter_mut().zip(grad) {
            *xi -= h * gi / g2;
        }
    }
    let residual = torus_residual(major, minor, &x);
    if residual <= tol::PROJECTION {
        Ok((x, tol::PROJECTION_MAX_ITER))
    } else {
        Err(Error::Projection { iterations: tol::PROJECTION_MAX_ITER, residual })
    }
}

pub fn moebius_point(radius: f64, u: f64, w: f64) -> [f64; 3] {
    let a = radius + w * (u / 2.0).cos();
    [a * u.cos(), a * u.sin(), w * (u / 2.0).sin()]
}

/// Nearest `(u, w)` on the Möbius strip. For fixed `u` the strip is a
/// straight unit-direction segment, so the optimal `w` is a clamped dot
/// product; the remaining 1-D problem in `u` is solved by a grid scan and a
/// golden-section refinement.
fn moebius_nearest(radius: f64, half_width: f64, v: &[f64]) -> (f64, f64) {
    let best_w = |u: f64| {
        let (s, c) = u.sin_cos();
        let (sh, ch) = (u / 2.0).sin_cos();
        let d = [ch * c, ch * s, sh];
        let e = [v[0] - radius * c, v[1] - radius * s, v[2]];
        dot(&d, &e).clamp(-half_width, half_width)
    };
    let dist2 = |u: f64| {
        let p = moebius_point(radius, u, best_w(u));
        (p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2) + (p[2] - v[2]).powi(2)
    };
    const GRID: usize = 128;
    let h = TAU / GRID as f64;
    let (mut u_best, mut d_best) = (0.0, f64::INFINITY);
    for k in 0..GRID {
        let u = k as f64 * h;
        let d = dist2(u);
        if d < d_best {
            d_best = d;
            u_best = u;
        }
    }
    let (mut a, mut b) = (u_best - h, u_best + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (dist2(c), dist2(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist2(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist2(d);
        }
    }
    let u = 0.5 * (a + b);
    // (u + 2π, w) and (u, −w) are the same point; report u in [0, 2π).
    let w = best_w(u);
    if u < 0.0 {
        (u + TAU, -w)
    } else if u >= TAU {
        (u - TAU, -w)
    } else {
        (u, w)
    }
}
