use std::sync::Arc;

use super::manifold::ManifoldSpec;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

/// Agent positions (one row per agent, ambient coordinates) together with
/// the manifold they live on.
#[derive(Clone, Debug)]
pub struct Swarm {
    pub positions: Matrix,
    pub manifold: Arc<ManifoldSpec>,
}

impl Swarm {
    pub fn new(positions: Matrix, manifold: Arc<ManifoldSpec>) -> Result<Self> {
        if positions.cols() != manifold.ambient_dim() {
            return Err(Error::Dimension(format!(
                "positions have {} columns, manifold is embedded in R^{}",
                positions.cols(),
                manifold.ambient_dim()
            )));
        }
        Ok(Swarm { positions, manifold })
    }

    pub fn population(&self) -> usize {
        self.positions.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.positions.cols()
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.positions.row_iter().map(|r| self.manifold.constraint_residual(r)).fold(0.0, f64::max)
    }

    /// Uncentred second moment `(1/N) XᵀX`.
    pub fn second_moment(&self) -> Matrix {
        self.positions.second_moment()
    }
}

/// `n` i.i.d. draws from the manifold's uniform (or Gaussian) measure.
pub fn sample_uniform(manifold: &ManifoldSpec, n: usize, rng: &mut SeededRng) -> Result<Swarm> {
    if n == 0 {
        return Err(Error::Input("swarm needs at least one agent".into()));
    }
    manifold.validate()?;
    let dim = manifold.ambient_dim();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        data.extend(manifold.sample_point(rng));
    }
    Swarm::new(Matrix::from_vec(n, dim, data)?, Arc::new(manifold.clone()))
}

/// Ambient Euclidean (chord) distance between every pair of agents.
pub fn pairwise_chord_distances(swarm: &Swarm) -> Result<Matrix> {
    let n = swarm.population();
    if n < 2 {
        return Err(Error::Input("pairwise distances need at least two agents".into()));
    }
    let x = &swarm.positions;
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = chord(x.row(i), x.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

pub fn chord(a: &[f64], b: &[f64]) -> f64 {
    chord_sq(a, b).sqrt()
}

pub fn chord_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
