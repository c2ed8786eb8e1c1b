use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Deterministic random stream: xoshiro256** seeded through SplitMix64.
///
/// Uniforms take the top 53 bits of each output (`(u >> 11) · 2⁻⁵³`), normals
/// come from the Marsaglia polar method with the second variate of each pair
/// cached. Both transforms are fixed here rather than delegated to a
/// distribution crate so that streams can be reproduced elsewhere.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed, inner: Xoshiro256StarStar::seed_from_u64(seed), spare: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for worker `index`, seeded with `seed ^ index`.
    pub fn derive(&self, index: u64) -> SeededRng {
        SeededRng::new(self.seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (rejection-free multiply-shift; bias < n/2⁶⁴).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Matrix of i.i.d. standard normals, filled in row-major order.
pub fn gauss_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("gauss_matrix needs positive dimensions, got {rows}x{cols}")));
    }
    let mut data = vec![0.0; rows * cols];
    rng.fill_normal(&mut data);
    Matrix::from_vec(rows, cols, data)
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt on a Gaussian matrix with
/// the sign convention that keeps the distribution uniform.
pub fn random_orthogonal(rng: &mut SeededRng, n: usize) -> Result<Matrix> {
    let g = gauss_matrix(rng, n, n)?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // Two passes of modified Gram–Schmidt for numerical orthogonality.
        for _ in 0..2 {
            for q in &cols {
                let p = super::matrix::dot(q, &v);
                super::matrix::axpy(-p, q, &mut v);
            }
        }
        let norm = super::matrix::norm(&v);
        if norm < 1e-12 {
            return Err(Error::Convergence("degenerate Gaussian draw in random_orthogonal".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let mut q = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Ok(q)
}
