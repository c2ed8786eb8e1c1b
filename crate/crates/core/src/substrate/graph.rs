use crate::error::{Error, Result};
use crate::geometry::{chord_sq, Swarm};

/// Random geometric graph: `i ~ j` iff `0 < |x_i − x_j| ≤ ε`.
#[derive(Clone, Debug)]
pub struct GeometricGraph {
    epsilon: f64,
    neighbors: Vec<Vec<usize>>,
}

impl GeometricGraph {
    /// Graph from explicit adjacency lists; must be symmetric and loop-free.
    pub fn from_neighbors(neighbors: Vec<Vec<usize>>, epsilon: f64) -> Result<Self> {
        let n = neighbors.len();
        for (i, ns) in neighbors.iter().enumerate() {
            for &j in ns {
                if j >= n || j == i {
                    return Err(Error::Topology(format!("invalid edge ({i}, {j})")));
                }
                if !neighbors[j].contains(&i) {
                    return Err(Error::Topology(format!("edge ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(GeometricGraph { epsilon, neighbors })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn isolated_count(&self) -> usize {
        self.neighbors.iter().filter(|n| n.is_empty()).count()
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.iter().map(Vec::len).sum::<usize>() as f64 / self.len().max(1) as f64
    }
}

/// All-pairs construction, row-parallel when the `parallel` feature is on.
pub fn build_graph(swarm: &Swarm, epsilon: f64) -> Result<GeometricGraph> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Input(format!("connectivity radius must be positive, got {epsilon}")));
    }
    let x = &swarm.positions;
    let eps2 = epsilon * epsilon;
    let row = |i: usize| -> Vec<usize> {
        let xi = x.row(i);
        (0..x.rows())
            .filter(|&j| {
                let d2 = chord_sq(xi, x.row(j));
                j != i && d2 > 0.0 && d2 <= eps2
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let neighbors = {
        use rayon::prelude::*;
        (0..x.rows()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let neighbors = (0..x.rows()).map(row).collect();
    Ok(GeometricGraph { epsilon, neighbors })
}

/// `N ε^{d+2} / ln N`; must grow without bound for the graph generator to
/// converge to the continuum one.
/// `n` is real-valued so the diagnostic can be evaluated along continuous
/// schedules.
pub fn scaling_diagnostic(n: f64, epsilon: f64, intrinsic_dim: usize) -> f64 {
    n * epsilon.powi(intrinsic_dim as i32 + 2) / n.ln()
}
