use super::field::ScalarField;
use super::graph::GeometricGraph;
use crate::error::{Error, Result};
use crate::geometry::Swarm;
use crate::numerics::matrix::dot;
use crate::numerics::Matrix;

/// Gibbs random walk on a geometric graph:
/// `P(x, y) = exp(−β/2 · (U(y) − U(x))) / Z(x)` over the neighbours of `x`.
#[derive(Clone, Debug)]
pub struct GibbsChain {
    pub neighbors: Vec<Vec<usize>>,
    /// `probabilities[x][k]` is the jump probability to `neighbors[x][k]`.
    pub probabilities: Vec<Vec<f64>>,
    pub partition: Vec<f64>,
    pub potential: Vec<f64>,
    pub beta: f64,
    /// Jump rate `τ = 2D(d+2)/ε²`.
    pub tau: f64,
}

/// `potential` holds `U` evaluated at the graph's nodes.
pub fn build_chain(
    graph: &GeometricGraph,
    potential: &[f64],
    beta: f64,
    diffusion: f64,
    intrinsic_dim: usize,
) -> Result<GibbsChain> {
    if potential.len() != graph.len() {
        return Err(Error::Dimension(format!("{} potential values for {} nodes", potential.len(), graph.len())));
    }
    let mut neighbors = Vec::with_capacity(graph.len());
    let mut probabilities = Vec::with_capacity(graph.len());
    let mut partition = Vec::with_capacity(graph.len());
    for x in 0..graph.len() {
        let ns = graph.neighbors(x);
        if ns.is_empty() {
            return Err(Error::IsolatedNode(x));
        }
        let weights: Vec<f64> = ns.iter().map(|&y| (-0.5 * beta * (potential[y] - potential[x])).exp()).collect();
        let z: f64 = weights.iter().sum();
        neighbors.push(ns.to_vec());
        probabilities.push(weights.iter().map(|w| w / z).collect());
        partition.push(z);
    }
    let eps = graph.epsilon();
    Ok(GibbsChain {
        neighbors,
        probabilities,
        partition,
        potential: potential.to_vec(),
        beta,
        tau: 2.0 * diffusion * (intrinsic_dim as f64 + 2.0) / (eps * eps),
    })
}

impl GibbsChain {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        let mut p = Matrix::zeros(n, n);
        for (x, (ns, ps)) in self.neighbors.iter().zip(&self.probabilities).enumerate() {
            for (&y, &pr) in ns.iter().zip(ps) {
                p[(x, y)] = pr;
            }
        }
        p
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.neighbors[x].iter().position(|&k| k == y).map_or(0.0, |k| self.probabilities[x][k])
    }

    /// Closed-form stationary law `π(x) ∝ Z(x) e^{−βU(x)}`, evaluated in log
    /// space.
    pub fn closed_form_stationary(&self) -> Vec<f64> {
        let logs: Vec<f64> =
            self.partition.iter().zip(&self.potential).map(|(z, u)| z.ln() - self.beta * u).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

/// Largest violation of `π(x)P(x,y) = π(y)P(y,x)` over edges, using the
/// closed-form `π`.
pub fn detailed_balance_residual(chain: &GibbsChain) -> f64 {
    let pi = chain.closed_form_stationary();
    let mut worst: f64 = 0.0;
    for (x, (ns, ps)) in chain.neighbors.iter().zip(&chain.probabilities).enumerate() {
        for (&y, &pxy) in ns.iter().zip(ps) {
            let flux = pi[x] * pxy - pi[y] * chain.transition(y, x);
            worst = worst.max(flux.abs());
        }
    }
    worst
}

/// `L_N f(x) = τ Σ_y P(x,y) (f(y) − f(x))` for node values `f`.
pub fn discrete_generator(chain: &GibbsChain, f: &[f64]) -> Vec<f64> {
    chain
        .neighbors
        .iter()
        .zip(&chain.probabilities)
        .enumerate()
        .map(|(x, (ns, ps))| chain.tau * ns.iter().zip(ps).map(|(&y, p)| p * (f[y] - f[x])).sum::<f64>())
        .collect()
}

/// `L f = −Dβ ⟨∇U, ∇f⟩ + D Δf` at every agent.
pub fn continuous_generator(
    f: &dyn ScalarField,
    potential: &dyn ScalarField,
    diffusion: f64,
    beta: f64,
    swarm: &Swarm,
) -> Result<Vec<f64>> {
    let missing = |what: &str| Error::Capability(format!("field has no analytic {what}"));
    swarm
        .positions
        .row_iter()
        .map(|x| {
            let gf = f.gradient(x).ok_or_else(|| missing("gradient"))?;
            let lf = f.laplace_beltrami(x).ok_or_else(|| missing("Laplace–Beltrami value"))?;
            let gu = potential.gradient(x).ok_or_else(|| missing("potential gradient"))?;
            Ok(-diffusion * beta * dot(&gu, &gf) + diffusion * lf)
        })
        .collect()
}

/// `max_x |L_N f(x) − L f(x)|` over the swarm.
pub fn generator_sup_error(
    chain: &GibbsChain,
    f: &dyn ScalarField,
    potential: &dyn ScalarField,
    diffusion: f64,
    beta: f64,
    swarm: &Swarm,
) -> Result<f64> {
    if chain.len() != swarm.population() {
        return Err(Error::Dimension("chain and swarm sizes differ".into()));
    }
    let discrete = discrete_generator(chain, &f.evaluate(swarm));
    let continuous = continuous_generator(f, potential, diffusion, beta, swarm)?;
    Ok(discrete.iter().zip(&continuous).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
