//! Dense linear algebra, seeded random streams and Markov-chain utilities.

pub mod eigen;
pub mod markov;
pub mod matrix;
pub mod rng;

pub use eigen::{sym_eig, SymEigResult};
pub use markov::power_stationary;
pub use matrix::Matrix;
pub use rng::{gauss_matrix, random_orthogonal, SeededRng};

/// Numerical tolerances shared across modules.
pub mod tol {
    /// Relative asymmetry accepted by `sym_eig` and covariance inputs.
    pub const SYMMETRY: f64 = 1e-10;
    /// Allowed deviation of a stochastic row (or column) sum from 1.
    pub const ROW_SUM: f64 = 1e-12;
    /// Constraint residual a retraction must reach.
    pub const PROJECTION: f64 = 1e-10;
    /// Constraint residual tolerated on stored swarm rows.
    pub const SWARM_CONSTRAINT: f64 = 1e-8;
    /// Newton iteration cap for implicit projections.
    pub const PROJECTION_MAX_ITER: usize = 50;
    /// Singular values below this (relative) mark a rank-deficient `W`.
    pub const RANK: f64 = 1e-10;
    /// Divergence guard on `||W||_F`.
    pub const DIVERGENCE_NORM: f64 = 1e6;
    /// Divergence guard on `V(W)`.
    pub const DIVERGENCE_LYAPUNOV: f64 = 1e12;
    /// Phase threshold: `V` above this anywhere marks explosive divergence.
    pub const PHASE_EXPLOSIVE_V: f64 = 1e6;
    /// Phase threshold: tail `ΔV` above this marks stochastic oscillation.
    pub const PHASE_MONOTONE_SLACK: f64 = 1e-10;
    /// Fraction of the trajectory treated as the tail.
    pub const PHASE_TAIL_FRACTION: f64 = 0.2;
    /// Fixed RK4 step for the averaged flow, in macroscopic time.
    pub const RK4_STEP: f64 = 1e-3;
}
