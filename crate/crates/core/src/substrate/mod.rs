//! Random geometric graphs, the Gibbs random walk on them, and the discrete
//! and continuum generators whose agreement is the graph-to-manifold limit.

mod chain;
mod field;
mod graph;

pub use chain::{
    build_chain, continuous_generator, detailed_balance_residual, discrete_generator, generator_sup_error, GibbsChain,
};
pub use field::{Bump, Constant, FnField, ScalarField, SphereLinear};
pub use graph::{build_graph, scaling_diagnostic, GeometricGraph};
