//! Decentralized coupled representation learning (DCRL).
//!
//! A swarm of agents performs Langevin dynamics on an embedded manifold while a
//! shared linear map `W` learns the swarm's principal subspace through Oja
//! plasticity. The crate provides the manifold substrates, the random
//! geometric graph and Gibbs chain whose generator approximates the Langevin
//! diffusion, the coupled integrator and its averaged ODE, an asynchronous
//! gossip variant, diagnostics, and an experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod gossip;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod substrate;

pub use error::{Error, Result};
