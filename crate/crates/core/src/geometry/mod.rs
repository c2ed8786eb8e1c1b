//! Manifold substrates: uniform sampling, nearest-point retraction, and
//! swarm containers.

mod manifold;
mod swarm;

pub use manifold::{
    moebius_point, s_curve_point, swiss_roll_arc_length, swiss_roll_point, torus_newton, torus_point, ManifoldKind,
    ManifoldSpec,
};
pub use swarm::{chord, chord_sq, pairwise_chord_distances, sample_uniform, Swarm};
