use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Resolved;
use super::output::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, ManifoldSpec};
use crate::substrate::{
    build_chain, build_graph, generator_sup_error, scaling_diagnostic, Constant, ScalarField, SphereLinear,
};

/// Sup-norm generator error for one `(N, ε)` entry of the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub n: usize,
    pub epsilon: f64,
    pub scaling_diagnostic: f64,
    /// Median over the seeds that produced a graph without isolated nodes.
    pub median_sup_error: f64,
    /// Per seed; `NaN` where the graph had isolated nodes.
    pub sup_errors: Vec<f64>,
    pub isolated_nodes: Vec<usize>,
}

fn linear_field(which: &str, manifold: &ManifoldSpec) -> Result<SphereLinear> {
    let (radius, dim) = match manifold {
        ManifoldSpec::Circle { radius } => (*radius, 2),
        ManifoldSpec::Sphere { radius, ambient_dim } => (*radius, *ambient_dim),
        _ => return Err(Error::Config("the generator test needs a circle or sphere manifold".into())),
    };
    let mut coeffs = vec![0.0; dim];
    match which {
        "cos" => coeffs[0] = 1.0,
        "z" => coeffs[dim - 1] = 1.0,
        other => return Err(Error::Config(format!("unknown test function {other:?}"))),
    }
    Ok(SphereLinear { coeffs, radius })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Runs `schedule` over the experiment's seeds with the configured test
/// function, potential, `D` and `β`. Seed `s` samples the swarm from
/// `SeededRng::new(s)` for every entry.
pub fn generator_test(resolved: &Resolved, schedule: &[(usize, f64)]) -> Result<Vec<GeneratorEntry>> {
    let g = &resolved.config.generator;
    let f = linear_field(&g.field, &resolved.manifold)?;
    let potential: Box<dyn ScalarField> = match g.potential.as_str() {
        "zero" => Box::new(Constant(0.0)),
        other => Box::new(linear_field(other, &resolved.manifold)?),
    };
    let d = resolved.dynamics();
    let dim = resolved.manifold.intrinsic_dim();
    let seeds = &resolved.config.experiment.seeds;

    let mut entries = Vec::with_capacity(schedule.len());
    for &(n, eps) in schedule {
        let diag = scaling_diagnostic(n as f64, eps, dim);
        if entries.last().is_some_and(|prev: &GeneratorEntry| diag <= prev.scaling_diagnostic) {
            log::warn!("(N={n}, ε={eps}): scaling diagnostic {diag:.3} does not increase along the schedule");
        }
        let mut sup_errors = Vec::with_capacity(seeds.len());
        let mut isolated_nodes = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let swarm = sample_uniform(&resolved.manifold, n, &mut crate::numerics::SeededRng::new(seed))?;
            let graph = build_graph(&swarm, eps)?;
            isolated_nodes.push(graph.isolated_count());
            let err = match build_chain(&graph, &potential.evaluate(&swarm), d.beta, d.diffusion, dim) {
                Ok(chain) => generator_sup_error(&chain, &f, potential.as_ref(), d.diffusion, d.beta, &swarm)?,
                Err(Error::IsolatedNode(_)) => {
                    log::warn!("(N={n}, ε={eps}, seed {seed}): {} isolated nodes", graph.isolated_count());
                    f64::NAN
                }
                Err(e) => return Err(e),
            };
            sup_errors.push(err);
        }
        entries.push(GeneratorEntry {
            n,
            epsilon: eps,
            scaling_diagnostic: diag,
            median_sup_error: median(&sup_errors),
            sup_errors,
            isolated_nodes,
        });
    }
    Ok(entries)
}

/// The configured schedule.
pub fn configured_schedule(resolved: &Resolved) -> Vec<(usize, f64)> {
    let g = &resolved.config.generator;
    g.sizes.iter().copied().zip(g.radii.iter().copied()).collect()
}

pub fn generator_csv(entries: &[GeneratorEntry]) -> String {
    let mut out = String::from("n,epsilon,scaling_diagnostic,median_sup_error,max_isolated_nodes\n");
    for e in entries {
        let isolated = e.isolated_nodes.iter().copied().max().unwrap_or(0);
        out.push_str(&format!("{},{},{},{},{}\n", e.n, e.epsilon, e.scaling_diagnostic, e.median_sup_error, isolated));
    }
    out
}

pub fn write_generator(out_dir: &Path, entries: &[GeneratorEntry]) -> Result<()> {
    write_atomic(&out_dir.join("generator.csv"), generator_csv(entries).as_bytes())
}
