use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, Resolved};
use super::output::{aggregate, write_atomic, write_json, Stat};
use crate::dynamics::{averaged_trajectory, coupled_step, DynamicsConfig, WeightMatrix};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, Swarm};
use crate::gossip::{run_async, GossipTopology, ReplicaSet};
use crate::metrics::{lyapunov, MetricsRecord, SpectralReference};
use crate::numerics::{tol, SeededRng};

/// Dynamical regime of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    StableAlignment,
    StochasticOscillation,
    ExplosiveDivergence,
}

impl Phase {
    /// `ExplosiveDivergence` if `V` ever exceeded the threshold (or stopped
    /// being finite); `StochasticOscillation` if the largest one-step `dV` in
    /// the tail is above the monotonicity slack; otherwise
    /// `StableAlignment`.
    pub fn classify(max_v: f64, max_tail_dv: f64) -> Phase {
        if !max_v.is_finite() || max_v > tol::PHASE_EXPLOSIVE_V || max_tail_dv.is_nan() {
            Phase::ExplosiveDivergence
        } else if max_tail_dv > tol::PHASE_MONOTONE_SLACK {
            Phase::StochasticOscillation
        } else {
            Phase::StableAlignment
        }
    }
}

/// Outcome of one seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config_hash: String,
    pub phase: Phase,
    pub steps_completed: usize,
    pub max_v: f64,
    #[serde(rename = "max_tail_dV")]
    pub max_tail_dv: f64,
    pub projection_failures: usize,
    pub wall_time_s: f64,
    #[serde(rename = "final")]
    pub final_record: MetricsRecord,
}

/// A seed's metric stream together with the state it ended in.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub summary: RunSummary,
    pub records: Vec<MetricsRecord>,
    pub swarm: Swarm,
    pub w: WeightMatrix,
}

/// Aggregate over seeds, as written to `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchSummary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Most severe phase over the seeds.
    pub phase: Phase,
    /// Final-row metrics, mean and population std over seeds.
    pub metrics: BTreeMap<String, Stat>,
    pub runs: Vec<RunSummary>,
    pub config: ExperimentConfig,
}

/// Swarm and initial `W` for a seed; both drawn from one stream so every
/// regime of an ablation starts from the same state.
pub fn initial_state(resolved: &Resolved, seed: u64) -> Result<(Swarm, WeightMatrix, SeededRng)> {
    let e = &resolved.config.experiment;
    let mut rng = SeededRng::new(seed);
    let swarm = sample_uniform(&resolved.manifold, e.population, &mut rng)?;
    let w = WeightMatrix::gaussian(&mut rng, e.latent_dim, resolved.manifold.ambient_dim(), e.init_frobenius)?;
    Ok((swarm, w, rng))
}

/// Metrics against the eigenbasis of the swarm's current second moment.
fn snapshot(step: usize, swarm: &Swarm, w: &WeightMatrix, cfg: &DynamicsConfig, v_prev: f64) -> Result<MetricsRecord> {
    let reference = SpectralReference::new(&swarm.second_moment(), w.latent_dim())?;
    Ok(MetricsRecord::compute(step, &swarm.positions, w.matrix(), cfg.lambda_reg, v_prev, &reference))
}

/// The synchronous coupled loop for one seed.
///
/// `V` is tracked at every step so the tail statistic sees every one-step
/// difference; records are kept every `metrics_every` steps plus the first
/// and last. A tripped divergence guard ends the run early.
pub fn simulate(resolved: &Resolved, seed: u64) -> Result<SeedRun> {
    let started = Instant::now();
    let cfg = resolved.dynamics();
    cfg.validate()?;
    let every = resolved.config.experiment.metrics_every;
    let (mut swarm, mut w, mut rng) = initial_state(resolved, seed)?;
    let tail_start = cfg.steps - (cfg.steps as f64 * tol::PHASE_TAIL_FRACTION).floor() as usize;

    let mut v = lyapunov(w.matrix());
    let mut max_v = v;
    let mut max_tail_dv = f64::NEG_INFINITY;
    let mut projection_failures = 0;
    let mut steps_completed = 0;
    let mut records = vec![snapshot(0, &swarm, &w, &cfg, v)?];
    for k in 1..=cfg.steps {
        let report = coupled_step(&mut swarm, &mut w, &cfg, &mut rng)?;
        projection_failures += report.projection_failures;
        steps_completed = k;
        let v_next = lyapunov(w.matrix());
        let dv = v_next - v;
        max_v = if v_next.is_finite() { max_v.max(v_next) } else { f64::INFINITY };
        if k > tail_start {
            max_tail_dv = if dv.is_nan() { f64::NAN } else { max_tail_dv.max(dv) };
        }
        if k % every == 0 || k == cfg.steps || report.diverged {
            records.push(snapshot(k, &swarm, &w, &cfg, v).unwrap_or_else(|_| nan_record(k, &w)));
        }
        v = v_next;
        if report.diverged {
            log::info!("seed {seed}: divergence guard tripped at step {k}");
            break;
        }
    }
    if max_tail_dv == f64::NEG_INFINITY {
        max_tail_dv = 0.0;
    }
    let phase = if steps_completed < cfg.steps { Phase::ExplosiveDivergence } else { Phase::classify(max_v, max_tail_dv) };
    let summary = RunSummary {
        seed,
        config_hash: resolved.hash.clone(),
        phase,
        steps_completed,
        max_v,
        max_tail_dv,
        projection_failures,
        wall_time_s: started.elapsed().as_secs_f64(),
        final_record: records.last().cloned().expect("at least the initial record"),
    };
    Ok(SeedRun { summary, records, swarm, w })
}

/// Record for a state whose metrics cannot be evaluated (non-finite `W`).
fn nan_record(step: usize, w: &WeightMatrix) -> MetricsRecord {
    MetricsRecord {
        step,
        v: lyapunov(w.matrix()),
        dv: f64::NAN,
        e: f64::NAN,
        frob_w: w.frobenius(),
        sin_theta: f64::NAN,
        ortho_error: f64::NAN,
        eff_rank: f64::NAN,
        noise_proj: f64::NAN,
        latent_eigs: vec![f64::NAN; w.latent_dim()],
    }
}

fn for_each_seed<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| f(s)).collect()
    }
}

pub fn summarise(resolved: &Resolved, runs: &[RunSummary]) -> BatchSummary {
    let finals: Vec<Vec<(&'static str, f64)>> = runs.iter().map(|r| r.final_record.scalars()).collect();
    BatchSummary {
        config_hash: resolved.hash.clone(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        phase: runs.iter().map(|r| r.phase).max().unwrap_or(Phase::StableAlignment),
        metrics: aggregate(&finals),
        runs: runs.to_vec(),
        config: resolved.config.clone(),
    }
}

/// All seeds of a synchronous experiment.
pub fn run(resolved: &Resolved) -> Result<(BatchSummary, Vec<SeedRun>)> {
    let runs = for_each_seed(&resolved.config.experiment.seeds, |s| simulate(resolved, s))?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    Ok((summarise(resolved, &summaries), runs))
}

pub fn metrics_csv(records: &[MetricsRecord], m: usize) -> String {
    let mut out = MetricsRecord::csv_header(m);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `seed_<s>.csv` per seed and `summary.json`.
pub fn write_run(out_dir: &Path, resolved: &Resolved, summary: &BatchSummary, runs: &[SeedRun]) -> Result<()> {
    let m = resolved.config.experiment.latent_dim;
    for r in runs {
        write_atomic(&out_dir.join(format!("seed_{}.csv", r.summary.seed)), metrics_csv(&r.records, m).as_bytes())?;
    }
    write_json(&out_dir.join("summary.json"), summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepMember {
    pub ratio: f64,
    pub eta_w: f64,
    pub summary: BatchSummary,
}

/// One synchronous experiment per `η_w/η_x` ratio, with `η_x` fixed.
pub fn sweep(resolved: &Resolved, ratios: &[f64]) -> Result<Vec<(SweepMember, Vec<SeedRun>)>> {
    ratios
        .iter()
        .map(|&ratio| {
            let member = resolved.with(|c| {
                c.dynamics.eta_w = ratio * c.dynamics.eta_x;
                c.experiment.mode = Mode::Sweep;
            })?;
            let (summary, runs) = run(&member)?;
            Ok((SweepMember { ratio, eta_w: member.config.dynamics.eta_w, summary }, runs))
        })
        .collect()
}

pub fn write_sweep(out_dir: &Path, resolved: &Resolved, members: &[(SweepMember, Vec<SeedRun>)]) -> Result<()> {
    for (member, runs) in members {
        let sub = resolved.with(|c| c.dynamics.eta_w = member.eta_w)?;
        write_run(&out_dir.join(format!("ratio_{}", member.ratio)), &sub, &member.summary, runs)?;
    }
    let index: Vec<&SweepMember> = members.iter().map(|(m, _)| m).collect();
    write_json(&out_dir.join("sweep.json"), &index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Static agents: `η_x = 0`, `D = 0`.
    OdeOnly,
    /// Frozen plasticity: `η_w = 0`.
    SdeOnly,
    Coupled,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::OdeOnly, Regime::SdeOnly, Regime::Coupled];

    pub fn name(self) -> &'static str {
        match self {
            Regime::OdeOnly => "ode_only",
            Regime::SdeOnly => "sde_only",
            Regime::Coupled => "coupled",
        }
    }

    pub fn apply(self, c: &mut ExperimentConfig) {
        match self {
            Regime::OdeOnly => {
                c.dynamics.eta_x = 0.0;
                c.dynamics.diffusion = 0.0;
            }
            Regime::SdeOnly => c.dynamics.eta_w = 0.0,
            Regime::Coupled => {}
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationEntry {
    pub regime: Regime,
    pub phase: Phase,
    pub ortho_error: Stat,
    pub eff_rank: Stat,
    pub summary: BatchSummary,
}

/// The three regimes on identical seeds.
pub fn ablation(resolved: &Resolved) -> Result<Vec<(AblationEntry, Vec<SeedRun>)>> {
    Regime::ALL
        .iter()
        .map(|&regime| {
            let r = resolved.with(|c| regime.apply(c))?;
            let (summary, runs) = run(&r)?;
            let entry = AblationEntry {
                regime,
                phase: summary.phase,
                ortho_error: summary.metrics["ortho_error"],
                eff_rank: summary.metrics["eff_rank"],
                summary,
            };
            Ok((entry, runs))
        })
        .collect()
}

pub fn write_ablation(out_dir: &Path, resolved: &Resolved, entries: &[(AblationEntry, Vec<SeedRun>)]) -> Result<()> {
    let mut index = BTreeMap::new();
    for (entry, runs) in entries {
        let r = resolved.with(|c| entry.regime.apply(c))?;
        write_run(&out_dir.join(entry.regime.name()), &r, &entry.summary, runs)?;
        index.insert(entry.regime.name(), entry);
    }
    write_json(&out_dir.join("ablation.json"), &index)
}

/// Integrates the averaged ODE from the seed's initial `W`, with `Σ` the
/// population covariance when known and the initial swarm's second moment
/// otherwise. Step `k` corresponds to ODE time `k·η_w/γ`.
pub fn averaged_ode(resolved: &Resolved, seed: u64) -> Result<Vec<MetricsRecord>> {
    let cfg = resolved.dynamics();
    let (swarm, w, _) = initial_state(resolved, seed)?;
    let sigma = resolved.manifold.population_covariance().unwrap_or_else(|| swarm.second_moment());
    let reference = SpectralReference::new(&sigma, w.latent_dim())?;
    if cfg.eta_w == 0.0 || cfg.gamma == 0.0 {
        return Err(Error::Config("averaged_ode needs eta_w > 0 and gamma > 0".into()));
    }
    let every = resolved.config.experiment.metrics_every;
    let mut steps: Vec<usize> = (0..=cfg.steps).step_by(every).collect();
    if steps.last() != Some(&cfg.steps) {
        steps.push(cfg.steps);
    }
    let taus: Vec<f64> = steps.iter().map(|&k| k as f64 * cfg.eta_w / cfg.gamma).collect();
    let traj = averaged_trajectory(w.matrix(), &sigma, cfg.gamma, &taus, tol::RK4_STEP)?;
    let mut v_prev = lyapunov(w.matrix());
    Ok(traj
        .iter()
        .zip(&steps)
        .map(|((_, wk), &k)| {
            let rec = MetricsRecord::compute(k, &swarm.positions, wk, cfg.lambda_reg, v_prev, &reference);
            v_prev = rec.v;
            rec
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GossipSummary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub phase: Phase,
    pub metrics: BTreeMap<String, Stat>,
    pub topology: String,
    pub contraction: f64,
    pub config: ExperimentConfig,
}

/// Per-seed asynchronous run; the CSV has the usual columns plus
/// `disagreement`. `steps` counts single-agent activations.
pub fn gossip(resolved: &Resolved) -> Result<(GossipSummary, Vec<(u64, String)>)> {
    let cfg = resolved.dynamics();
    let e = &resolved.config.experiment;
    let kind = resolved.config.gossip.kind()?;
    let runs = for_each_seed(&e.seeds, |seed| {
        let (swarm, w, mut rng) = initial_state(resolved, seed)?;
        let topo = GossipTopology::new(kind, e.population, &mut rng)?;
        let reference = SpectralReference::new(&swarm.second_moment(), e.latent_dim)?;
        let mut replicas = ReplicaSet::consensus(&w, swarm)?;
        let out = run_async(&mut replicas, &topo, &cfg, &mut rng, cfg.steps, e.metrics_every, &reference)?;
        let mut csv = MetricsRecord::csv_header(e.latent_dim);
        csv.push_str(",disagreement\n");
        for r in &out.records {
            csv.push_str(&format!("{},{}\n", r.metrics.csv_row(), r.disagreement));
        }
        let last = out.records.last().expect("initial record");
        let max_v = out.records.iter().map(|r| r.metrics.v).fold(0.0, f64::max);
        let phase = if out.diverged_at.is_some() { Phase::ExplosiveDivergence } else { Phase::classify(max_v, 0.0) };
        let mut scalars = last.metrics.scalars();
        scalars.push(("disagreement", last.disagreement));
        Ok((seed, csv, scalars, phase, topo.contraction()?))
    })?;
    let summary = GossipSummary {
        config_hash: resolved.hash.clone(),
        seeds: e.seeds.clone(),
        phase: runs.iter().map(|r| r.3).max().unwrap_or(Phase::StableAlignment),
        metrics: aggregate(&runs.iter().map(|r| r.2.clone()).collect::<Vec<_>>()),
        topology: resolved.config.gossip.topology.clone(),
        contraction: runs[0].4,
        config: resolved.config.clone(),
    };
    Ok((summary, runs.into_iter().map(|r| (r.0, r.1)).collect()))
}

pub fn write_gossip(out_dir: &Path, summary: &GossipSummary, csvs: &[(u64, String)]) -> Result<()> {
    for (seed, csv) in csvs {
        write_atomic(&out_dir.join(format!("gossip_seed_{seed}.csv")), csv.as_bytes())?;
    }
    write_json(&out_dir.join("summary.json"), summary)
}
