//! Experiment configuration, seeded batch runs, and CSV/JSON output.
//!
//! Output layout of a run directory: `seed_<s>.csv` with one metrics row per
//! recorded step, and `summary.json` with the config hash, seeds, phase
//! label and `{mean, std}` of every final-row metric over seeds.

mod config;
mod generator;
mod output;
mod run;

pub use config::{
    config_hash, load_config, DynamicsSection, ExperimentConfig, ExperimentSection, GeneratorSection, GossipSection,
    ManifoldSection, Mode, Resolved, SweepSection,
};
pub use generator::{configured_schedule, generator_csv, generator_test, median, write_generator, GeneratorEntry};
pub use output::{aggregate, write_atomic, write_json, Stat};
pub use run::{
    ablation, averaged_ode, gossip, initial_state, metrics_csv, run, simulate, summarise, sweep, write_ablation,
    write_gossip, write_run, write_sweep, AblationEntry, BatchSummary, GossipSummary, Phase, Regime, RunSummary,
    SeedRun, SweepMember,
};
