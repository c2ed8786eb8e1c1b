use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dcrl::harness::{self, Resolved};
use dcrl::Error;

#[derive(Parser)]
#[command(name = "dcrl", version, about = "Coupled Langevin/Oja swarm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment (synchronous, async or averaged ODE, per `mode`).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One run per η_w/η_x ratio.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sweep.ratios`.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// ODE-only, SDE-only and coupled regimes on identical seeds.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Graph generator error over the configured (N, ε) schedule.
    GeneratorTest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Asynchronous gossip run.
    Gossip {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Resolved, Error> {
    let resolved = harness::load_config(path)?;
    match seed {
        Some(s) => resolved.with(|c| c.experiment.seeds = vec![s]),
        None => Ok(resolved),
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, out, seed } => {
            let r = load(&config, seed)?;
            match r.config.experiment.mode {
                harness::Mode::Async => {
                    let (summary, csvs) = harness::gossip(&r)?;
                    harness::write_gossip(&out, &summary, &csvs)?;
                    println!("phase: {:?}", summary.phase);
                }
                harness::Mode::AveragedOde => {
                    let m = r.config.experiment.latent_dim;
                    for &s in &r.config.experiment.seeds {
                        let records = harness::averaged_ode(&r, s)?;
                        harness::write_atomic(&out.join(format!("ode_seed_{s}.csv")), harness::metrics_csv(&records, m).as_bytes())?;
                    }
                }
                harness::Mode::GeneratorTest => {
                    let entries = harness::generator_test(&r, &harness::configured_schedule(&r))?;
                    harness::write_generator(&out, &entries)?;
                }
                harness::Mode::Sweep => {
                    let members = harness::sweep(&r, &r.config.sweep.ratios)?;
                    harness::write_sweep(&out, &r, &members)?;
                }
                harness::Mode::Synchronous => {
                    let (summary, runs) = harness::run(&r)?;
                    harness::write_run(&out, &r, &summary, &runs)?;
                    println!("phase: {:?}", summary.phase);
                    for (name, s) in &summary.metrics {
                        println!("{name:>12}: {:.6e} ± {:.2e}", s.mean, s.std);
                    }
                }
            }
        }
        Command::Sweep { config, ratios, out } => {
            let r = load(&config, None)?;
            let ratios = ratios.unwrap_or_else(|| r.config.sweep.ratios.clone());
            let members = harness::sweep(&r, &ratios)?;
            harness::write_sweep(&out, &r, &members)?;
            for (m, _) in &members {
                println!("ratio {:<8} {:?}", m.ratio, m.summary.phase);
            }
        }
        Command::Ablation { config, out } => {
            let r = load(&config, None)?;
            let entries = harness::ablation(&r)?;
            harness::write_ablation(&out, &r, &entries)?;
            for (e, _) in &entries {
                println!(
                    "{:<9} ortho_error {:.4} ± {:.4}  eff_rank {:.3}",
                    e.regime.name(),
                    e.ortho_error.mean,
                    e.ortho_error.std,
                    e.eff_rank.mean
                );
            }
        }
        Command::GeneratorTest { config, out } => {
            let r = load(&config, None)?;
            let entries = harness::generator_test(&r, &harness::configured_schedule(&r))?;
            harness::write_generator(&out, &entries)?;
            for e in &entries {
                println!("N={:<6} ε={:<6} diag={:.3}  median sup error {:.4}", e.n, e.epsilon, e.scaling_diagnostic, e.median_sup_error);
            }
        }
        Command::Gossip { config, out } => {
            let r = load(&config, None)?;
            let (summary, csvs) = harness::gossip(&r)?;
            harness::write_gossip(&out, &summary, &csvs)?;
            println!("phase: {:?}  disagreement {:.3e}", summary.phase, summary.metrics["disagreement"].mean);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) => {
            eprintln!("I/O error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
