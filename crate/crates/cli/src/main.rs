use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use uavmimo::sweep::{self, Execution};

/// UAV air-to-ground MIMO rank analysis over a receiver grid.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace every site and write CSV tables, heatmaps and a manifest.
    Run {
        config: PathBuf,
        /// Worker threads (1 runs sequentially). Defaults to all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Accepted for interface stability; the simulation is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse the config and geometry and print scene statistics.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            workers,
            out,
            seed,
        } => {
            if seed.is_some() {
                log::info!("--seed has no effect: the simulation is deterministic");
            }
            let exec = match workers {
                Some(0) => anyhow::bail!("--workers must be at least 1"),
                Some(1) => Execution::Sequential,
                Some(n) => Execution::Parallel { workers: n },
                None => Execution::default(),
            };
            let outcome =
                sweep::run_sweep(&config, &out, exec).with_context(|| format!("running {}", config.display()))?;
            let m = &outcome.manifest;
            println!(
                "{}: {} altitudes x {} sites, {:.2} s; results in {}",
                m.scenario.scenario,
                m.layers.len(),
                m.scenario.grid_nx * m.scenario.grid_ny,
                m.timings.sweep_s,
                outcome.out_dir.display()
            );
            for l in &m.layers {
                let ranks: Vec<String> = l.criteria.iter().map(|c| format!("P_r1[{}]={:.3}", c.criterion, c.p_r1)).collect();
                println!("  z={} m  P_Z={:.3}  P_B={:.3}  {}", l.altitude_m, l.p_z, l.p_b, ranks.join("  "));
            }
        }
        Command::Validate { config } => {
            let prepared = sweep::prepare(&config).with_context(|| format!("validating {}", config.display()))?;
            println!("{}", serde_json::to_string_pretty(&prepared.report)?);
            if prepared.report.tx_inside_building {
                anyhow::bail!("transmitter is inside a building");
            }
        }
    }
    Ok(())
}
