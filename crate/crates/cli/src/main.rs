use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kssav::check::{check, dump};
use kssav::sweep::sweep;
use kssav::{load_config, run, RunResult};

#[derive(Parser)]
#[command(name = "kssav", version, about = "SAV finite-element solver for volume-filling Keller-Segel chemotaxis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the initial perturbation, overriding `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Snapshot interval in steps, overriding `snapshot_every`.
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Run every configuration matching a glob, in parallel.
    Sweep { pattern: String },
    /// Validate a configuration and print mesh metrics and step-size conditions.
    Check {
        config: PathBuf,
        /// Also write the mesh and assembled matrices as CSV into DIR.
        #[arg(long, value_name = "DIR")]
        dump: Option<PathBuf>,
    },
}

fn summarize(res: &RunResult) -> String {
    let last = res.energy.last().expect("initial record");
    let bad_conditions = res.flags.iter().skip(1).filter(|f| !f.conditions_hold()).count();
    format!(
        "{} steps, E {:.6e} -> {:.6e}, u in [{:.6}, {:.6}], r {:.6e}; {} energy warnings, {} steps outside the step-size conditions",
        res.steps(),
        res.energy[0].e,
        last.e,
        last.min_u,
        last.max_u,
        last.r,
        res.energy_warnings(),
        bad_conditions
    )
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, snapshot_every } => {
            let mut cfg = load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            if let Some(k) = snapshot_every {
                cfg.snapshot_every = k;
            }
            let res = run(&cfg).with_context(|| format!("running {}", config.display()))?;
            if res.energy_warnings() > 0 {
                eprintln!("warning: energy decay check failed on {} steps (see flags column)", res.energy_warnings());
            }
            println!("{}: {}", cfg.output_dir.display(), summarize(&res));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { pattern } => {
            let outcomes = sweep(&pattern)?;
            let mut failed = 0;
            for o in &outcomes {
                match &o.result {
                    Ok(res) => {
                        let dir = o.output_dir.as_deref().unwrap_or(o.config.as_path());
                        println!("{} -> {}: {}", o.config.display(), dir.display(), summarize(res));
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: error: {e}", o.config.display());
                    }
                }
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Check { config, dump: dump_dir } => {
            let cfg = load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            let (report, mesh, ops) = check(&cfg)?;
            println!("{report}");
            if let Some(dir) = dump_dir {
                dump(&dir, &mesh, &ops)?;
                println!("wrote mesh and operators to {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
