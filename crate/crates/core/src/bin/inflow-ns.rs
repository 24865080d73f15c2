use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inflow_ns::config::{parse_config, Experiment};
use inflow_ns::pipeline::run;

#[derive(Parser)]
#[command(version, about = "Run and audit compressible inflow/outflow simulations from a TOML file")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the solver and write the trajectory and run log.
    Simulate(Flags),
    /// Simulate, then audit mass, the maximum principle and the energy balances.
    Audit(Flags),
    /// Perturbed runs against a strong pair and the uniqueness study.
    Ws(Flags),
    /// Boundary pressure probe.
    Probe(Flags),
    /// Cross product over ε, δ and meshes.
    Sweep(Flags),
    /// Brute-force lower-bound constants of the pressure law.
    Constants(Flags),
}

#[derive(clap::Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (experiment, flags) = match cli.verb {
        Verb::Simulate(f) => (Experiment::Simulate, f),
        Verb::Audit(f) => (Experiment::Audit, f),
        Verb::Ws(f) => (Experiment::Ws, f),
        Verb::Probe(f) => (Experiment::Probe, f),
        Verb::Sweep(f) => (Experiment::Sweep, f),
        Verb::Constants(f) => (Experiment::Constants, f),
    };
    let mut cfg = match parse_config(&flags.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    cfg.experiment = experiment;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    let out = flags
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    let workers = flags.workers.or(cfg.workers).unwrap_or(1);
    match run(&cfg, &out, workers) {
        Ok(m) => {
            for s in &m.summaries {
                println!("{s}");
            }
            println!("manifest: {}", out.join(inflow_ns::pipeline::MANIFEST).display());
            if m.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
