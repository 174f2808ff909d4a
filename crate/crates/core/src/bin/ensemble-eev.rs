use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensemble_eev::app::{configure_threads, run_experiment, Experiment, ExperimentConfig, KeyValues};

#[derive(Parser)]
#[command(name = "ensemble-eev", about = "Ensemble eddy-viscosity flow simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spatial convergence on the manufactured solution
    ConvergeSpace(RunArgs),
    /// Temporal convergence on the manufactured solution
    ConvergeTime(RunArgs),
    /// Flow over a forward-backward step
    StepChannel(RunArgs),
    /// Lid-driven cavity with random viscosity on a sparse grid
    CavityScm(RunArgs),
    /// Write the sparse-grid nodes and weights
    GridDump(RunArgs),
    /// Shared versus per-realization solve timings
    TimingCompare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key/value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, `key=value`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn run(cli: Cli) -> ensemble_eev::Result<()> {
    let (experiment, args) = match cli.command {
        Command::ConvergeSpace(a) => (Experiment::ConvergeSpace, a),
        Command::ConvergeTime(a) => (Experiment::ConvergeTime, a),
        Command::StepChannel(a) => (Experiment::StepChannel, a),
        Command::CavityScm(a) => (Experiment::CavityScm, a),
        Command::GridDump(a) => (Experiment::GridDump, a),
        Command::TimingCompare(a) => (Experiment::TimingCompare, a),
    };
    let mut kv = match &args.config {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    for s in &args.set {
        kv.set(s)?;
    }
    let config = ExperimentConfig::from_key_values(&kv, Some(experiment))?;
    let threads = configure_threads()?;
    log::info!("{experiment} on {threads} threads");
    let out = run_experiment(&config)?;
    for line in &out.summary {
        println!("{line}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
