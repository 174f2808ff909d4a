//! Experiment drivers behind the command line and the examples.

mod config;
mod experiments;
mod output;
mod problems;

pub use config::{Experiment, ExperimentConfig, KeyValues};
pub use experiments::{
    configure_threads, convergence_config, run_cavity, run_experiment, run_step_channel, run_timing, CavityRun,
    FlowRun, TimingRun, THREADS_ENV,
};
pub use output::{emit_vtk, num, write_file, Artifacts, CsvTable};
pub use problems::{CavityProblem, StepChannelProblem};
