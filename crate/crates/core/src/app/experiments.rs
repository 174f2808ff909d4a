use std::path::Path;
use std::time::Instant;

use super::config::{Experiment, ExperimentConfig};
use super::output::{emit_vtk, num, Artifacts, CsvTable};
use super::problems::{CavityProblem, StepChannelProblem};
use crate::ensemble::{sample_uniform_viscosity, EnsembleState, ViscosityEnsemble};
use crate::error::{Error, Result};
use crate::fem::TaylorHoodSpace;
use crate::linalg::{timing_compare, Factorization, RhsBlock, SparseMatrix, TimingReport};
use crate::mesh::{cavity_mesh, step_channel_mesh};
use crate::scheme::{
    stability_audit, EnsembleStepper, FlowProblem, SchemeDescriptor, StabilityReport, StepParams, StepReport,
    Trajectory,
};
use crate::stochastics::{perturbation_coeffs, smolyak_grid, weighted_expectation, KlViscosity, PerturbationSpec};
use crate::verification::{spatial_study, temporal_study, ConvergenceConfig, ErrorReport};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "ENSEMBLE_EEV_THREADS";

/// Sizes the global rayon pool from `ENSEMBLE_EEV_THREADS` if set. Returns
/// the thread count in effect.
pub fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::config(THREADS_ENV, format!("expected a positive integer, got '{v}'")))?;
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("thread pool already initialized; {THREADS_ENV} ignored");
        }
    }
    Ok(rayon::current_num_threads())
}

pub fn convergence_config(c: &ExperimentConfig) -> ConvergenceConfig {
    ConvergenceConfig {
        scheme: c.scheme,
        expected_nu: c.expected_nu,
        nu_spread: c.nu_spread,
        epsilon: c.epsilon,
        ensemble_size: c.ensemble_size,
        perturbation: c.perturbation,
        gamma: c.gamma,
        mu: c.mu,
        t_end: c.t_end,
        seed: c.seed,
        norm: c.norm,
        bootstrap: c.bootstrap,
    }
}

fn perturbations(c: &ExperimentConfig, n: usize) -> Result<Vec<f64>> {
    perturbation_coeffs(&PerturbationSpec { epsilon: c.epsilon, mode: c.perturbation, n, seed: c.seed.wrapping_add(1) })
}

/// A full transient run of the ensemble scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub gamma: f64,
    pub trajectory: Trajectory,
    pub reports: Vec<StepReport>,
    pub stability: StabilityReport,
    /// Mean velocity and pressure at the requested snapshot times.
    pub snapshots: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub final_state: EnsembleState,
}

impl FlowRun {
    /// `Δt Σ_{n≥1} ‖∇·u_j^n‖²` for every realization.
    pub fn divergence_sums(&self, dt: f64) -> Vec<f64> {
        (0..self.trajectory.n_realizations()).map(|j| self.trajectory.divergence_time_sum(j, dt)).collect()
    }
}

fn run_flow(
    space: &TaylorHoodSpace,
    problem: &dyn FlowProblem,
    viscosity: &ViscosityEnsemble,
    c: &ExperimentConfig,
    gamma: f64,
) -> Result<FlowRun> {
    let descriptor = SchemeDescriptor::from_name(c.scheme);
    let params = StepParams::new(c.dt, gamma, c.mu, c.t_end)?;
    let mut stepper = EnsembleStepper::new(space, problem, viscosity, descriptor.clone(), params)?;
    let mut state = stepper.initial_state()?;
    let mut trajectory = Trajectory::new();
    let mut reports = Vec::new();
    let mut snapshots = Vec::new();
    let mut snap = |state: &EnsembleState| {
        if c.vtk_times.iter().any(|&t| (t - state.time).abs() < 0.5 * c.dt) {
            let p = crate::ensemble::mean_of(&state.pressures);
            snapshots.push((state.time, state.current_mean().values, p.values));
        }
    };
    trajectory.record(space, problem, &state);
    snap(&state);
    if let Some(r) = stepper.bootstrap(&mut state, c.bootstrap)? {
        reports.push(r);
    }
    if state.step > 0 {
        trajectory.record(space, problem, &state);
        snap(&state);
    }
    while state.step < params.n_steps() {
        reports.push(stepper.advance(&mut state)?);
        trajectory.record(space, problem, &state);
        snap(&state);
        log::info!("t = {:.4} mean energy {:.6e}", state.time, trajectory.mean_energy.last().copied().unwrap_or(0.0));
    }
    let stability = stability_audit(&trajectory, viscosity, &params, &descriptor, space.poincare_constant())?;
    Ok(FlowRun { gamma, trajectory, reports, stability, snapshots, final_state: state })
}

/// Step-channel runs, one per grad-div parameter (`gammas`, or `gamma`
/// when the sweep is empty).
pub fn run_step_channel(c: &ExperimentConfig) -> Result<(TaylorHoodSpace, Vec<FlowRun>)> {
    let space = TaylorHoodSpace::new(step_channel_mesh(c.mesh_level)?)?;
    let viscosity = sample_uniform_viscosity(c.expected_nu, c.nu_spread, c.ensemble_size, c.seed)?;
    let problem = StepChannelProblem { k: perturbations(c, c.ensemble_size)?, epsilon: c.epsilon, negate_inflow: c.negate_inflow };
    let gammas = if c.gammas.is_empty() { vec![c.gamma] } else { c.gammas.clone() };
    let runs = gammas.iter().map(|&g| run_flow(&space, &problem, &viscosity, c, g)).collect::<Result<Vec<_>>>()?;
    Ok((space, runs))
}

/// Cavity ensemble sampled at the sparse-grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityRun {
    pub run: FlowRun,
    pub weights: Vec<f64>,
    /// Quadrature-weighted `E[½‖u‖²]` per time level.
    pub expected_energy: Vec<f64>,
}

pub fn run_cavity(c: &ExperimentConfig) -> Result<(TaylorHoodSpace, CavityRun)> {
    let grid = smolyak_grid(c.grid_dimension, c.grid_level)?;
    if grid.len() != c.ensemble_size {
        log::warn!("ensemble size follows the sparse grid: {} realizations", grid.len());
    }
    let space = TaylorHoodSpace::new(cavity_mesh(c.mesh_level)?)?;
    let kl = KlViscosity::new(c.expected_re, c.correlation_length)?;
    let samples = grid
        .nodes
        .iter()
        .map(|y| space.quadrature().points().map(|q| kl.eval(q.x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let viscosity = ViscosityEnsemble::from_point_values(samples)?;
    let problem = CavityProblem { k: perturbations(c, grid.len())?, epsilon: c.epsilon };
    let run = run_flow(&space, &problem, &viscosity, c, c.gamma)?;
    let expected_energy = (0..run.trajectory.n_levels())
        .map(|n| {
            let e: Vec<f64> = (0..grid.len()).map(|j| run.trajectory.energy(n, j)).collect();
            weighted_expectation(&e, &grid.weights)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((space, CavityRun { run, weights: grid.weights, expected_energy }))
}

/// Shared versus per-realization solve timings along a short step-channel
/// run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRun {
    /// Factorization and solves only, on the ensemble systems.
    pub linear: TimingReport,
    /// Assembly plus solves of the whole step, ensemble scheme.
    pub scheme_shared: f64,
    /// Assembly plus solves of the whole step, one system per realization.
    pub scheme_standard: f64,
}

pub fn run_timing(c: &ExperimentConfig) -> Result<TimingRun> {
    let space = TaylorHoodSpace::new(step_channel_mesh(c.mesh_level)?)?;
    let viscosity = sample_uniform_viscosity(c.expected_nu, c.nu_spread, c.ensemble_size, c.seed)?;
    let problem = StepChannelProblem { k: perturbations(c, c.ensemble_size)?, epsilon: c.epsilon, negate_inflow: c.negate_inflow };
    let descriptor = SchemeDescriptor::from_name(c.scheme);
    let params = StepParams::new(c.dt, c.gamma, c.mu, c.t_end)?;
    let mut stepper = EnsembleStepper::new(&space, &problem, &viscosity, descriptor.clone(), params)?;
    let mut state = stepper.initial_state()?;
    stepper.bootstrap(&mut state, c.bootstrap)?;

    let mut systems: Vec<(SparseMatrix, RhsBlock)> = Vec::new();
    let (mut scheme_shared, mut scheme_standard) = (0.0, 0.0);
    while state.step < params.n_steps() {
        let start = Instant::now();
        let sys = stepper.assemble(&state)?;
        Factorization::new(&sys.matrix)?.solve_block(&sys.rhs)?;
        scheme_shared += start.elapsed().as_secs_f64();

        let start = Instant::now();
        for j in 0..state.n_realizations() {
            let (a, b) = stepper.assembler.assemble_standard_system(&state, j, &descriptor, &params)?;
            Factorization::new(&a)?.solve(&b)?;
        }
        scheme_standard += start.elapsed().as_secs_f64();

        systems.push((sys.matrix, sys.rhs));
        stepper.advance(&mut state)?;
    }
    let linear = timing_compare(&systems)?;
    Ok(TimingRun { linear, scheme_shared, scheme_standard })
}

fn metadata(c: &ExperimentConfig) -> String {
    format!("# ensemble-eev {} (seed {})\n{}", c.experiment, c.seed, c.to_key_values())
}

fn convergence_csv(report: &ErrorReport) -> CsvTable {
    let mut t = CsvTable::new(&["realization", "lhs", "rhs", "holds", "cells_per_side", "dt"]);
    for r in &report.runs {
        for (j, chk) in r.stability.checks.iter().enumerate() {
            t.push(vec![
                j.to_string(),
                num(chk.lhs),
                num(chk.rhs),
                chk.holds(1e-10).to_string(),
                r.cells_per_side.to_string(),
                num(r.dt),
            ]);
        }
    }
    t
}

fn energy_table(run: &FlowRun) -> CsvTable {
    let nj = run.trajectory.n_realizations();
    let mut header = vec!["time".to_string(), "mean_energy".to_string()];
    header.extend((0..nj).map(|j| format!("energy_{j}")));
    header.extend((0..nj).map(|j| format!("div_sq_{j}")));
    let mut t = CsvTable { header, rows: Vec::new() };
    for n in 0..run.trajectory.n_levels() {
        let mut row = vec![num(run.trajectory.times[n]), num(run.trajectory.mean_energy[n])];
        row.extend((0..nj).map(|j| num(run.trajectory.energy(n, j))));
        row.extend((0..nj).map(|j| num(run.trajectory.norms[n][j].div_sq)));
        t.push(row);
    }
    t
}

fn diagnostics_table(run: &FlowRun) -> CsvTable {
    let mut t = CsvTable::new(&["step", "time", "max_mixing_length", "max_fluct_divergence", "assembly_s", "solve_s"]);
    for r in &run.reports {
        t.push(vec![
            r.step.to_string(),
            num(r.time),
            num(r.max_mixing_length),
            num(r.max_fluct_divergence),
            num(r.assembly_secs),
            num(r.solve_secs),
        ]);
    }
    t
}

fn snapshots(space: &TaylorHoodSpace, run: &FlowRun, dir: &Path, tag: &str, out: &mut Artifacts) -> Result<()> {
    for (t, u, p) in &run.snapshots {
        let path = dir.join(format!("{tag}_t{t}.vtk"));
        emit_vtk(space, u, p, &path)?;
        out.files.push(path);
    }
    Ok(())
}

/// Runs `c.experiment` and writes its artifacts under `c.output_dir`.
pub fn run_experiment(c: &ExperimentConfig) -> Result<Artifacts> {
    c.validate()?;
    let dir = c.output_dir.as_path();
    let mut out = Artifacts::default();
    out.text(dir, "metadata.txt", &metadata(c))?;
    match c.experiment {
        Experiment::ConvergeSpace | Experiment::ConvergeTime => {
            let cc = convergence_config(c);
            let report = if c.experiment == Experiment::ConvergeSpace {
                spatial_study(&cc, &c.levels, c.dt)?
            } else {
                temporal_study(&cc, c.mesh_level, &c.steps)?
            };
            out.text(dir, "errors.csv", &report.to_csv())?;
            out.csv(dir, "stability.csv", &convergence_csv(&report))?;
            for (i, r) in report.runs.iter().enumerate() {
                let rate = if i == 0 { String::new() } else { format!(" rate {:.3}", report.rates[i - 1]) };
                out.summary.push(format!("h=1/{} dt={:.3e} error {:.4e}{rate}", r.cells_per_side, r.dt, r.error));
            }
            let ok = report.runs.iter().all(|r| r.stability.all_hold(1e-10));
            out.summary.push(format!("stability bound holds: {ok}"));
        }
        Experiment::StepChannel => {
            let (space, runs) = run_step_channel(c)?;
            let mut sweep = CsvTable::new(&["gamma", "realization", "divergence_time_sum"]);
            for run in &runs {
                let tag = format!("gamma_{}", run.gamma);
                out.csv(dir, &format!("energy_{tag}.csv"), &energy_table(run))?;
                out.csv(dir, &format!("diagnostics_{tag}.csv"), &diagnostics_table(run))?;
                snapshots(&space, run, dir, &format!("mean_{tag}"), &mut out)?;
                let sums = run.divergence_sums(c.dt);
                for (j, s) in sums.iter().enumerate() {
                    sweep.push(vec![num(run.gamma), j.to_string(), num(*s)]);
                }
                let avg = sums.iter().sum::<f64>() / sums.len() as f64;
                out.summary.push(format!(
                    "gamma {}: final mean energy {:.6e}, average divergence sum {avg:.4e}",
                    run.gamma,
                    run.trajectory.mean_energy.last().copied().unwrap_or(0.0)
                ));
            }
            out.csv(dir, "divergence_sweep.csv", &sweep)?;
        }
        Experiment::CavityScm => {
            let (space, cav) = run_cavity(c)?;
            let mut t = CsvTable::new(&["time", "expected_energy", "mean_energy"]);
            for (n, e) in cav.expected_energy.iter().enumerate() {
                t.push(vec![num(cav.run.trajectory.times[n]), num(*e), num(cav.run.trajectory.mean_energy[n])]);
            }
            out.csv(dir, "energy.csv", &t)?;
            out.csv(dir, "realizations.csv", &energy_table(&cav.run))?;
            out.csv(dir, "diagnostics.csv", &diagnostics_table(&cav.run))?;
            snapshots(&space, &cav.run, dir, "mean", &mut out)?;
            let s = &cav.run.final_state;
            let path = dir.join("final_mean.vtk");
            emit_vtk(&space, &s.current_mean().values, &crate::ensemble::mean_of(&s.pressures).values, &path)?;
            out.files.push(path);
            out.summary.push(format!(
                "{} realizations, final expected energy {:.6e}",
                cav.weights.len(),
                cav.expected_energy.last().copied().unwrap_or(0.0)
            ));
        }
        Experiment::GridDump => {
            let grid = smolyak_grid(c.grid_dimension, c.grid_level)?;
            out.text(dir, "grid.csv", &grid.to_csv())?;
            out.summary.push(format!("{} nodes, weight sum {:.12}", grid.len(), grid.weights.iter().sum::<f64>()));
        }
        Experiment::TimingCompare => {
            let r = run_timing(c)?;
            let mut t = CsvTable::new(&["measure", "shared_s", "standard_s", "n_dof", "n_rhs"]);
            let (n, m) = (r.linear.n_dof.to_string(), r.linear.n_rhs.to_string());
            t.push(vec!["linear_solve".into(), num(r.linear.t_shared), num(r.linear.t_standard), n.clone(), m.clone()]);
            t.push(vec!["full_step".into(), num(r.scheme_shared), num(r.scheme_standard), n, m]);
            out.csv(dir, "timing.csv", &t)?;
            out.summary.push(format!(
                "solve: shared {:.3}s standard {:.3}s; full step: shared {:.3}s standard {:.3}s",
                r.linear.t_shared, r.linear.t_standard, r.scheme_shared, r.scheme_standard
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_dump_writes_header_and_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig { output_dir: dir.path().to_path_buf(), ..ExperimentConfig::defaults(Experiment::GridDump) };
        let out = run_experiment(&c).unwrap();
        let text = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
        assert!(text.starts_with("y1,y2,y3,y4,y5,weight"));
        assert_eq!(text.lines().count(), 12);
        assert_eq!(out.files.len(), 2);
    }

    #[test]
    fn short_channel_run_is_finite() {
        let c = ExperimentConfig {
            mesh_level: 1,
            ensemble_size: 3,
            t_end: 2.0,
            gammas: vec![0.0, 10.0],
            vtk_times: vec![1.0],
            ..ExperimentConfig::defaults(Experiment::StepChannel)
        };
        let (_, runs) = run_step_channel(&c).unwrap();
        assert_eq!(runs.len(), 2);
        for r in &runs {
            assert_eq!(r.trajectory.n_levels(), 3);
            assert_eq!(r.snapshots.len(), 1);
            assert!(r.trajectory.mean_energy.iter().all(|e| e.is_finite()));
        }
    }
}
