use std::time::Instant;

use super::assembly::{Assembler, StepSystem};
use super::descriptor::{SchemeDescriptor, StepParams};
use super::forms::{field_norms, l2_norm_sq_fn, FieldNorms};
use super::problem::FlowProblem;
use crate::ensemble::{EnsembleState, ViscosityEnsemble};
use crate::error::{Error, Result};
use crate::fem::{FieldCoefficients, TaylorHoodSpace};
use crate::linalg::{Factorization, SymbolicFactorization};

/// How the second starting level of a two-level scheme is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bootstrap {
    /// Interpolate the analytic velocity at `t = Δt`.
    Exact,
    /// Take one backward Euler step of the ensemble scheme.
    BackwardEuler,
}

/// Diagnostics of one completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub max_mixing_length: f64,
    /// `max_j ‖∇·u'_j‖_{L∞}` over the quadrature points.
    pub max_fluct_divergence: f64,
    pub assembly_secs: f64,
    pub solve_secs: f64,
}

/// Advances an ensemble with one shared factorization per step.
pub struct EnsembleStepper<'a> {
    pub assembler: Assembler<'a>,
    pub descriptor: SchemeDescriptor,
    pub params: StepParams,
    symbolic: Option<SymbolicFactorization>,
}

impl<'a> EnsembleStepper<'a> {
    pub fn new(
        space: &'a TaylorHoodSpace,
        problem: &'a dyn FlowProblem,
        viscosity: &'a ViscosityEnsemble,
        descriptor: SchemeDescriptor,
        params: StepParams,
    ) -> Result<Self> {
        params.check_hypotheses(&descriptor);
        for (j, m) in viscosity.stability_margins(&descriptor).iter().enumerate() {
            if *m <= 0.0 {
                log::warn!("realization {j}: stability constant {m:.3e} is not positive for {}", descriptor.name);
            }
        }
        Ok(EnsembleStepper { assembler: Assembler::new(space, problem, viscosity)?, descriptor, params, symbolic: None })
    }

    pub fn space(&self) -> &'a TaylorHoodSpace {
        self.assembler.space
    }

    pub fn problem(&self) -> &'a dyn FlowProblem {
        self.assembler.problem
    }

    /// Interpolated initial velocities at `t = 0`, zero pressures.
    pub fn initial_state(&self) -> Result<EnsembleState> {
        let space = self.space();
        let p = self.problem();
        let v = (0..p.n_realizations())
            .map(|j| space.interpolate_velocity(|x| p.initial_velocity(j, x)))
            .collect();
        let pr = vec![FieldCoefficients::zeros(space, crate::fem::FieldRole::Pressure); p.n_realizations()];
        EnsembleState::new(v, pr, 0.0)
    }

    /// Brings `state` to the history depth of the descriptor.
    pub fn bootstrap(&mut self, state: &mut EnsembleState, mode: Bootstrap) -> Result<Option<StepReport>> {
        if state.depth() >= self.descriptor.history_depth {
            return Ok(None);
        }
        match mode {
            Bootstrap::Exact => {
                let space = self.space();
                let p = self.problem();
                let t = state.time + self.params.dt;
                let v = (0..p.n_realizations())
                    .map(|j| {
                        let missing = std::cell::Cell::new(false);
                        let u = space.interpolate_velocity(|x| {
                            p.exact_velocity(j, x, t).unwrap_or_else(|| {
                                missing.set(true);
                                [0.0; 2]
                            })
                        });
                        if missing.get() {
                            Err(Error::InvalidState("exact bootstrap needs an analytic velocity".into()))
                        } else {
                            Ok(u)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pr = state.pressures.clone();
                state.push_level(v, pr, t, self.descriptor.history_depth);
                Ok(None)
            }
            Bootstrap::BackwardEuler => {
                let be = SchemeDescriptor::be_eev();
                let report = self.advance_with(state, &be)?;
                Ok(Some(report))
            }
        }
    }

    /// Assembles the system of the next step without solving it.
    pub fn assemble(&self, state: &EnsembleState) -> Result<StepSystem> {
        self.assembler.assemble_step_system(state, &self.descriptor, &self.params)
    }

    /// One step of the configured scheme.
    pub fn advance(&mut self, state: &mut EnsembleState) -> Result<StepReport> {
        let d = self.descriptor.clone();
        self.advance_with(state, &d)
    }

    fn advance_with(&mut self, state: &mut EnsembleState, descriptor: &SchemeDescriptor) -> Result<StepReport> {
        let step = state.step + 1;
        let wrap = |e: Error| Error::StepFailed { step, source: Box::new(e) };
        let system = self.assembler.assemble_step_system(state, descriptor, &self.params).map_err(wrap)?;
        let fluct_div = max_fluct_divergence(self.space(), state, descriptor).map_err(wrap)?;

        let start = Instant::now();
        if self.symbolic.as_ref().is_none_or(|s| !s.matches(&system.matrix)) {
            self.symbolic = Some(SymbolicFactorization::new(&system.matrix).map_err(wrap)?);
        }
        let sym = self.symbolic.as_ref().expect("symbolic analysis present");
        let lu = Factorization::with_symbolic(sym, &system.matrix).map_err(wrap)?;
        let solutions = lu.solve_block(&system.rhs).map_err(wrap)?;
        let solve_secs = start.elapsed().as_secs_f64();

        let space = self.space();
        let nvel = space.n_velocity();
        let mut velocities = Vec::with_capacity(solutions.len());
        let mut pressures = Vec::with_capacity(solutions.len());
        for x in solutions {
            if let Some(i) = x.iter().position(|v| !v.is_finite()) {
                return Err(wrap(Error::InvalidState(format!("non-finite solution entry {i}"))));
            }
            let mut p = x[nvel..].to_vec();
            let mean = space.pressure_mean(&p);
            p.iter_mut().for_each(|v| *v -= mean);
            velocities.push(FieldCoefficients::velocity(x[..nvel].to_vec()));
            pressures.push(FieldCoefficients::pressure(p));
        }
        let time = state.time + self.params.dt;
        state.push_level(velocities, pressures, time, self.descriptor.history_depth.max(descriptor.history_depth));
        log::debug!(
            "step {step} t={time:.6} assembly {:.3}s solve {:.3}s l_max {:.3e} div(u')_inf {:.3e}",
            system.assembly_secs,
            solve_secs,
            system.mixing.max_length(),
            fluct_div
        );
        Ok(StepReport {
            step,
            time,
            max_mixing_length: system.mixing.max_length(),
            max_fluct_divergence: fluct_div,
            assembly_secs: system.assembly_secs,
            solve_secs,
        })
    }
}

fn max_fluct_divergence(space: &TaylorHoodSpace, state: &EnsembleState, descriptor: &SchemeDescriptor) -> Result<f64> {
    let cache = space.quadrature();
    let mut m: f64 = 0.0;
    for f in state.fluctuations(descriptor)? {
        for c in 0..space.mesh.n_cells() {
            for q in cache.cell(c) {
                let (_, g) = space.eval_velocity(&f.values, c, q);
                m = m.max((g[0][0] + g[1][1]).abs());
            }
        }
    }
    Ok(m)
}

/// Per-realization norms of every time level, as needed by the stability
/// audit and the diagnostics stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `norms[n][j]` at time level `n`.
    pub norms: Vec<Vec<FieldNorms>>,
    /// `‖2u^n − u^{n−1}‖²` per level (zero at level 0).
    pub extrap_sq: Vec<Vec<f64>>,
    /// `‖f_j(t_n)‖²` per level.
    pub forcing_sq: Vec<Vec<f64>>,
    /// `½‖<u_h>‖²` per level.
    pub mean_energy: Vec<f64>,
    previous: Option<Vec<FieldCoefficients>>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the newest level of `state`.
    pub fn record(&mut self, space: &TaylorHoodSpace, problem: &dyn FlowProblem, state: &EnsembleState) {
        let t = state.time;
        let current = &state.levels[0];
        self.times.push(t);
        self.norms.push(current.iter().map(|u| field_norms(space, &u.values)).collect());
        self.extrap_sq.push(match &self.previous {
            Some(prev) => current
                .iter()
                .zip(prev)
                .map(|(u, v)| field_norms(space, &FieldCoefficients::combine(&[(2.0, u), (-1.0, v)]).values).l2_sq)
                .collect(),
            None => vec![0.0; current.len()],
        });
        self.forcing_sq.push(
            (0..current.len())
                .map(|j| if problem.has_forcing() { l2_norm_sq_fn(space, |x| problem.forcing(j, x, t)) } else { 0.0 })
                .collect(),
        );
        self.mean_energy.push(0.5 * field_norms(space, &state.current_mean().values).l2_sq);
        self.previous = Some(current.clone());
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }

    pub fn n_realizations(&self) -> usize {
        self.norms.first().map_or(0, Vec::len)
    }

    /// `½‖u_j‖²` at level `n`.
    pub fn energy(&self, n: usize, j: usize) -> f64 {
        0.5 * self.norms[n][j].l2_sq
    }

    /// `Δt Σ_{n≥1} ‖∇·u_j^n‖²`.
    pub fn divergence_time_sum(&self, j: usize, dt: f64) -> f64 {
        dt * self.norms.iter().skip(1).map(|l| l[j].div_sq).sum::<f64>()
    }
}
