//! Manufactured solutions, error norms, and convergence studies.

use std::time::Instant;

use crate::ensemble::{sample_uniform_viscosity, ViscosityEnsemble};
use crate::error::{Error, Result};
use crate::fem::{FieldCoefficients, QuadratureRule, TaylorHoodSpace};
use crate::mesh::{unit_square_mesh, BoundaryMarker};
use crate::scheme::{
    field_norms, stability_audit, Bootstrap, EnsembleStepper, FlowProblem, SchemeDescriptor, SchemeName,
    StabilityReport, StepParams, Trajectory,
};
use crate::stochastics::{perturbation_coeffs, PerturbationMode, PerturbationSpec};

/// Divergence-free analytic flow
/// `u = (cos y + (1+eᵗ) sin y, sin x + (1+eᵗ) cos x)`, `p = sin(x+y)(1+eᵗ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ManufacturedSolution;

impl ManufacturedSolution {
    fn s(t: f64) -> f64 {
        1.0 + t.exp()
    }

    pub fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = Self::s(t);
        [x[1].cos() + s * x[1].sin(), x[0].sin() + s * x[0].cos()]
    }

    /// `g[i][j] = ∂u_i/∂x_j`.
    pub fn gradient(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let s = Self::s(t);
        [[0.0, -x[1].sin() + s * x[1].cos()], [x[0].cos() - s * x[0].sin(), 0.0]]
    }

    pub fn laplacian(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = Self::s(t);
        [-x[1].cos() - s * x[1].sin(), -x[0].sin() - s * x[0].cos()]
    }

    pub fn time_derivative(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let e = t.exp();
        [e * x[1].sin(), e * x[0].cos()]
    }

    pub fn pressure(&self, x: [f64; 2], t: f64) -> f64 {
        (x[0] + x[1]).sin() * Self::s(t)
    }

    pub fn pressure_gradient(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = (x[0] + x[1]).cos() * Self::s(t);
        [g, g]
    }

    pub fn divergence(&self, x: [f64; 2], t: f64) -> f64 {
        let g = self.gradient(x, t);
        g[0][0] + g[1][1]
    }

    /// Forcing of the perturbed solution `(a u, a p)` with viscosity `nu`:
    /// `a ∂ₜu + a²(u·∇)u − ν a Δu + a ∇p`.
    pub fn forcing(&self, a: f64, nu: f64, x: [f64; 2], t: f64) -> [f64; 2] {
        let u = self.velocity(x, t);
        let g = self.gradient(x, t);
        let lap = self.laplacian(x, t);
        let ut = self.time_derivative(x, t);
        let gp = self.pressure_gradient(x, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let conv = u[0] * g[i][0] + u[1] * g[i][1];
            f[i] = a * ut[i] + a * a * conv - nu * a * lap[i] + a * gp[i];
        }
        f
    }
}

/// Ensemble of perturbed manufactured flows `u_j = (1 + k_j ε) u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedProblem {
    pub solution: ManufacturedSolution,
    pub k: Vec<f64>,
    pub epsilon: f64,
    pub viscosities: Vec<f64>,
}

impl ManufacturedProblem {
    pub fn new(k: Vec<f64>, epsilon: f64, viscosities: Vec<f64>) -> Result<Self> {
        if k.len() != viscosities.len() {
            return Err(Error::DimensionMismatch { expected: k.len(), found: viscosities.len() });
        }
        Ok(ManufacturedProblem { solution: ManufacturedSolution, k, epsilon, viscosities })
    }

    pub fn amplitude(&self, j: usize) -> f64 {
        1.0 + self.k[j] * self.epsilon
    }

    /// Amplitude of the exact ensemble mean, `(1/J) Σ (1 + k_j ε)`.
    pub fn mean_amplitude(&self) -> f64 {
        (0..self.k.len()).map(|j| self.amplitude(j)).sum::<f64>() / self.k.len() as f64
    }
}

impl FlowProblem for ManufacturedProblem {
    fn n_realizations(&self) -> usize {
        self.k.len()
    }

    fn forcing(&self, j: usize, x: [f64; 2], t: f64) -> [f64; 2] {
        self.solution.forcing(self.amplitude(j), self.viscosities[j], x, t)
    }

    fn boundary_value(&self, j: usize, _marker: BoundaryMarker, x: [f64; 2], t: f64) -> Option<[f64; 2]> {
        self.exact_velocity(j, x, t)
    }

    fn initial_velocity(&self, j: usize, x: [f64; 2]) -> [f64; 2] {
        let u = self.solution.velocity(x, 0.0);
        let a = self.amplitude(j);
        [a * u[0], a * u[1]]
    }

    fn exact_velocity(&self, j: usize, x: [f64; 2], t: f64) -> Option<[f64; 2]> {
        let u = self.solution.velocity(x, t);
        let a = self.amplitude(j);
        Some([a * u[0], a * u[1]])
    }
}

/// Which part of the H¹ norm enters the space-time error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `‖e‖² + ‖∇e‖²`
    Full,
    /// `‖∇e‖²`
    Seminorm,
}

/// Squared H¹ (or seminorm) error of a discrete velocity against an
/// analytic field, with a 5×5 Gauss rule.
pub fn h1_error_sq(
    space: &TaylorHoodSpace,
    u: &[f64],
    exact: impl Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
    kind: NormKind,
) -> f64 {
    let rule = QuadratureRule::accurate();
    let mut total = 0.0;
    for c in 0..space.mesh.n_cells() {
        for q in &space.cell_values(c, &rule).expect("mesh cells are valid") {
            let (v, g) = space.eval_velocity(u, c, q);
            let (ev, eg) = exact(q.x);
            let mut e = 0.0;
            for i in 0..2 {
                if kind == NormKind::Full {
                    e += (v[i] - ev[i]).powi(2);
                }
                for k in 0..2 {
                    e += (g[i][k] - eg[i][k]).powi(2);
                }
            }
            total += e * q.jxw;
        }
    }
    total
}

/// `(Δt Σ_{n=1}^{M} E_n)^{1/2}` from per-step squared errors `E_n`.
pub fn error_norm_2_1(step_errors_sq: &[f64], dt: f64) -> f64 {
    (dt * step_errors_sq.iter().sum::<f64>()).sqrt()
}

/// Space-time error of the discrete ensemble means `means[n-1]` at
/// `times[n-1]` against the analytic mean.
pub fn mean_error_norm(
    space: &TaylorHoodSpace,
    means: &[FieldCoefficients],
    times: &[f64],
    exact: impl Fn([f64; 2], f64) -> ([f64; 2], [[f64; 2]; 2]),
    dt: f64,
    kind: NormKind,
) -> Result<f64> {
    if means.len() != times.len() {
        return Err(Error::invalid(format!("{} fields but {} times", means.len(), times.len())));
    }
    let errs: Vec<f64> =
        means.iter().zip(times).map(|(u, &t)| h1_error_sq(space, &u.values, |x| exact(x, t), kind)).collect();
    Ok(error_norm_2_1(&errs, dt))
}

/// `½‖u‖²`.
pub fn kinetic_energy(space: &TaylorHoodSpace, u: &[f64]) -> f64 {
    0.5 * field_norms(space, u).l2_sq
}

/// `‖∇·u‖`.
pub fn divergence_norm(space: &TaylorHoodSpace, u: &[f64]) -> f64 {
    field_norms(space, u).div_sq.sqrt()
}

/// `log2(e_coarse / e_fine)` between consecutive levels.
pub fn convergence_rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Spatial,
    Temporal,
}

/// Parameters shared by every run of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub scheme: SchemeName,
    pub expected_nu: f64,
    pub nu_spread: f64,
    pub epsilon: f64,
    pub ensemble_size: usize,
    pub perturbation: PerturbationMode,
    pub gamma: f64,
    pub mu: f64,
    pub t_end: f64,
    pub seed: u64,
    pub norm: NormKind,
    pub bootstrap: Bootstrap,
}

impl ConvergenceConfig {
    pub fn viscosity(&self) -> Result<ViscosityEnsemble> {
        sample_uniform_viscosity(self.expected_nu, self.nu_spread, self.ensemble_size, self.seed)
    }

    pub fn problem(&self, viscosity: &ViscosityEnsemble) -> Result<ManufacturedProblem> {
        let k = perturbation_coeffs(&PerturbationSpec {
            epsilon: self.epsilon,
            mode: self.perturbation,
            n: self.ensemble_size,
            seed: self.seed.wrapping_add(1),
        })?;
        let nu = viscosity.constants().ok_or_else(|| Error::invalid("manufactured runs need constant viscosities"))?;
        ManufacturedProblem::new(k, self.epsilon, nu)
    }
}

/// Outcome of one manufactured run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub cells_per_side: usize,
    pub h: f64,
    pub dt: f64,
    pub n_dof: usize,
    pub error: f64,
    pub stability: StabilityReport,
    pub trajectory: Trajectory,
    pub seconds: f64,
}

/// Runs the ensemble scheme on the manufactured problem on an `n×n` mesh.
pub fn manufactured_run(config: &ConvergenceConfig, cells_per_side: usize, dt: f64) -> Result<RunResult> {
    let start = Instant::now();
    let space = TaylorHoodSpace::new(unit_square_mesh(cells_per_side)?)?;
    let viscosity = config.viscosity()?;
    let problem = config.problem(&viscosity)?;
    let descriptor = SchemeDescriptor::from_name(config.scheme);
    let params = StepParams::new(dt, config.gamma, config.mu, config.t_end)?;
    let mut stepper = EnsembleStepper::new(&space, &problem, &viscosity, descriptor.clone(), params)?;
    let mut state = stepper.initial_state()?;
    let mut trajectory = Trajectory::new();
    trajectory.record(&space, &problem, &state);

    let amp = problem.mean_amplitude();
    let sol = problem.solution;
    let exact = |x: [f64; 2], t: f64| {
        let u = sol.velocity(x, t);
        let g = sol.gradient(x, t);
        ([amp * u[0], amp * u[1]], [[amp * g[0][0], amp * g[0][1]], [amp * g[1][0], amp * g[1][1]]])
    };
    let mut errors = Vec::new();
    let mut step_error = |state: &crate::ensemble::EnsembleState| {
        let mean = state.current_mean();
        errors.push(h1_error_sq(&space, &mean.values, |x| exact(x, state.time), config.norm));
    };

    let n_steps = params.n_steps();
    if descriptor.history_depth > 1 {
        stepper.bootstrap(&mut state, config.bootstrap)?;
        trajectory.record(&space, &problem, &state);
        step_error(&state);
    }
    while state.step < n_steps {
        stepper.advance(&mut state)?;
        trajectory.record(&space, &problem, &state);
        step_error(&state);
    }
    let error = error_norm_2_1(&errors, dt);
    let stability = stability_audit(&trajectory, &viscosity, &params, &descriptor, space.poincare_constant())?;
    Ok(RunResult {
        cells_per_side,
        h: std::f64::consts::SQRT_2 / cells_per_side as f64,
        dt,
        n_dof: space.n_total(),
        error,
        stability,
        trajectory,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Errors and rates over a sequence of refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub kind: StudyKind,
    pub runs: Vec<RunResult>,
    /// `rates[i]` compares runs `i` and `i+1`.
    pub rates: Vec<f64>,
}

impl ErrorReport {
    pub fn errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.error).collect()
    }

    /// CSV with columns `h,dt,dof,error,rate`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,dt,dof,error,rate\n");
        for (i, r) in self.runs.iter().enumerate() {
            let rate = if i == 0 { String::new() } else { format!("{:.4}", self.rates[i - 1]) };
            s.push_str(&format!("1/{},{:.6e},{},{:.6e},{}\n", r.cells_per_side, r.dt, r.n_dof, r.error, rate));
        }
        s
    }
}

/// Spatial study: fixed `dt`, meshes with `cells[i]` cells per side, each
/// twice the previous.
pub fn spatial_study(config: &ConvergenceConfig, cells: &[usize], dt: f64) -> Result<ErrorReport> {
    if cells.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("spatial levels must double"));
    }
    let runs = cells.iter().map(|&n| manufactured_run(config, n, dt)).collect::<Result<Vec<_>>>()?;
    let rates = convergence_rates(&runs.iter().map(|r| r.error).collect::<Vec<_>>());
    Ok(ErrorReport { kind: StudyKind::Spatial, runs, rates })
}

/// Temporal study: fixed mesh, `T/steps[i]` with doubling step counts.
pub fn temporal_study(config: &ConvergenceConfig, cells: usize, steps: &[usize]) -> Result<ErrorReport> {
    if steps.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("temporal levels must double"));
    }
    let runs = steps
        .iter()
        .map(|&m| manufactured_run(config, cells, config.t_end / m as f64))
        .collect::<Result<Vec<_>>>()?;
    let rates = convergence_rates(&runs.iter().map(|r| r.error).collect::<Vec<_>>());
    Ok(ErrorReport { kind: StudyKind::Temporal, runs, rates })
}
