use std::time::Instant;

use rayon::prelude::*;

use super::descriptor::{SchemeDescriptor, StepParams};
use super::forms::advect;
use super::problem::FlowProblem;
use crate::ensemble::{mixing_length, EnsembleState, MixingLengthField, ViscosityEnsemble};
use crate::error::{Error, Result};
use crate::fem::{ConstraintValues, FieldCoefficients, QpValues, TaylorHoodSpace};
use crate::linalg::{RhsBlock, SparseMatrix};

const NLOC: usize = 22;
const UNUSED: usize = usize::MAX;

/// Sparsity pattern of the saddle-point system and the map from local cell
/// entries to storage positions.
#[derive(Debug, Clone)]
pub struct SystemLayout {
    pattern: SparseMatrix,
    positions: Vec<usize>,
    constrained: Vec<bool>,
}

impl SystemLayout {
    pub fn new(space: &TaylorHoodSpace) -> Result<Self> {
        let n = space.n_total();
        let nvel = space.n_velocity();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in 0..space.mesh.n_cells() {
            let d = space.cell_dofs(c);
            for (a, &i) in d.iter().enumerate() {
                for (b, &k) in d.iter().enumerate() {
                    if a < 18 || b < 18 {
                        rows[i].push(k);
                    }
                }
            }
        }
        for (i, r) in rows.iter_mut().enumerate().skip(nvel) {
            r.push(i);
        }
        let pattern = SparseMatrix::from_rows(n, rows)?;
        let mut positions = vec![UNUSED; space.mesh.n_cells() * NLOC * NLOC];
        for c in 0..space.mesh.n_cells() {
            let d = space.cell_dofs(c);
            for a in 0..NLOC {
                for b in 0..NLOC {
                    if a < 18 || b < 18 {
                        positions[(c * NLOC + a) * NLOC + b] = pattern.position(d[a], d[b]).expect("entry in pattern");
                    }
                }
            }
        }
        let mut constrained = vec![false; n];
        for &dof in space.dirichlet_dofs() {
            constrained[dof] = true;
        }
        constrained[space.pinned_pressure_dof()] = true;
        Ok(SystemLayout { pattern, positions, constrained })
    }

    pub fn pattern(&self) -> &SparseMatrix {
        &self.pattern
    }

    /// Dirichlet velocity DOFs plus the pinned pressure DOF.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }
}

/// Cell contribution of
/// `m(u,χ) + b*(w,u,χ) + (ν∇u,∇χ) + γ(∇·u,∇·χ) − (p,∇·χ) + (∇·u,q)`.
fn local_matrix(qps: &[QpValues], conv: &[[f64; 2]], visc: &[f64], mass: f64, gamma: f64) -> [f64; NLOC * NLOC] {
    let mut k = [0.0; NLOC * NLOC];
    for (iq, q) in qps.iter().enumerate() {
        let w = conv[iq];
        let nu = visc[iq] * q.jxw;
        let m = mass * q.jxw;
        let g = gamma * q.jxw;
        let mut wgrad = [0.0; 9];
        for b in 0..9 {
            wgrad[b] = w[0] * q.dphi[b][0] + w[1] * q.dphi[b][1];
        }
        for a in 0..9 {
            let (pa, da) = (q.phi[a], q.dphi[a]);
            for b in 0..9 {
                let (pb, db) = (q.phi[b], q.dphi[b]);
                let v = m * pa * pb
                    + nu * (da[0] * db[0] + da[1] * db[1])
                    + 0.5 * q.jxw * (wgrad[b] * pa - wgrad[a] * pb);
                k[a * NLOC + b] += v;
                k[(9 + a) * NLOC + 9 + b] += v;
                for dc in 0..2 {
                    for cc in 0..2 {
                        k[(9 * dc + a) * NLOC + 9 * cc + b] += g * da[dc] * db[cc];
                    }
                }
            }
            for p in 0..4 {
                let ps = q.psi[p] * q.jxw;
                for d in 0..2 {
                    k[(9 * d + a) * NLOC + 18 + p] -= ps * da[d];
                    k[(18 + p) * NLOC + 9 * d + a] += ps * da[d];
                }
            }
        }
    }
    k
}

/// Assembles the unconstrained operator with convecting field `conv(x_q)`
/// and viscosity `visc(x_q)` given at every standard quadrature point.
pub fn assemble_operator(
    space: &TaylorHoodSpace,
    layout: &SystemLayout,
    conv: &[[f64; 2]],
    visc: &[f64],
    mass: f64,
    gamma: f64,
) -> SparseMatrix {
    let cache = space.quadrature();
    let nq = cache.n_qp;
    let locals: Vec<[f64; NLOC * NLOC]> = (0..space.mesh.n_cells())
        .into_par_iter()
        .map(|c| local_matrix(cache.cell(c), &conv[c * nq..(c + 1) * nq], &visc[c * nq..(c + 1) * nq], mass, gamma))
        .collect();
    let mut a = layout.pattern.clone();
    for (c, k) in locals.iter().enumerate() {
        let pos = &layout.positions[c * NLOC * NLOC..(c + 1) * NLOC * NLOC];
        for (p, v) in pos.iter().zip(k) {
            if *p != UNUSED {
                a.values[*p] += v;
            }
        }
    }
    a
}

/// Values of a velocity field at every standard quadrature point.
pub fn velocity_at_points(space: &TaylorHoodSpace, u: &[f64]) -> Vec<[f64; 2]> {
    let cache = space.quadrature();
    let mut out = Vec::with_capacity(cache.n_points());
    for c in 0..space.mesh.n_cells() {
        for q in cache.cell(c) {
            out.push(space.eval_velocity(u, c, q).0);
        }
    }
    out
}

/// Right-hand side data of one realization.
struct RhsTerms<'a> {
    /// `Σ_k lag_k u^{n-k}`, divided by Δt when integrated.
    lag: FieldCoefficients,
    /// Extrapolated velocity and fluctuation for the explicit terms; absent
    /// for the single-realization scheme.
    explicit: Option<(&'a FieldCoefficients, &'a FieldCoefficients)>,
}

fn assemble_rhs(
    space: &TaylorHoodSpace,
    problem: &dyn FlowProblem,
    viscosity: &ViscosityEnsemble,
    j: usize,
    t: f64,
    dt: f64,
    terms: &RhsTerms,
) -> Vec<f64> {
    let cache = space.quadrature();
    let nq = cache.n_qp;
    let nv = space.n_vnodes();
    let mut b = vec![0.0; space.n_total()];
    let forced = problem.has_forcing();
    for c in 0..space.mesh.n_cells() {
        let nodes = space.cell_vnodes(c);
        let mut local = [[0.0; 9]; 2];
        for (iq, q) in cache.cell(c).iter().enumerate() {
            let (lag, _) = space.eval_velocity(&terms.lag.values, c, q);
            let mut f = if forced { problem.forcing(j, q.x, t) } else { [0.0; 2] };
            f[0] += lag[0] / dt;
            f[1] += lag[1] / dt;
            match terms.explicit {
                None => {
                    for a in 0..9 {
                        for d in 0..2 {
                            local[d][a] += f[d] * q.phi[a] * q.jxw;
                        }
                    }
                }
                Some((ext, fl)) => {
                    let (uv, ug) = space.eval_velocity(&ext.values, c, q);
                    let (wv, _) = space.eval_velocity(&fl.values, c, q);
                    let nup = viscosity.nu_prime(j, c * nq + iq);
                    let conv = advect(wv, ug);
                    for a in 0..9 {
                        let wa = wv[0] * q.dphi[a][0] + wv[1] * q.dphi[a][1];
                        for d in 0..2 {
                            let visc = ug[d][0] * q.dphi[a][0] + ug[d][1] * q.dphi[a][1];
                            local[d][a] += q.jxw
                                * ((f[d] - 0.5 * conv[d]) * q.phi[a] + 0.5 * wa * uv[d] - nup * visc);
                        }
                    }
                }
            }
        }
        for a in 0..9 {
            b[nodes[a]] += local[0][a];
            b[nv + nodes[a]] += local[1][a];
        }
    }
    b
}

/// Moves known boundary values to the right-hand side and sets the
/// constrained rows to the prescribed values.
fn lift(space: &TaylorHoodSpace, a: &SparseMatrix, g: &ConstraintValues, b: &mut [f64]) {
    let mut full = vec![0.0; space.n_total()];
    for (&d, &v) in space.dirichlet_dofs().iter().zip(&g.values) {
        full[d] = v;
    }
    let ag = a.matvec(&full);
    for (bi, x) in b.iter_mut().zip(&ag) {
        *bi -= x;
    }
    for (&d, &v) in space.dirichlet_dofs().iter().zip(&g.values) {
        b[d] = v;
    }
    b[space.pinned_pressure_dof()] = 0.0;
}

/// One step's shared matrix, realization right-hand sides, and the eddy
/// viscosity that entered the matrix.
#[derive(Debug, Clone)]
pub struct StepSystem {
    pub matrix: SparseMatrix,
    pub rhs: RhsBlock,
    pub mixing: MixingLengthField,
    pub constraints: Vec<ConstraintValues>,
    pub assembly_secs: f64,
}

/// Assembles linear systems of the ensemble scheme over one space.
pub struct Assembler<'a> {
    pub space: &'a TaylorHoodSpace,
    pub layout: SystemLayout,
    pub problem: &'a dyn FlowProblem,
    pub viscosity: &'a ViscosityEnsemble,
}

impl<'a> Assembler<'a> {
    pub fn new(space: &'a TaylorHoodSpace, problem: &'a dyn FlowProblem, viscosity: &'a ViscosityEnsemble) -> Result<Self> {
        if problem.n_realizations() != viscosity.n_realizations() {
            return Err(Error::DimensionMismatch {
                expected: problem.n_realizations(),
                found: viscosity.n_realizations(),
            });
        }
        let n = space.quadrature().n_points();
        if !viscosity.is_constant() && viscosity.n_points() != n {
            return Err(Error::DimensionMismatch { expected: n, found: viscosity.n_points() });
        }
        Ok(Assembler { space, layout: SystemLayout::new(space)?, problem, viscosity })
    }

    pub fn constraints(&self, j: usize, t: f64) -> Result<ConstraintValues> {
        self.space.apply_dirichlet(|m, x, t| self.problem.boundary_value(j, m, x, t), t)
    }

    fn check_state(&self, state: &EnsembleState, descriptor: &SchemeDescriptor) -> Result<()> {
        if state.n_realizations() != self.problem.n_realizations() {
            return Err(Error::DimensionMismatch {
                expected: self.problem.n_realizations(),
                found: state.n_realizations(),
            });
        }
        if state.depth() < descriptor.history_depth {
            return Err(Error::InvalidState(format!(
                "{} needs {} history levels, state has {}",
                descriptor.name,
                descriptor.history_depth,
                state.depth()
            )));
        }
        Ok(())
    }

    fn lag_field(state: &EnsembleState, j: usize, descriptor: &SchemeDescriptor) -> FieldCoefficients {
        let terms: Vec<(f64, &FieldCoefficients)> =
            descriptor.lag_rhs_coeffs.iter().enumerate().map(|(k, &c)| (c, &state.levels[k][j])).collect();
        FieldCoefficients::combine(&terms)
    }

    /// Shared matrix and one right-hand side per realization for the step
    /// from `state.time` to `state.time + dt`.
    pub fn assemble_step_system(
        &self,
        state: &EnsembleState,
        descriptor: &SchemeDescriptor,
        params: &StepParams,
    ) -> Result<StepSystem> {
        self.check_state(state, descriptor)?;
        let start = Instant::now();
        let nj = state.n_realizations();
        let t_next = state.time + params.dt;
        let extrap: Vec<FieldCoefficients> =
            (0..nj).map(|j| state.extrapolation(j, descriptor)).collect::<Result<_>>()?;
        let mean = crate::ensemble::mean_of(&extrap);
        let fluct = state.fluctuations(descriptor)?;
        let mixing = mixing_length(self.space, &fluct, params.mu, params.dt);

        let conv = velocity_at_points(self.space, &mean.values);
        let visc: Vec<f64> =
            mixing.nu_t.iter().enumerate().map(|(q, nt)| self.viscosity.nu_bar(q) + 2.0 * nt).collect();
        let mut matrix =
            assemble_operator(self.space, &self.layout, &conv, &visc, descriptor.beta / params.dt, params.gamma);

        let constraints: Vec<ConstraintValues> = (0..nj).map(|j| self.constraints(j, t_next)).collect::<Result<_>>()?;
        let columns: Vec<Vec<f64>> = (0..nj)
            .into_par_iter()
            .map(|j| {
                let terms = RhsTerms { lag: Self::lag_field(state, j, descriptor), explicit: Some((&extrap[j], &fluct[j])) };
                let mut b = assemble_rhs(self.space, self.problem, self.viscosity, j, t_next, params.dt, &terms);
                lift(self.space, &matrix, &constraints[j], &mut b);
                b
            })
            .collect();
        matrix.constrain_identity(&self.layout.constrained);
        Ok(StepSystem {
            matrix,
            rhs: RhsBlock::new(columns),
            mixing,
            constraints,
            assembly_secs: start.elapsed().as_secs_f64(),
        })
    }

    /// Matrix and right-hand side of realization `j` solved on its own:
    /// linearized BDF step convected by `U_j` with viscosity `ν_j` and no
    /// eddy viscosity.
    pub fn assemble_standard_system(
        &self,
        state: &EnsembleState,
        j: usize,
        descriptor: &SchemeDescriptor,
        params: &StepParams,
    ) -> Result<(SparseMatrix, Vec<f64>)> {
        self.check_state(state, descriptor)?;
        let t_next = state.time + params.dt;
        let ext = state.extrapolation(j, descriptor)?;
        let conv = velocity_at_points(self.space, &ext.values);
        let visc: Vec<f64> = (0..conv.len()).map(|q| self.viscosity.nu(j, q)).collect();
        let mut matrix =
            assemble_operator(self.space, &self.layout, &conv, &visc, descriptor.beta / params.dt, params.gamma);
        let terms = RhsTerms { lag: Self::lag_field(state, j, descriptor), explicit: None };
        let mut b = assemble_rhs(self.space, self.problem, self.viscosity, j, t_next, params.dt, &terms);
        lift(self.space, &matrix, &self.constraints(j, t_next)?, &mut b);
        matrix.constrain_identity(&self.layout.constrained);
        Ok((matrix, b))
    }
}
