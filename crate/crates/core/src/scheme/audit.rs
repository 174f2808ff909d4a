use super::descriptor::{SchemeDescriptor, StepParams};
use super::stepper::Trajectory;
use crate::ensemble::ViscosityEnsemble;
use crate::error::{Error, Result};

/// Both sides of the energy stability bound for one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl StabilityCheck {
    /// `lhs ≤ rhs` up to relative slack `rel`.
    pub fn holds(&self, rel: f64) -> bool {
        self.lhs <= self.rhs + rel * self.rhs.abs().max(self.lhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub checks: Vec<StabilityCheck>,
}

impl StabilityReport {
    pub fn all_hold(&self, rel: f64) -> bool {
        self.checks.iter().all(|c| c.holds(rel))
    }
}

/// Evaluates the stability bound of `descriptor` along a recorded
/// trajectory, bounding `‖f‖_{−1}` by `poincare · ‖f‖`.
///
/// The trajectory must start at level 0 (the initial condition) and hold
/// every level up to the final step.
pub fn stability_audit(
    trajectory: &Trajectory,
    viscosity: &ViscosityEnsemble,
    params: &StepParams,
    descriptor: &SchemeDescriptor,
    poincare: f64,
) -> Result<StabilityReport> {
    let m = trajectory.n_levels().saturating_sub(1);
    if m < descriptor.history_depth {
        return Err(Error::invalid("trajectory too short for the stability bound"));
    }
    let dt = params.dt;
    let gamma = params.gamma;
    let nu_min = viscosity.nu_bar_min();
    let cp2 = poincare * poincare;
    let n = |k: usize, j: usize| trajectory.norms[k][j];
    let checks = (0..trajectory.n_realizations())
        .map(|j| match descriptor.history_depth {
            1 => {
                let alpha = viscosity.alpha(j);
                let grad: f64 = (1..=m).map(|k| n(k, j).grad_sq).sum();
                let div: f64 = (1..=m).map(|k| n(k, j).div_sq).sum();
                let force: f64 = (1..=m).map(|k| trajectory.forcing_sq[k][j]).sum();
                StabilityCheck {
                    lhs: n(m, j).l2_sq + alpha * dt * grad + 2.0 * gamma * dt * div,
                    rhs: n(0, j).l2_sq + nu_min * dt * n(0, j).grad_sq + 2.0 * dt / alpha * cp2 * force,
                }
            }
            _ => {
                let at = viscosity.alpha_tilde(j);
                let grad: f64 = (2..=m).map(|k| n(k, j).grad_sq).sum();
                let div: f64 = (2..=m).map(|k| n(k, j).div_sq).sum();
                let force: f64 = (2..=m).map(|k| trajectory.forcing_sq[k][j]).sum();
                StabilityCheck {
                    lhs: n(m, j).l2_sq + trajectory.extrap_sq[m][j] + 2.0 * at * dt * grad + 4.0 * gamma * dt * div,
                    rhs: n(1, j).l2_sq
                        + trajectory.extrap_sq[1][j]
                        + 2.0 * nu_min * dt * n(1, j).grad_sq
                        + 2.0 * dt * (nu_min - 2.0 * viscosity.sup_prime(j)) * n(0, j).grad_sq
                        + 4.0 * dt / at * cp2 * force,
                }
            }
        })
        .collect();
    Ok(StabilityReport { checks })
}
