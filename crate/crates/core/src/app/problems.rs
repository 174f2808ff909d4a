use crate::mesh::{BoundaryMarker, CHANNEL_HEIGHT};
use crate::scheme::FlowProblem;

/// Channel over a step with a noisy parabolic profile at inlet and outlet,
/// also used as the initial velocity. No body force.
#[derive(Debug, Clone, PartialEq)]
pub struct StepChannelProblem {
    pub k: Vec<f64>,
    pub epsilon: f64,
    /// Flip the profile sign so the flow runs in +x₁.
    pub negate_inflow: bool,
}

impl StepChannelProblem {
    /// `(1 + k_j ε) x₂(x₂ − 10)/25`, optionally negated.
    pub fn profile(&self, j: usize, x: [f64; 2]) -> [f64; 2] {
        let sign = if self.negate_inflow { -1.0 } else { 1.0 };
        let h = CHANNEL_HEIGHT;
        [sign * (1.0 + self.k[j] * self.epsilon) * x[1] * (x[1] - h) / 25.0, 0.0]
    }
}

impl FlowProblem for StepChannelProblem {
    fn n_realizations(&self) -> usize {
        self.k.len()
    }

    fn forcing(&self, _j: usize, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn has_forcing(&self) -> bool {
        false
    }

    fn boundary_value(&self, j: usize, marker: BoundaryMarker, x: [f64; 2], _t: f64) -> Option<[f64; 2]> {
        match marker {
            BoundaryMarker::DirichletWall => Some([0.0; 2]),
            BoundaryMarker::DirichletInflow | BoundaryMarker::DirichletOutflow => Some(self.profile(j, x)),
            BoundaryMarker::DirichletLid => None,
        }
    }

    fn initial_velocity(&self, j: usize, x: [f64; 2]) -> [f64; 2] {
        self.profile(j, x)
    }
}

/// Regularized lid-driven cavity on `(−1,1)²` starting from rest.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityProblem {
    pub k: Vec<f64>,
    pub epsilon: f64,
}

impl FlowProblem for CavityProblem {
    fn n_realizations(&self) -> usize {
        self.k.len()
    }

    fn forcing(&self, _j: usize, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn has_forcing(&self) -> bool {
        false
    }

    fn boundary_value(&self, j: usize, marker: BoundaryMarker, x: [f64; 2], _t: f64) -> Option<[f64; 2]> {
        match marker {
            BoundaryMarker::DirichletWall => Some([0.0; 2]),
            BoundaryMarker::DirichletLid => {
                let s = 1.0 - x[0] * x[0];
                Some([(1.0 + self.k[j] * self.epsilon) * s * s, 0.0])
            }
            _ => None,
        }
    }

    fn initial_velocity(&self, _j: usize, _x: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::TaylorHoodSpace;
    use crate::mesh::{cavity_mesh, step_channel_mesh};

    #[test]
    fn lid_vanishes_at_corners() {
        let p = CavityProblem { k: vec![0.5], epsilon: 0.01 };
        for x in [[-1.0, 1.0], [1.0, 1.0]] {
            assert_eq!(p.boundary_value(0, BoundaryMarker::DirichletLid, x, 0.0), Some([0.0, 0.0]));
        }
        let s = TaylorHoodSpace::new(cavity_mesh(4).unwrap()).unwrap();
        assert!(s.apply_dirichlet(|m, x, t| p.boundary_value(0, m, x, t), 0.0).is_ok());
    }

    #[test]
    fn inflow_profile_values() {
        let p = StepChannelProblem { k: vec![0.3], epsilon: 1e-3, negate_inflow: false };
        let v = p.boundary_value(0, BoundaryMarker::DirichletInflow, [0.0, 5.0], 0.0).unwrap();
        assert!((v[0] - (1.0 + 0.3e-3) * 5.0 * -5.0 / 25.0).abs() < 1e-15);
        let n = StepChannelProblem { negate_inflow: true, ..p.clone() };
        assert_eq!(n.profile(0, [0.0, 5.0])[0], -v[0]);
        let s = TaylorHoodSpace::new(step_channel_mesh(1).unwrap()).unwrap();
        assert!(s.apply_dirichlet(|m, x, t| p.boundary_value(0, m, x, t), 0.0).is_ok());
    }
}
