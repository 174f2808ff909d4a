use crate::mesh::BoundaryMarker;

/// Data of one ensemble of flow problems: forcing, boundary values and
/// initial velocities for each realization.
pub trait FlowProblem: Sync {
    fn n_realizations(&self) -> usize;

    fn forcing(&self, j: usize, x: [f64; 2], t: f64) -> [f64; 2];

    /// Whether `forcing` can be nonzero; problems without body force skip
    /// its quadrature.
    fn has_forcing(&self) -> bool {
        true
    }

    /// Dirichlet value on a boundary segment, or `None` if the problem has
    /// no data for `marker`.
    fn boundary_value(&self, j: usize, marker: BoundaryMarker, x: [f64; 2], t: f64) -> Option<[f64; 2]>;

    fn initial_velocity(&self, j: usize, x: [f64; 2]) -> [f64; 2];

    /// Analytic velocity, when known.
    fn exact_velocity(&self, _j: usize, _x: [f64; 2], _t: f64) -> Option<[f64; 2]> {
        None
    }
}
