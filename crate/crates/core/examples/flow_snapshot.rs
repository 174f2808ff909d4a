//! Advances a small ensemble through the stepper API directly and writes the
//! mean velocity to `snapshot.vtk`.

use std::path::Path;

use ensemble_eev::app::{emit_vtk, CavityProblem};
use ensemble_eev::ensemble::{mean_of, sample_uniform_viscosity};
use ensemble_eev::fem::TaylorHoodSpace;
use ensemble_eev::mesh::cavity_mesh;
use ensemble_eev::scheme::{Bootstrap, EnsembleStepper, SchemeDescriptor, StepParams};

fn main() -> ensemble_eev::Result<()> {
    let space = TaylorHoodSpace::new(cavity_mesh(12)?)?;
    let viscosity = sample_uniform_viscosity(1e-3, 0.2, 4, 1)?;
    let problem = CavityProblem { k: vec![-0.5, -0.1, 0.2, 0.6], epsilon: 0.01 };
    let params = StepParams::new(0.1, 100.0, 1.0, 2.0)?;
    let mut stepper = EnsembleStepper::new(&space, &problem, &viscosity, SchemeDescriptor::bdf2_eev(), params)?;
    let mut state = stepper.initial_state()?;
    stepper.bootstrap(&mut state, Bootstrap::BackwardEuler)?;
    while state.step < params.n_steps() {
        let r = stepper.advance(&mut state)?;
        println!("t = {:.2}  l_max = {:.3e}  solve {:.3}s", r.time, r.max_mixing_length, r.solve_secs);
    }
    emit_vtk(&space, &state.current_mean().values, &mean_of(&state.pressures).values, Path::new("snapshot.vtk"))
}
