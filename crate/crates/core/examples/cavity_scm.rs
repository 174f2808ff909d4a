//! Lid-driven cavity with a random viscosity field sampled at sparse-grid
//! nodes; prints the collocation estimate of the expected energy.

use ensemble_eev::app::{run_cavity, Experiment, ExperimentConfig};

fn main() -> ensemble_eev::Result<()> {
    let mut c = ExperimentConfig::defaults(Experiment::CavityScm);
    c.t_end = 10.0;
    let (_, cav) = run_cavity(&c)?;
    for (t, e) in cav.run.trajectory.times.iter().zip(&cav.expected_energy) {
        println!("{t:6.2} {e:.6e}");
    }
    Ok(())
}
