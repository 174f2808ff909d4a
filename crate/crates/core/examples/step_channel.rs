//! Short step-channel run with a grad-div sweep; prints the mean energy and
//! the divergence accumulated by each realization.

use ensemble_eev::app::{run_step_channel, Experiment, ExperimentConfig};

fn main() -> ensemble_eev::Result<()> {
    let mut c = ExperimentConfig::defaults(Experiment::StepChannel);
    c.mesh_level = 1;
    c.ensemble_size = 5;
    c.t_end = 10.0;
    c.gammas = vec![1.0, 100.0];
    let (space, runs) = run_step_channel(&c)?;
    println!("{} dof per realization", space.n_total());
    for run in &runs {
        let e = run.trajectory.mean_energy.last().copied().unwrap_or(0.0);
        let sums: Vec<String> = run.divergence_sums(c.dt).iter().map(|s| format!("{s:.3e}")).collect();
        println!("gamma {:>6}: mean energy {e:.5e}, divergence [{}]", run.gamma, sums.join(" "));
    }
    Ok(())
}
