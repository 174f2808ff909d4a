//! One shared factorization per step against one per realization.

use ensemble_eev::app::{run_timing, Experiment, ExperimentConfig};

fn main() -> ensemble_eev::Result<()> {
    let c = ExperimentConfig::defaults(Experiment::TimingCompare);
    let r = run_timing(&c)?;
    println!("{} dof, {} right-hand sides", r.linear.n_dof, r.linear.n_rhs);
    println!("linear solves: shared {:.3}s, standard {:.3}s", r.linear.t_shared, r.linear.t_standard);
    println!("full steps:    shared {:.3}s, standard {:.3}s", r.scheme_shared, r.scheme_standard);
    Ok(())
}
