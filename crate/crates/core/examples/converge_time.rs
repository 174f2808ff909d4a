//! Temporal convergence of both schemes on a 16×16 mesh.

use ensemble_eev::app::{convergence_config, Experiment, ExperimentConfig};
use ensemble_eev::scheme::{Bootstrap, SchemeName};
use ensemble_eev::verification::temporal_study;

fn main() -> ensemble_eev::Result<()> {
    for scheme in [SchemeName::BeEev, SchemeName::Bdf2Eev] {
        let mut c = ExperimentConfig::defaults(Experiment::ConvergeTime);
        c.scheme = scheme;
        c.bootstrap = Bootstrap::Exact;
        let r = temporal_study(&convergence_config(&c), 16, &[4, 8, 16, 32])?;
        println!("{scheme}");
        print!("{}", r.to_csv());
    }
    Ok(())
}
