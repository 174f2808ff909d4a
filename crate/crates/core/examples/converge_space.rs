//! Spatial convergence of the backward-Euler ensemble scheme on the
//! manufactured solution. Pass mesh sizes as arguments, e.g. `2 4 8 16 32`.

use ensemble_eev::app::{convergence_config, Experiment, ExperimentConfig};
use ensemble_eev::verification::spatial_study;

fn main() -> ensemble_eev::Result<()> {
    let c = ExperimentConfig::defaults(Experiment::ConvergeSpace);
    let cells: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cells = if cells.is_empty() { c.levels.clone() } else { cells };
    let report = spatial_study(&convergence_config(&c), &cells, c.dt)?;
    print!("{}", report.to_csv());
    Ok(())
}
