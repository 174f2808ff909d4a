//! Sparse-grid nodes and weights and the random viscosity they sample.

use ensemble_eev::stochastics::{smolyak_grid, KlViscosity};

fn main() -> ensemble_eev::Result<()> {
    let grid = smolyak_grid(5, 1)?;
    let kl = KlViscosity::new(2e6, 0.01)?;
    print!("{}", grid.to_csv());
    for (i, y) in grid.nodes.iter().enumerate() {
        println!("node {i}: nu at the cavity centre {:.6e}", kl.eval([0.0, 0.0], y)?);
    }
    let second = grid.integrate(|y| y.iter().map(|v| v * v).sum());
    println!("E[|y|^2] = {second}");
    Ok(())
}
