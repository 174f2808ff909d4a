use std::time::Instant;

use rayon::prelude::*;

use super::lu::{Factorization, RhsBlock, SymbolicFactorization};
use super::sparse::SparseMatrix;
use crate::error::Result;

/// Wall-clock seconds for the two solution strategies over the same systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    /// One factorization per system, shared by every right-hand side.
    pub t_shared: f64,
    /// One factorization per right-hand side.
    pub t_standard: f64,
    pub n_dof: usize,
    pub n_rhs: usize,
}

/// Times shared versus per-realization factorization on each system in
/// `systems` (one per time step). Both strategies see identical inputs and
/// the same worker pool.
pub fn timing_compare(systems: &[(SparseMatrix, RhsBlock)]) -> Result<TimingReport> {
    let n_dof = systems.first().map_or(0, |(a, _)| a.dim());
    let n_rhs = systems.first().map_or(0, |(_, b)| b.n_columns());

    let start = Instant::now();
    for (a, rhs) in systems {
        let sym = SymbolicFactorization::new(a)?;
        Factorization::with_symbolic(&sym, a)?.solve_block(rhs)?;
    }
    let t_shared = start.elapsed().as_secs_f64();

    let start = Instant::now();
    for (a, rhs) in systems {
        let sym = SymbolicFactorization::new(a)?;
        rhs.columns
            .par_iter()
            .map(|b| Factorization::with_symbolic(&sym, a)?.solve(b))
            .collect::<Result<Vec<_>>>()?;
    }
    let t_standard = start.elapsed().as_secs_f64();

    Ok(TimingReport { t_shared, t_standard, n_dof, n_rhs })
}
