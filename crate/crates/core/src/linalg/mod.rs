//! Sparse storage and direct solves shared by all realizations of a step.

mod lu;
mod sparse;
mod timing;

pub use lu::{Factorization, RhsBlock, SymbolicFactorization};
pub use sparse::SparseMatrix;
pub use timing::{timing_compare, TimingReport};

/// Factorizes `a` once and solves all columns of `rhs` against it.
pub fn solve_block(a: &SparseMatrix, rhs: &RhsBlock) -> crate::Result<Vec<Vec<f64>>> {
    Factorization::new(a)?.solve_block(rhs)
}
