use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{MatMut, Par};
use rayon::prelude::*;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

static SEQUENTIAL: Once = Once::new();

// Sequential kernels keep factorizations bitwise reproducible; concurrency
// comes from solving independent right-hand sides in parallel.
fn force_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Column block of right-hand sides sharing one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBlock {
    pub columns: Vec<Vec<f64>>,
}

impl RhsBlock {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        RhsBlock { columns }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

/// Symbolic analysis (fill-reducing ordering and elimination structure) of
/// a sparsity pattern, reusable across numeric factorizations.
#[derive(Debug, Clone)]
pub struct SymbolicFactorization {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    transpose: Vec<usize>,
    pattern: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
}

impl SymbolicFactorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        force_sequential();
        let transpose = a.transpose_positions()?;
        // structural symmetry: the CSC pattern equals the CSR pattern
        let pattern = SymbolicSparseColMat::new_checked(
            a.dim(),
            a.dim(),
            a.row_ptr().to_vec(),
            None,
            a.col_idx().to_vec(),
        );
        let symbolic = SymbolicLu::try_new(pattern.as_ref())
            .map_err(|e| Error::InvalidState(format!("symbolic LU failed: {e:?}")))?;
        Ok(SymbolicFactorization {
            n: a.dim(),
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
            transpose,
            pattern,
            symbolic,
        })
    }

    pub fn matches(&self, a: &SparseMatrix) -> bool {
        a.dim() == self.n && a.row_ptr() == self.row_ptr.as_slice() && a.col_idx() == self.col_idx.as_slice()
    }
}

/// Sparse LU factorization with partial pivoting, reusable for any number
/// of solves. Solves take `&self` and may run concurrently.
#[derive(Debug)]
pub struct Factorization {
    n: usize,
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
}

const REFINEMENT_SWEEPS: usize = 3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Factorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let sym = SymbolicFactorization::new(a)?;
        Self::with_symbolic(&sym, a)
    }

    /// Numeric factorization reusing a symbolic analysis of the same pattern.
    pub fn with_symbolic(sym: &SymbolicFactorization, a: &SparseMatrix) -> Result<Self> {
        if !sym.matches(a) {
            return Err(Error::invalid("matrix pattern differs from the symbolic analysis"));
        }
        let csc_values: Vec<f64> = sym.transpose.iter().map(|&p| a.values[p]).collect();
        let mat = SparseColMatRef::new(sym.pattern.as_ref(), &csc_values);
        let lu = Lu::try_new_with_symbolic(sym.symbolic.clone(), mat).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularMatrix { pivot: index },
            LuError::Generic(g) => Error::InvalidState(format!("LU failed: {g:?}")),
        })?;
        let f = Factorization { n: a.dim(), lu, matrix: a.clone() };
        f.check_pivots(a)?;
        Ok(f)
    }

    // A zero pivot shows up as non-finite entries when solving against a
    // right-hand side in the range of `a`.
    fn check_pivots(&self, a: &SparseMatrix) -> Result<()> {
        let probe: Vec<f64> = (0..self.n).map(|i| 1.0 + i as f64 / self.n as f64).collect();
        let x = self.solve(&a.matvec(&probe))?;
        match x.iter().position(|v| !v.is_finite()) {
            Some(pivot) => Err(Error::SingularMatrix { pivot }),
            None => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn raw_solve(&self, x: &mut [f64]) {
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(x, self.n, 1));
    }

    /// Direct solve followed by a few sweeps of iterative refinement, which
    /// recovers digits lost to pivoting on badly scaled systems.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.len() });
        }
        let mut x = b.to_vec();
        self.raw_solve(&mut x);
        let mut r = vec![0.0; self.n];
        let mut last = f64::INFINITY;
        for _ in 0..REFINEMENT_SWEEPS {
            self.matrix.matvec_into(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            let rn = norm(&r);
            if !(rn > 0.0 && rn < 0.5 * last) || !rn.is_finite() {
                break;
            }
            last = rn;
            self.raw_solve(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        }
        Ok(x)
    }

    /// Solves every column of `rhs` against this factorization. Columns are
    /// independent and processed in parallel.
    pub fn solve_block(&self, rhs: &RhsBlock) -> Result<Vec<Vec<f64>>> {
        if let Some(bad) = rhs.columns.iter().find(|c| c.len() != self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, found: bad.len() });
        }
        rhs.columns.par_iter().map(|b| self.solve(b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.matvec(x);
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        let mut diag = vec![1.0; n];
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if i != j {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
        }
        t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        let f = Factorization::new(&SparseMatrix::identity(5)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(f.solve(&b).unwrap(), b);
        let a = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let x = Factorization::new(&a).unwrap().solve(&[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_spd(50, &mut rng);
        let f = Factorization::new(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = f.solve(&b).unwrap();
        assert!(rel_residual(&a, &x, &b) <= 1e-10);
    }

    #[test]
    fn block_solves_and_inverse() {
        let a = SparseMatrix::from_dense(&[
            vec![4.0, -1.0, 0.0, 0.5],
            vec![-1.0, 4.0, -1.0, 0.0],
            vec![0.0, 2.0, 3.0, -1.0],
            vec![1.0, 0.0, -1.0, 5.0],
        ])
        .unwrap();
        let f = Factorization::new(&a).unwrap();
        let eye: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|k| (i == k) as u8 as f64).collect()).collect();
        let x = f.solve_block(&RhsBlock::new(eye.clone())).unwrap();
        for (i, col) in x.iter().enumerate() {
            let ax = a.matvec(col);
            for k in 0..4 {
                assert!((ax[k] - eye[i][k]).abs() < 1e-13);
            }
        }
        let same = f.solve_block(&RhsBlock::new(vec![eye[1].clone(), eye[1].clone()])).unwrap();
        assert_eq!(same[0], same[1]);
        let bad = f.solve_block(&RhsBlock::new(vec![vec![1.0; 3]]));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn many_rhs_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_spd(200, &mut rng);
        let f = Factorization::new(&a).unwrap();
        let cols: Vec<Vec<f64>> =
            (0..20).map(|_| (0..200).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let x = f.solve_block(&RhsBlock::new(cols.clone())).unwrap();
        for (xc, bc) in x.iter().zip(&cols) {
            assert!(rel_residual(&a, xc, bc) <= 1e-9);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(Factorization::new(&a), Err(Error::SingularMatrix { .. })));
        let z = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(Factorization::new(&z), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn reuse_is_bitwise_identical_to_fresh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(80, &mut rng);
        let cols: Vec<Vec<f64>> =
            (0..6).map(|_| (0..80).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let shared = Factorization::new(&a).unwrap().solve_block(&RhsBlock::new(cols.clone())).unwrap();
        for (b, x) in cols.iter().zip(&shared) {
            let fresh = Factorization::new(&a).unwrap().solve(b).unwrap();
            assert_eq!(&fresh, x);
        }
    }

    #[test]
    fn symbolic_reuse_requires_same_pattern() {
        let a = SparseMatrix::identity(3);
        let sym = SymbolicFactorization::new(&a).unwrap();
        let other = SparseMatrix::from_dense(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(Factorization::with_symbolic(&sym, &other).is_err());
        let mut scaled = a.clone();
        scaled.values.iter_mut().for_each(|v| *v = 2.0);
        let x = Factorization::with_symbolic(&sym, &scaled).unwrap().solve(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }
}
