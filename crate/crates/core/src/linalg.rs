//! Sparse symmetric solves for Newton steps and sensitivities.
//!
//! Matrices arrive as unsorted `(row, col, value)` entries of both triangles.
//! The lower triangle plus a diagonal shift `τ I` is factored with a sparse
//! Cholesky; the symbolic analysis is cached and reused while the sparsity
//! pattern is unchanged.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

/// Largest number of shift increases tried before giving up.
const MAX_SHIFT_TRIES: usize = 40;

static SEQUENTIAL: Once = Once::new();

/// Keeps dense kernels single threaded so results do not depend on the
/// thread pool; parallelism lives at the stencil and solve level instead.
fn sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// A factored system ready for repeated solves.
pub enum Factor {
    Cholesky { llt: Llt<usize, f64>, shift: f64 },
    Lu(Lu<usize, f64>),
}

impl Factor {
    /// Diagonal shift that was added before factoring (zero for LU).
    pub fn shift(&self) -> f64 {
        match self {
            Factor::Cholesky { shift, .. } => *shift,
            Factor::Lu(_) => 0.0,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = match self {
            Factor::Cholesky { llt, .. } => llt.solve(&b),
            Factor::Lu(lu) => lu.solve(&b),
        };
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Cholesky factorizer with a cached symbolic analysis.
#[derive(Default)]
pub struct SymmetricSolver {
    cache: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
}

/// Mean absolute diagonal entry, used to scale shifts.
pub fn diagonal_scale(n: usize, entries: &[(usize, usize, f64)]) -> f64 {
    let mut d = vec![0.0; n];
    for &(i, j, v) in entries {
        if i == j {
            d[i] += v;
        }
    }
    let s = d.iter().map(|v| v.abs()).sum::<f64>() / n.max(1) as f64;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn lower(n: usize, entries: &[(usize, usize, f64)], shift: f64) -> Result<SparseColMat<usize, f64>> {
    let mut t: Vec<Triplet<usize, usize, f64>> = entries.iter().filter(|e| e.0 >= e.1).map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    t.extend((0..n).map(|i| Triplet::new(i, i, shift)));
    SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::LinearSolve(format!("{e:?}")))
}

fn full(n: usize, entries: &[(usize, usize, f64)]) -> Result<SparseColMat<usize, f64>> {
    let mut t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    t.extend((0..n).map(|i| Triplet::new(i, i, 0.0)));
    SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::LinearSolve(format!("{e:?}")))
}

impl SymmetricSolver {
    pub fn new() -> Self {
        sequential();
        Self::default()
    }

    fn symbolic(&mut self, a: &SparseColMat<usize, f64>) -> Result<SymbolicLlt<usize>> {
        let s = a.symbolic();
        if let Some((cp, ri, sym)) = &self.cache {
            if cp.as_slice() == s.col_ptr() && ri.as_slice() == s.row_idx() {
                return Ok(sym.clone());
            }
        }
        let sym = SymbolicLlt::try_new(s, Side::Lower).map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        self.cache = Some((s.col_ptr().to_vec(), s.row_idx().to_vec(), sym.clone()));
        Ok(sym)
    }

    /// Cholesky of `A + τ I` for exactly the given shift.
    pub fn cholesky(&mut self, n: usize, entries: &[(usize, usize, f64)], shift: f64) -> Result<Factor> {
        let a = lower(n, entries, shift)?;
        let sym = self.symbolic(&a)?;
        let llt = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("matrix is not positive definite: {e:?}")))?;
        Ok(Factor::Cholesky { llt, shift })
    }

    /// Cholesky of `A + τ I` with the smallest `τ` in the sequence
    /// `first, 10·first, …` (or `0, floor, 10·floor, …` when `first` is zero)
    /// that makes the matrix positive definite.
    pub fn shifted_cholesky(&mut self, n: usize, entries: &[(usize, usize, f64)], first: f64, floor: f64) -> Result<Factor> {
        let mut tau = first;
        for _ in 0..MAX_SHIFT_TRIES {
            if let Ok(f) = self.cholesky(n, entries, tau) {
                return Ok(f);
            }
            tau = if tau <= 0.0 { floor } else { (tau * 10.0).max(floor) };
        }
        Err(Error::LinearSolve(format!("no positive definite shift found up to {tau:.3e}")))
    }
}

/// Factors a symmetric matrix as is: Cholesky when positive definite,
/// otherwise LU. Returns whether the fallback was needed.
pub fn factor_exact(solver: &mut SymmetricSolver, n: usize, entries: &[(usize, usize, f64)]) -> Result<(Factor, bool)> {
    if let Ok(f) = solver.cholesky(n, entries, 0.0) {
        return Ok((f, false));
    }
    let a = full(n, entries)?;
    let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    Ok((Factor::Lu(lu), true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(entries: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for &(i, j, v) in entries {
            out.push((i, j, v));
            if i != j {
                out.push((j, i, v));
            }
        }
        out
    }

    fn apply(n: usize, entries: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; n];
        for &(i, j, v) in entries {
            y[i] += v * x[j];
        }
        y
    }

    #[test]
    fn solves_positive_definite_system() {
        let e = both(&[(0, 0, 4.0), (1, 1, 3.0), (2, 2, 2.0), (1, 0, 1.0), (2, 1, -0.5)]);
        let mut s = SymmetricSolver::new();
        let f = s.cholesky(3, &e, 0.0).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let r = apply(3, &e, &x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let e = vec![(0, 0, 1.0), (0, 0, 1.0), (1, 1, 2.0)];
        let f = SymmetricSolver::new().cholesky(2, &e, 0.0).unwrap();
        let x = f.solve(&[2.0, 2.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_needs_shift() {
        let e = both(&[(0, 0, 1.0), (1, 1, -1.0)]);
        let mut s = SymmetricSolver::new();
        assert!(s.cholesky(2, &e, 0.0).is_err());
        let f = s.shifted_cholesky(2, &e, 0.0, 1e-3).unwrap();
        assert!(f.shift() > 1.0);
        let (g, fallback) = factor_exact(&mut s, 2, &e).unwrap();
        assert!(fallback);
        let x = g.solve(&[1.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn symbolic_analysis_is_reused() {
        let e = both(&[(0, 0, 2.0), (1, 1, 2.0), (1, 0, 1.0)]);
        let mut s = SymmetricSolver::new();
        s.cholesky(2, &e, 0.0).unwrap();
        let first = s.cache.as_ref().unwrap().0.clone();
        s.cholesky(2, &e, 0.5).unwrap();
        assert_eq!(s.cache.as_ref().unwrap().0, first);
    }

    #[test]
    fn scale_is_mean_diagonal_magnitude() {
        assert_eq!(diagonal_scale(2, &[(0, 0, -2.0), (1, 1, 4.0), (0, 1, 9.0)]), 3.0);
        assert_eq!(diagonal_scale(2, &[]), 1.0);
    }
}
