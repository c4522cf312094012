//! Sparse direct solves of the coupled system (unsymmetric LU from faer).

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::{Conj, MatMut};
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::sparse::BlockedSparseMatrix;

/// Growth of `|J| |z| / |r|` beyond which the matrix is treated as singular.
const SINGULARITY_THRESHOLD: f64 = 1e12;

/// Backward error below which no iterative refinement is attempted.
const REFINE_BELOW: f64 = 1e-12;

struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn to_csc(m: &BlockedSparseMatrix) -> Csc {
    let n = m.n();
    let mut counts = vec![0usize; n + 1];
    m.for_each_entry(|_, c, _| counts[c + 1] += 1);
    for c in 0..n {
        counts[c + 1] += counts[c];
    }
    let col_ptr = counts.clone();
    let mut next = counts;
    let nnz = col_ptr[n];
    let mut row_idx = vec![0; nnz];
    let mut values = vec![0.0; nnz];
    // entries arrive row-ascending within each column
    m.for_each_entry(|r, c, v| {
        let k = next[c];
        row_idx[k] = r;
        values[k] = v;
        next[c] += 1;
    });
    Csc { n, col_ptr, row_idx, values }
}

/// LU factors of one matrix, kept together with the matrix for refinement.
pub struct Factorization {
    lu: Lu<usize, f64>,
    matrix: BlockedSparseMatrix,
    norm_inf: f64,
}

/// Factorizes matrices, reusing the symbolic analysis while the pattern is unchanged.
#[derive(Default)]
pub struct LinearSolver {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, matrix: &BlockedSparseMatrix) -> Result<Factorization> {
        let n = matrix.n();
        let csc = to_csc(matrix);
        // empty rows or columns make the structure singular outright
        let mut row_seen = vec![false; n];
        for (c, w) in csc.col_ptr.windows(2).enumerate() {
            let mut any = false;
            for k in w[0]..w[1] {
                if csc.values[k] != 0.0 {
                    any = true;
                    row_seen[csc.row_idx[k]] = true;
                }
            }
            if !any {
                return Err(Error::SingularMatrix { index: c });
            }
        }
        if let Some(r) = row_seen.iter().position(|s| !s) {
            return Err(Error::SingularMatrix { index: r });
        }

        let symbolic = SymbolicSparseColMat::<usize>::new_checked(n, n, csc.col_ptr.clone(), None, csc.row_idx.clone());
        let reuse = matches!(&self.symbolic, Some((cp, ri, _)) if *cp == csc.col_ptr && *ri == csc.row_idx);
        if !reuse {
            let sym = SymbolicLu::try_new(symbolic.as_ref())
                .map_err(|e| Error::InvalidArgument(format!("symbolic factorization failed: {e:?}")))?;
            self.symbolic = Some((csc.col_ptr.clone(), csc.row_idx.clone(), sym));
        }
        let sym = self.symbolic.as_ref().expect("symbolic analysis present").2.clone();
        let mat = SparseColMatRef::new(symbolic.as_ref(), &csc.values);
        let lu = Lu::try_new_with_symbolic(sym, mat).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularMatrix { index },
            LuError::Generic(e) => Error::InvalidArgument(format!("numeric factorization failed: {e:?}")),
        })?;
        let fact = Factorization { lu, matrix: matrix.clone(), norm_inf: matrix.norm_inf() };
        fact.probe(csc.n)?;
        Ok(fact)
    }
}

impl Factorization {
    fn raw_solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mat = MatMut::from_column_major_slice_mut(rhs, n, 1);
        self.lu.solve_in_place_with_conj(Conj::No, mat);
    }

    /// Detects numerically singular factors from the growth of a random solve.
    fn probe(&self, n: usize) -> Result<()> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.0)).collect();
        let mut z = r.clone();
        self.raw_solve(&mut z);
        let (mut imax, mut zmax) = (0, 0.0);
        for (i, v) in z.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::SingularMatrix { index: i });
            }
            if v.abs() > zmax {
                (imax, zmax) = (i, v.abs());
            }
        }
        if self.norm_inf * zmax > SINGULARITY_THRESHOLD {
            return Err(Error::SingularMatrix { index: imax });
        }
        Ok(())
    }

    pub fn matrix(&self) -> &BlockedSparseMatrix {
        &self.matrix
    }

    /// Solves `J x = rhs`, with up to three steps of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let bnorm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut x = rhs.to_vec();
        if bnorm == 0.0 {
            return Ok(x);
        }
        self.raw_solve(&mut x);
        for _ in 0..3 {
            let jx = self.matrix.mul_vec(&x);
            let mut r: Vec<f64> = rhs.iter().zip(&jx).map(|(b, a)| b - a).collect();
            let rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !rnorm.is_finite() {
                return Err(Error::SingularMatrix { index: x.iter().position(|v| !v.is_finite()).unwrap_or(0) });
            }
            if rnorm / bnorm <= REFINE_BELOW {
                break;
            }
            self.raw_solve(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        Ok(x)
    }

    /// `|J x - rhs|_inf / |rhs|_inf`.
    pub fn backward_error(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let jx = self.matrix.mul_vec(x);
        let r = rhs.iter().zip(&jx).fold(0.0f64, |m, (b, a)| m.max((b - a).abs()));
        let b = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if b == 0.0 {
            r
        } else {
            r / b
        }
    }
}

/// One-shot factorize-and-solve.
pub fn linear_solve(matrix: &BlockedSparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    LinearSolver::new().factorize(matrix)?.solve(rhs)
}
