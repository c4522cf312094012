//! Compressed sparse row storage with fixed patterns, and the 2x2 block
//! structure of the coupled fluid/solid system.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Row-wise sparsity pattern under construction.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    ncols: usize,
    rows: Vec<BTreeSet<usize>>,
}

impl PatternBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { ncols, rows: vec![BTreeSet::new(); nrows] }
    }

    pub fn insert(&mut self, row: usize, col: usize) {
        debug_assert!(col < self.ncols);
        self.rows[row].insert(col);
    }

    /// Couples every entry of `rows` with every entry of `cols`.
    pub fn insert_block(&mut self, rows: &[usize], cols: &[usize]) {
        for &r in rows {
            self.rows[r].extend(cols.iter().copied());
        }
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in &self.rows {
            col_idx.extend(r.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { nrows: self.rows.len(), ncols: self.ncols, row_ptr, col_idx, values: vec![0.0; nnz] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()].binary_search(&col).ok().map(|k| range.start + k)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.position(row, col).is_some()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) -> Result<()> {
        let k = self.position(row, col).ok_or(Error::OutsidePattern { row, col })?;
        self.values[k] += v;
        Ok(())
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) -> Result<()> {
        let k = self.position(row, col).ok_or(Error::OutsidePattern { row, col })?;
        self.values[k] = v;
        Ok(())
    }

    pub fn zero_row(&mut self, row: usize) {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.values[range].fill(0.0);
    }

    pub fn clear_values(&mut self) {
        self.values.fill(0.0);
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows && self.ncols == other.ncols && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// `y += self * x`.
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(r);
            *yr += cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_add(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }
}

/// Unknowns of the coupled system: fluid `(u, p)` followed by solid `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedVector {
    pub fluid: Vec<f64>,
    pub solid: Vec<f64>,
}

impl BlockedVector {
    pub fn zeros(n_fluid: usize, n_solid: usize) -> Self {
        Self { fluid: vec![0.0; n_fluid], solid: vec![0.0; n_solid] }
    }

    pub fn len(&self) -> usize {
        self.fluid.len() + self.solid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_global(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.fluid);
        v.extend_from_slice(&self.solid);
        v
    }

    pub fn from_global(v: &[f64], n_fluid: usize) -> Self {
        Self { fluid: v[..n_fluid].to_vec(), solid: v[n_fluid..].to_vec() }
    }

    pub fn get(&self, i: usize) -> f64 {
        if i < self.fluid.len() {
            self.fluid[i]
        } else {
            self.solid[i - self.fluid.len()]
        }
    }

    pub fn get_mut(&mut self, i: usize) -> &mut f64 {
        if i < self.fluid.len() {
            &mut self.fluid[i]
        } else {
            let n = self.fluid.len();
            &mut self.solid[i - n]
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.fluid.iter().chain(&self.solid).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &BlockedVector) {
        for (x, y) in self.fluid.iter_mut().zip(&other.fluid) {
            *x += a * y;
        }
        for (x, y) in self.solid.iter_mut().zip(&other.solid) {
            *x += a * y;
        }
    }
}

/// Square system matrix split into fluid/solid row and column blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedSparseMatrix {
    n_fluid: usize,
    n_solid: usize,
    /// `blocks[i][j]`: row block i, column block j (0 = fluid, 1 = solid).
    blocks: [[CsrMatrix; 2]; 2],
}

impl BlockedSparseMatrix {
    /// Builds from a global pattern (rows and columns ordered fluid then solid).
    pub fn from_global_pattern(n_fluid: usize, n_solid: usize, pattern: &PatternBuilder) -> Self {
        let mut b: [[PatternBuilder; 2]; 2] = [
            [PatternBuilder::new(n_fluid, n_fluid), PatternBuilder::new(n_fluid, n_solid)],
            [PatternBuilder::new(n_solid, n_fluid), PatternBuilder::new(n_solid, n_solid)],
        ];
        for (r, cols) in pattern.rows.iter().enumerate() {
            let (bi, lr) = if r < n_fluid { (0, r) } else { (1, r - n_fluid) };
            for &c in cols {
                let (bj, lc) = if c < n_fluid { (0, c) } else { (1, c - n_fluid) };
                b[bi][bj].insert(lr, lc);
            }
        }
        let [[a, bb], [c, d]] = b;
        Self { n_fluid, n_solid, blocks: [[a.build(), bb.build()], [c.build(), d.build()]] }
    }

    pub fn n_fluid(&self) -> usize {
        self.n_fluid
    }

    pub fn n_solid(&self) -> usize {
        self.n_solid
    }

    pub fn n(&self) -> usize {
        self.n_fluid + self.n_solid
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().flatten().map(CsrMatrix::nnz).sum()
    }

    pub fn block(&self, i: usize, j: usize) -> &CsrMatrix {
        &self.blocks[i][j]
    }

    fn split(&self, g: usize) -> (usize, usize) {
        if g < self.n_fluid {
            (0, g)
        } else {
            (1, g - self.n_fluid)
        }
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) -> Result<()> {
        let (bi, r) = self.split(row);
        let (bj, c) = self.split(col);
        self.blocks[bi][bj].add(r, c, v).map_err(|_| Error::OutsidePattern { row, col })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (bi, r) = self.split(row);
        let (bj, c) = self.split(col);
        self.blocks[bi][bj].get(r, c)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        let (bi, r) = self.split(row);
        let (bj, c) = self.split(col);
        self.blocks[bi][bj].contains(r, c)
    }

    /// Replaces global row `row` by the corresponding identity row.
    pub fn set_identity_row(&mut self, row: usize) -> Result<()> {
        let (bi, r) = self.split(row);
        self.blocks[bi][0].zero_row(r);
        self.blocks[bi][1].zero_row(r);
        self.blocks[bi][bi].set(r, r, 1.0).map_err(|_| Error::OutsidePattern { row, col: row })
    }

    pub fn clear_values(&mut self) {
        self.blocks.iter_mut().flatten().for_each(CsrMatrix::clear_values);
    }

    pub fn same_pattern(&self, other: &BlockedSparseMatrix) -> bool {
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .all(|(a, b)| a.same_pattern(b))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let (xf, xs) = x.split_at(self.n_fluid);
        let mut y = vec![0.0; self.n()];
        let (yf, ys) = y.split_at_mut(self.n_fluid);
        self.blocks[0][0].mul_add(xf, yf);
        self.blocks[0][1].mul_add(xs, yf);
        self.blocks[1][0].mul_add(xf, ys);
        self.blocks[1][1].mul_add(xs, ys);
        y
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.n()];
        self.for_each_entry(|r, _, v| sums[r] += v.abs());
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Visits every stored entry with global indices.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        for bi in 0..2 {
            for bj in 0..2 {
                let m = &self.blocks[bi][bj];
                let (ro, co) = (bi * self.n_fluid, bj * self.n_fluid);
                for r in 0..m.nrows() {
                    let (cols, vals) = m.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        f(ro + r, co + c, v);
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n()]; self.n()];
        self.for_each_entry(|r, c, v| d[r][c] = v);
        d
    }
}
