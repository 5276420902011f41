//! Compressed-row sparse matrices, block composition and a direct solver.
//!
//! Factorization is delegated to faer's sparse LU with partial pivoting,
//! which handles the symmetric-indefinite saddle systems of the mixed method.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    /// Explicit zeros are kept so that the sparsity pattern is structural.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|i| (cols[i], vals[i])));
            // Stable sort keeps the summation order of duplicates deterministic.
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `A^T x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[j] += v * x[i];
            }
        }
        out
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coordinate text format: one `row col value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Accumulates scaled sparse blocks into one square matrix.
#[derive(Debug, Clone)]
pub struct BlockBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl BlockBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, triplets: Vec::new() }
    }

    /// Adds `scale * block` with its top-left corner at `(row, col)`.
    pub fn add(&mut self, row: usize, col: usize, block: &CsrMatrix, scale: f64) -> &mut Self {
        if scale != 0.0 {
            self.triplets.extend(block.triplets().map(|(i, j, v)| (row + i, col + j, scale * v)));
        }
        self
    }

    /// Adds `scale * block^T` with its top-left corner at `(row, col)`.
    pub fn add_transpose(&mut self, row: usize, col: usize, block: &CsrMatrix, scale: f64) -> &mut Self {
        if scale != 0.0 {
            self.triplets.extend(block.triplets().map(|(i, j, v)| (row + j, col + i, scale * v)));
        }
        self
    }

    pub fn build(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.n, self.n, &self.triplets)
    }
}

/// A square sparse matrix together with its LU factorization.
pub struct SparseLu {
    matrix: CsrMatrix,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.matrix.nrows).field("nnz", &self.matrix.nnz()).finish()
    }
}

impl SparseLu {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::InvalidArgument("LU of a non-square matrix".into()));
        }
        let n = matrix.nrows;
        let triplets: Vec<_> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Singular(format!("matrix creation failed: {e:?}")))?;
        let lu = csc.sp_lu().map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))?;
        let this = Self { matrix, lu };
        // A structurally or numerically singular matrix shows up as a non-finite solve.
        let probe = this.solve_unchecked(&vec![1.0; n]);
        if probe.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("zero pivot in sparse LU".into()));
        }
        Ok(this)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    fn solve_unchecked(&self, rhs: &[f64]) -> Vec<f64> {
        let b = faer::Col::from_fn(rhs.len(), |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| x[i]).collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::InvalidArgument(format!("rhs length {} != {}", rhs.len(), self.dim())));
        }
        let x = self.solve_unchecked(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite solution".into()));
        }
        Ok(x)
    }

    /// Solve followed by one step of iterative refinement.
    pub fn solve_refined(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve(rhs)?;
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = self.solve(&r)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        Ok(x)
    }

    /// `||A x - b|| / ||b||` (or the absolute residual when `b = 0`).
    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: f64 = ax.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        if nb > 0.0 { r / nb } else { r }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
