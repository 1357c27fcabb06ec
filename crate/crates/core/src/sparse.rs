//! Compressed sparse row matrices assembled from coordinate triplets.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{PoroError, Result};
use crate::linalg::LinearOperator;

/// Coordinate-format accumulator. Duplicate entries are summed on `build`.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        CooBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols, "({i},{j}) out of {}x{}", self.nrows, self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        // Stable sort keeps the summation order of duplicates deterministic.
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CooBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = CooBuilder::with_capacity(d.len(), d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut b = CooBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    b.push(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    /// `y += alpha A x`.
    pub fn mul_vec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            *yi += alpha * s;
        }
    }

    /// `y += alpha Aᵀ x`.
    pub fn tr_mul_vec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for p in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[p]] += alpha * self.data[p] * xi;
            }
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.tr_mul_vec_acc(1.0, x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = CooBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                b.push(self.indices[p], i, self.data[p]);
            }
        }
        b.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `a A + b B`; the pattern is the union of both patterns.
    pub fn linear_combination(a: f64, lhs: &CsrMatrix, b: f64, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!((lhs.nrows, lhs.ncols), (rhs.nrows, rhs.ncols));
        let mut coo = CooBuilder::with_capacity(lhs.nrows, lhs.ncols, lhs.nnz() + rhs.nnz());
        for (m, s) in [(lhs, a), (rhs, b)] {
            for i in 0..m.nrows {
                for p in m.indptr[i]..m.indptr[i + 1] {
                    coo.push(i, m.indices[p], s * m.data[p]);
                }
            }
        }
        coo.build()
    }

    /// Adds `d[i]` to the diagonal entry of row `offset + i`.
    pub fn add_diagonal(&self, offset: usize, d: &[f64]) -> CsrMatrix {
        let mut coo = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + d.len());
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                coo.push(i, self.indices[p], self.data[p]);
            }
        }
        for (i, &v) in d.iter().enumerate() {
            coo.push(offset + i, offset + i, v);
        }
        coo.build()
    }

    /// Extracts `A[rows, cols]` given maps from old index to new index.
    pub fn select(&self, row_map: &[Option<usize>], n_rows: usize, col_map: &[Option<usize>], n_cols: usize) -> CsrMatrix {
        assert_eq!(row_map.len(), self.nrows);
        assert_eq!(col_map.len(), self.ncols);
        let mut coo = CooBuilder::new(n_rows, n_cols);
        for i in 0..self.nrows {
            let Some(ni) = row_map[i] else { continue };
            for p in self.indptr[i]..self.indptr[i + 1] {
                if let Some(nj) = col_map[self.indices[p]] {
                    coo.push(ni, nj, self.data[p]);
                }
            }
        }
        coo.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-entry asymmetry `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        CsrMatrix::linear_combination(1.0, self, -1.0, &t).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[p])] += self.data[p];
            }
        }
        m
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| PoroError::io(path, e))?);
        let mut body = String::new();
        body.push_str("%%MatrixMarket matrix coordinate real general\n");
        body.push_str(&format!("{} {} {}\n", self.nrows, self.ncols, self.nnz()));
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                body.push_str(&format!("{} {} {:.17e}\n", i + 1, self.indices[p] + 1, self.data[p]));
            }
        }
        f.write_all(body.as_bytes()).map_err(|e| PoroError::io(path, e))
    }

    pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PoroError::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| PoroError::Parse("empty MatrixMarket file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| PoroError::Parse(format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(PoroError::Parse(format!("bad header '{header}'")));
        }
        let mut coo = CooBuilder::with_capacity(dims[0], dims[1], dims[2]);
        for line in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let parse_err = || PoroError::Parse(format!("bad entry '{line}'"));
            if t.len() != 3 {
                return Err(parse_err());
            }
            let i: usize = t[0].parse().map_err(|_| parse_err())?;
            let j: usize = t[1].parse().map_err(|_| parse_err())?;
            let v: f64 = t[2].parse().map_err(|_| parse_err())?;
            coo.push(i - 1, j - 1, v);
        }
        Ok(coo.build())
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let mut b = CooBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(1, 2, 4.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![2.0, 8.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![3.0, 2.0, 5.0]);
    }

    #[test]
    fn select_and_combine() {
        let d = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0]);
        let m = CsrMatrix::from_dense(&d);
        assert_eq!(m.asymmetry(), 0.0);
        let map = [Some(0), None, Some(1)];
        let s = m.select(&map, 2, &map, 2);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0]));
        let c = CsrMatrix::linear_combination(2.0, &m, -1.0, &CsrMatrix::identity(3));
        assert_eq!(c.get(1, 1), 7.0);
        assert_eq!(m.add_diagonal(1, &[1.0, 2.0]).diagonal(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn matrix_market_round_trip() {
        let d = DMatrix::from_row_slice(2, 3, &[1.5, 0.0, -2.0, 0.0, 1e-300, 3.0]);
        let m = CsrMatrix::from_dense(&d);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mtx");
        m.write_matrix_market(&p).unwrap();
        assert_eq!(CsrMatrix::read_matrix_market(&p).unwrap(), m);
    }
}
