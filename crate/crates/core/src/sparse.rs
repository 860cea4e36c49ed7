//! Compressed sparse row matrices and the bridge to faer's direct solvers.

use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], data: vec![] }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed in a
    /// deterministic order and explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; nrows + 1];
        for &(r, c, _) in trip {
            debug_assert!(r < nrows && c < ncols);
            count[r + 1] += 1;
        }
        for i in 0..nrows {
            count[i + 1] += count[i];
        }
        let mut pos = count.clone();
        let mut cols = vec![0usize; trip.len()];
        let mut vals = vec![0.0; trip.len()];
        for &(r, c, v) in trip {
            cols[pos[r]] = c;
            vals[pos[r]] = v;
            pos[r] += 1;
        }
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data = Vec::with_capacity(trip.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((count[r]..count[r + 1]).map(|k| (cols[k], vals[k])));
            // stable sort keeps insertion order among duplicates
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(c);
                data.push(s);
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).filter(|&(j, _)| j == c).map(|(_, v)| v).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push((r, c, v));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    /// y = Aᵀx
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Csr::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// a·self + b·other
    pub fn axpby(&self, a: f64, other: &Csr, b: f64) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, a * v)).collect();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, b * v)));
        Csr::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                data.push(acc[c]);
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: other.ncols, indptr, indices, data }
    }

    /// Pᵀ·self·P
    pub fn congruence(&self, p: &Csr) -> Csr {
        p.transpose().matmul(&self.matmul(p))
    }

    /// Submatrix on the given (ordered) row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Csr {
        let mut cmap = vec![usize::MAX; self.ncols];
        for (j, &c) in cols.iter().enumerate() {
            cmap[c] = j;
        }
        let mut t = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if cmap[c] != usize::MAX {
                    t.push((i, cmap[c], v));
                }
            }
        }
        Csr::from_triplets(rows.len(), cols.len(), &t)
    }

    /// Largest |A − Aᵀ| entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.axpby(1.0, &t, -1.0).data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::<usize, f64>::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::FactorizationFailure(format!("sparse construction: {e:?}")))
    }

    /// Matrix Market coordinate format (general, real).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        s.push_str(&format!("{} {} {}\n", self.nrows, self.ncols, self.nnz()));
        for (r, c, v) in self.triplets() {
            s.push_str(&format!("{} {} {:.17e}\n", r + 1, c + 1, v));
        }
        s
    }

    pub fn from_matrix_market(text: &str) -> Result<Csr> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| Error::Parse { line: ln + 1, msg: "bad size line".into() }))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Parse { line: ln + 1, msg: "size line needs 3 integers".into() });
        }
        let mut t = Vec::with_capacity(dims[2]);
        for (ln, l) in lines {
            let w: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Parse { line: ln + 1, msg: format!("bad entry '{l}'") };
            if w.len() != 3 {
                return Err(bad());
            }
            let r: usize = w[0].parse().map_err(|_| bad())?;
            let c: usize = w[1].parse().map_err(|_| bad())?;
            let v: f64 = w[2].parse().map_err(|_| bad())?;
            if r == 0 || c == 0 || r > dims[0] || c > dims[1] {
                return Err(bad());
            }
            t.push((r - 1, c - 1, v));
        }
        Ok(Csr::from_triplets(dims[0], dims[1], &t))
    }
}

/// Sparse LU of a square matrix, solving for blocks of right-hand sides.
pub struct Lu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl Lu {
    pub fn new(a: &Csr) -> Result<Lu> {
        assert_eq!(a.nrows, a.ncols);
        let m = a.to_faer()?;
        let lu = m.sp_lu().map_err(|e| Error::FactorizationFailure(format!("{e:?}")))?;
        Ok(Lu { n: a.nrows, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    /// Solves for each column of a column-major block.
    pub fn solve_block(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if cols.is_empty() {
            return vec![];
        }
        let mut m = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.lu.solve_in_place(m.as_mut());
        (0..cols.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
    }
}

/// Sparse Cholesky factorization of a symmetric positive-definite matrix.
pub struct Cholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl Cholesky {
    pub fn new(a: &Csr) -> Result<Cholesky> {
        assert_eq!(a.nrows, a.ncols);
        let m = a.to_faer()?;
        let llt = m
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::FactorizationFailure(format!("Cholesky: {e:?}")))?;
        Ok(Cholesky { n: a.nrows, llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_block(&[b.to_vec()]).pop().unwrap()
    }

    pub fn solve_block(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if cols.is_empty() {
            return vec![];
        }
        let mut m = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.llt.solve_in_place(m.as_mut());
        (0..cols.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = Csr::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.mul_vec(&[1.0, 5.0]), vec![3.0, -1.0]);
        assert_eq!(a.tmul_vec(&[1.0, 1.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn lu_solves_small_system() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -3.0), (2, 2, 2.0)]);
        let x = Lu::new(&a).unwrap().solve(&[1.0, 2.0, 3.0]);
        let r = a.mul_vec(&x);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14 && (r[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_market_roundtrip() {
        let a = Csr::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -2.25)]);
        let b = Csr::from_matrix_market(&a.to_matrix_market()).unwrap();
        assert_eq!(a, b);
    }
}
