//! Compressed sparse row storage, triplet assembly and an envelope
//! (skyline) LDLᵀ factorization with inertia counting.

use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("zero pivot at row {row} (|d| = {magnitude:e})")]
    ZeroPivot { row: usize, magnitude: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Triplet accumulator. Duplicates are summed in insertion order, so the
/// assembled values do not depend on anything but the push sequence.
#[derive(Debug, Clone)]
pub struct CooBuilder<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> CooBuilder<T> {
    pub fn new(n: usize) -> Self {
        CooBuilder { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        // stable: equal (row, col) keep insertion order
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, row_ptr: vec![0; n + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = CooBuilder::new(n);
        for i in 0..n {
            b.push(i, i, T::one());
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<T>())
            .sum()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &CsrMatrix<T>, scale: T) -> CsrMatrix<T> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut b = CooBuilder::new(self.n);
        for (i, j, v) in self.triplets() {
            b.push(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, scale * v);
        }
        b.build()
    }

    pub fn sum_entries(&self) -> T {
        self.vals.iter().copied().sum()
    }

    pub fn max_abs(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(T::zero(), T::max)
            / scale
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix<T> {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut b = CooBuilder::new(keep.len());
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    b.push(new_i, map[j], v);
                }
            }
        }
        b.build()
    }

    /// Symmetric permutation `P A Pᵀ` with `perm[i]` the new index of row `i`.
    pub fn permute(&self, perm: &[usize]) -> CsrMatrix<T> {
        let mut b = CooBuilder::new(self.n);
        for (i, j, v) in self.triplets() {
            b.push(perm[i], perm[j], v);
        }
        b.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.n]; self.n];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    /// Coordinate text dump: a header line `n n nnz`, then one
    /// `row col value` line per stored entry (1-based indices, full
    /// precision).
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz()).unwrap();
        for (i, j, v) in self.triplets() {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v.to_f64_lossy()).unwrap();
        }
        out
    }
}

/// Envelope LDLᵀ of a symmetric matrix, no pivoting.
///
/// Row `i` stores the strictly lower entries from its first nonzero column
/// `first[i]` to `i - 1`. Fill stays inside that envelope.
#[derive(Debug, Clone)]
pub struct SkylineLdl<T> {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> SkylineLdl<T> {
    /// Factors `a + shift * b` (pass `b = None` for `a` alone).
    pub fn factor(a: &CsrMatrix<T>, b: Option<(&CsrMatrix<T>, T)>) -> Result<Self, SparseError> {
        let n = a.dim();
        if let Some((b, _)) = b {
            if b.dim() != n {
                return Err(SparseError::Dimension(format!("{} vs {}", n, b.dim())));
            }
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in a.row(i) {
                first[i] = first[i].min(j);
            }
            if let Some((b, _)) = b {
                for (j, _) in b.row(i) {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![T::zero(); start[n]];
        let mut diag = vec![T::zero(); n];
        let mut scale = T::zero();
        for i in 0..n {
            let mut put = |j: usize, v: T| {
                if j < i {
                    lower[start[i] + (j - first[i])] += v;
                } else if j == i {
                    diag[i] += v;
                }
            };
            for (j, v) in a.row(i) {
                put(j, v);
            }
            if let Some((b, s)) = b {
                for (j, v) in b.row(i) {
                    put(j, s * v);
                }
            }
            scale = scale.max(diag[i].abs());
        }
        let tiny = T::epsilon() * scale.max(T::min_positive_value());

        // Row i: t_j = l_ij d_j = a_ij - sum_k t_k l_jk, then l_ij = t_j / d_j.
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            let mut di = diag[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut t = lower[row_i + (j - fi)];
                let row_j = start[j];
                for k in lo..j {
                    t -= lower[row_i + (k - fi)] * diag[k] * lower[row_j + (k - fj)];
                }
                let l = t / diag[j];
                lower[row_i + (j - fi)] = l;
                di -= l * t;
            }
            if !(di.abs() > tiny) || !di.is_finite() {
                return Err(SparseError::ZeroPivot { row: i, magnitude: di.abs().to_f64_lossy() });
            }
            diag[i] = di;
        }
        Ok(SkylineLdl { n, first, start, lower, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of negative pivots; by Sylvester's law of inertia this is the
    /// number of negative eigenvalues of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < T::zero()).count()
    }

    pub fn pivots(&self) -> &[T] {
        &self.diag
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let mut s = x[i];
            for (k, l) in row.iter().enumerate() {
                s -= *l * x[fi + k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (k, l) in row.iter().enumerate() {
                x[fi + k] -= *l * xi;
            }
        }
    }
}
