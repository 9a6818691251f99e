//! Dense symmetric eigensolvers: Householder tridiagonalization, implicit
//! QL for the eigenvalues, and inverse iteration for the few eigenvectors
//! actually needed.

use thiserror::Error;

use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("matrix is not positive definite (pivot {row})")]
    NotPositiveDefinite { row: usize },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn from_sparse(a: &CsrMatrix<T>) -> Self {
        let mut m = Self::zeros(a.dim());
        for (i, j, v) in a.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// In-place lower Cholesky factor; the strict upper triangle is zeroed.
    pub fn cholesky(mut self) -> Result<Self, DenseError> {
        let n = self.n;
        for j in 0..n {
            let mut s = self[(j, j)];
            for k in 0..j {
                s -= self[(j, k)] * self[(j, k)];
            }
            if !(s > T::zero()) {
                return Err(DenseError::NotPositiveDefinite { row: j });
            }
            let ljj = s.sqrt();
            self[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= self[(i, k)] * self[(j, k)];
                }
                self[(i, j)] = s / ljj;
            }
            for k in j + 1..n {
                self[(j, k)] = T::zero();
            }
        }
        Ok(self)
    }

    /// `L⁻¹ B` for lower-triangular `self`.
    fn forward_solve_rows(&self, mut b: DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.n;
        for i in 0..n {
            let (done, rest) = b.data.split_at_mut(i * n);
            let bi = &mut rest[..n];
            for k in 0..i {
                let lik = self.data[i * n + k];
                if lik != T::zero() {
                    let bk = &done[k * n..(k + 1) * n];
                    for (x, y) in bi.iter_mut().zip(bk) {
                        *x -= lik * *y;
                    }
                }
            }
            let inv = T::one() / self.data[i * n + i];
            for x in bi.iter_mut() {
                *x *= inv;
            }
        }
        b
    }

    fn transpose(&self) -> DenseMatrix<T> {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.data[j * self.n + i] = self.data[i * self.n + j];
            }
        }
        t
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// All eigenvalues (ascending) and the eigenvectors of the lowest `count`.
#[derive(Debug, Clone)]
pub struct DenseEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Eigen-decomposition of a symmetric matrix; vectors are orthonormal.
pub fn symmetric_lowest<T: Real>(a: DenseMatrix<T>, count: usize) -> Result<DenseEigen<T>, DenseError> {
    let n = a.dim();
    let count = count.min(n);
    if n == 0 {
        return Ok(DenseEigen { values: vec![], vectors: vec![] });
    }
    let (diag, off, reflectors) = tridiagonalize(a);
    let mut d = diag.clone();
    let mut e = off.clone();
    e.push(T::zero());
    tql_values(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));

    let vectors = tridiagonal_vectors(&diag, &off, &d[..count])
        .into_iter()
        .map(|mut y| {
            for (k, v) in reflectors.iter().enumerate().rev() {
                let tail = &mut y[k + 1..];
                let dot: T = v.iter().zip(tail.iter()).map(|(a, b)| *a * *b).sum();
                let f = dot + dot;
                for (t, vi) in tail.iter_mut().zip(v) {
                    *t -= f * *vi;
                }
            }
            y
        })
        .collect();
    Ok(DenseEigen { values: d, vectors })
}

/// Lowest `count` eigenpairs of `A u = λ M u` via Cholesky reduction;
/// the returned vectors are M-orthonormal.
pub fn generalized_lowest<T: Real>(
    a: &DenseMatrix<T>,
    m: &DenseMatrix<T>,
    count: usize,
) -> Result<DenseEigen<T>, DenseError> {
    let l = m.clone().cholesky()?;
    let x = l.forward_solve_rows(a.clone());
    let mut c = l.forward_solve_rows(x.transpose());
    let n = c.dim();
    for i in 0..n {
        for j in 0..i {
            let s = T::lit(0.5) * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let mut eig = symmetric_lowest(c, count)?;
    // u = L⁻ᵀ y
    for y in &mut eig.vectors {
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
    }
    Ok(eig)
}

/// Householder reduction `A = Q T Qᵀ`, with `Q = H_0 H_1 ... H_{n-3}`.
/// Returns the diagonal, the subdiagonal and the unit reflector vectors
/// (reflector `k` acts on indices `k+1..n`).
fn tridiagonalize<T: Real>(mut a: DenseMatrix<T>) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let n = a.dim();
    let mut reflectors = Vec::new();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut w = vec![T::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<T> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if norm == T::zero() {
            off.push(T::zero());
            reflectors.push(vec![T::zero(); m]);
            continue;
        }
        let alpha = if v[0] > T::zero() { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if vnorm == T::zero() {
            off.push(a[(k + 1, k)]);
            reflectors.push(vec![T::zero(); m]);
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        // w = A22 v, kappa = vᵀ w, q = 2 (w - kappa v)
        let w = &mut w[..m];
        for (r, wr) in w.iter_mut().enumerate() {
            let row = &a.row(k + 1 + r)[k + 1..];
            *wr = row.iter().zip(&v).map(|(x, y)| *x * *y).sum();
        }
        let kappa: T = w.iter().zip(&v).map(|(x, y)| *x * *y).sum();
        for (wr, vr) in w.iter_mut().zip(&v) {
            *wr = (*wr - kappa * *vr) * T::lit(2.0);
        }
        for r in 0..m {
            let (vr, qr) = (v[r], w[r]);
            let row = &mut a.data[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            for ((x, vc), qc) in row.iter_mut().zip(&v).zip(w.iter()) {
                *x -= vr * *qc + qr * *vc;
            }
        }
        off.push(alpha);
        reflectors.push(v);
    }
    if n >= 2 {
        off.push(a[(n - 1, n - 2)]);
    }
    let diag = (0..n).map(|i| a[(i, i)]).collect();
    (diag, off, reflectors)
}

/// Implicit QL with Wilkinson-type shifts; `e[i]` couples `d[i]` and
/// `d[i+1]`, `e[n-1]` is scratch.
fn tql_values<T: Real>(d: &mut [T], e: &mut [T]) -> Result<(), DenseError> {
    let n = d.len();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(DenseError::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Inverse iteration on the tridiagonal matrix for the given (accurate)
/// eigenvalues. Vectors of close eigenvalues are kept orthogonal.
fn tridiagonal_vectors<T: Real>(diag: &[T], off: &[T], values: &[T]) -> Vec<Vec<T>> {
    let n = diag.len();
    let norm = diag.iter().map(|x| x.abs()).fold(T::zero(), T::max)
        + T::lit(2.0) * off.iter().map(|x| x.abs()).fold(T::zero(), T::max);
    let scale = norm.max(T::min_positive_value());
    let cluster = T::lit(1e-3) * scale;
    let nudge = T::lit(10.0) * T::epsilon() * scale;
    let mut out: Vec<Vec<T>> = Vec::with_capacity(values.len());
    let mut shifts: Vec<T> = Vec::with_capacity(values.len());
    let mut seed = 0x2545_f491_4f6c_dd1du64;
    for (j, &lambda) in values.iter().enumerate() {
        let mut shift = lambda;
        if let Some(&prev) = shifts.last() {
            if (shift - prev).abs() < nudge {
                shift = prev + nudge;
            }
        }
        shifts.push(shift);
        let mut x: Vec<T> = (0..n)
            .map(|_| {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                T::lit((seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            })
            .collect();
        let peers: Vec<usize> = (0..j).filter(|&i| (values[i] - lambda).abs() <= cluster).collect();
        for _ in 0..5 {
            x = tridiagonal_solve(diag, off, shift, &x, nudge);
            for &i in &peers {
                let dot: T = out[i].iter().zip(&x).map(|(a, b)| *a * *b).sum();
                for (xk, qk) in x.iter_mut().zip(&out[i]) {
                    *xk -= dot * *qk;
                }
            }
            let nrm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if nrm == T::zero() || !nrm.is_finite() {
                x = (0..n).map(|k| if k == j % n { T::one() } else { T::zero() }).collect();
                continue;
            }
            for v in &mut x {
                *v /= nrm;
            }
        }
        out.push(x);
    }
    out
}

/// Solves `(T - shift I) x = b` by Gaussian elimination with partial
/// pivoting; tiny pivots are replaced by `floor`.
fn tridiagonal_solve<T: Real>(diag: &[T], off: &[T], shift: T, b: &[T], floor: T) -> Vec<T> {
    let n = diag.len();
    // rows of U: (u0, u1, u2) on columns (i, i+1, i+2)
    let mut u0: Vec<T> = diag.iter().map(|d| *d - shift).collect();
    let mut u1: Vec<T> = (0..n).map(|i| if i + 1 < n { off[i] } else { T::zero() }).collect();
    let mut u2 = vec![T::zero(); n];
    let mut rhs = b.to_vec();
    let mut lower = off.to_vec();
    for i in 0..n.saturating_sub(1) {
        if lower[i].abs() > u0[i].abs() {
            // swap rows i and i+1
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = lower[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            let below = [a0, a1, a2];
            rhs.swap(i, i + 1);
            let f = below[0] / u0[i];
            u0[i + 1] = below[1] - f * u1[i];
            u1[i + 1] = below[2] - f * u2[i];
            let ri = rhs[i];
            rhs[i + 1] -= f * ri;
        } else {
            if u0[i].abs() < floor {
                u0[i] = if u0[i] >= T::zero() { floor } else { -floor };
            }
            let f = lower[i] / u0[i];
            u0[i + 1] -= f * u1[i];
            let ri = rhs[i];
            rhs[i + 1] -= f * ri;
        }
        lower[i] = T::zero();
    }
    if n > 0 && u0[n - 1].abs() < floor {
        u0[n - 1] = if u0[n - 1] >= T::zero() { floor } else { -floor };
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    x
}
