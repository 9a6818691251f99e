//! Lowest eigenpairs of the sparse symmetric-definite pencil `A u = λ M u`.
//!
//! Two independent routes:
//!
//! * `Dense`: Cholesky reduction of the full matrices followed by a dense
//!   symmetric eigensolve. Used for small systems and as a test oracle.
//! * `ShiftInvert`: a restarted Krylov (Krylov-Schur style) iteration on
//!   `(A - sM)⁻¹ M` in the M-inner product, with the shift factored once by
//!   the skyline LDLᵀ. After convergence the result is certified by an
//!   inertia count: no eigenvalue may hide below the largest returned one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{generalized_lowest, DenseError, DenseMatrix};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, SkylineLdl, SparseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("factorization of A - sM failed at shift {shift:e}: {source}")]
    Factorization { shift: f64, source: SparseError },
    #[error("dense solve failed: {0}")]
    Dense(#[from] DenseError),
    #[error("no convergence after {iterations} iterations (worst residual {worst:e})")]
    NoConvergence { iterations: usize, worst: f64 },
    #[error("inertia check found {found} eigenvalues below {below:e}, expected at most {expected}")]
    MissedEigenvalue { below: f64, found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Dense up to `dense_threshold` unknowns, shift-invert above.
    Auto,
    Force(Method),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftStrategy<T> {
    /// A small negative shift; `A - sM` is then positive definite.
    Auto,
    Fixed(T),
    /// Bisection on inertia counts for a lower bound of `λ_1`; the shift is
    /// placed 10% below that bound.
    Bracketed { steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    pub count: usize,
    pub tol: T,
    pub method: MethodChoice,
    pub dense_threshold: usize,
    pub shift: ShiftStrategy<T>,
    pub krylov_dim: Option<usize>,
    pub max_restarts: usize,
    pub verify_count: bool,
}

impl<T: Real> SolveOptions<T> {
    pub fn lowest(count: usize) -> Self {
        SolveOptions {
            count,
            tol: T::lit(1e-10),
            method: MethodChoice::Auto,
            dense_threshold: 2000,
            shift: ShiftStrategy::Auto,
            krylov_dim: None,
            max_restarts: 200,
            verify_count: true,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = MethodChoice::Force(method);
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }
}

/// Lowest eigenpairs with their relative residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult<T> {
    pub eigenvalues: Vec<T>,
    /// M-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    pub method: Method,
    pub iterations: usize,
    pub n_dof: usize,
    pub shift: Option<T>,
}

impl<T: Real> SpectralResult<T> {
    /// Heuristic eigenvalue error bar from the residual, `2 |λ| r`.
    pub fn error_bar(&self, j: usize) -> T {
        T::lit(2.0) * self.eigenvalues[j].abs().max(T::one()) * self.residuals[j]
    }
}

fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(a, b)| *a * *b).sum()
}

fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

fn inf_norm<T: Real>(a: &CsrMatrix<T>) -> T {
    (0..a.dim())
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// `‖Au − λMu‖ / (‖Au‖ + |λ|‖Mu‖)`. The denominator is floored at
/// `√ε (‖A‖∞ + |λ|‖M‖∞) ‖u‖` so that `λ = 0` with `Au ≈ 0` is measured
/// against the matrix scale instead of `0 / 0`.
pub fn relative_residual<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, lambda: T, u: &[T]) -> T {
    let au = a.mul_vec(u);
    let mu = m.mul_vec(u);
    let r: Vec<T> = au.iter().zip(&mu).map(|(x, y)| *x - lambda * *y).collect();
    let floor = T::epsilon().sqrt() * (inf_norm(a) + lambda.abs() * inf_norm(m)) * norm2(u);
    let denom = (norm2(&au) + lambda.abs() * norm2(&mu)).max(floor);
    if denom == T::zero() {
        return T::zero();
    }
    norm2(&r) / denom
}

pub fn rayleigh_quotient<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, u: &[T]) -> Result<T, SolveError> {
    let den = m.quadratic_form(u);
    if !(den > T::zero()) {
        return Err(SolveError::InvalidInput("zero vector".into()));
    }
    Ok(a.quadratic_form(u) / den)
}

/// Number of eigenvalues of the pencil strictly below `s`, from the
/// inertia of `A - sM`.
///
/// A singular leading minor stops the unpivoted factorization, so on a zero
/// pivot the shift is nudged down by a few ulps-scaled steps and retried.
pub fn count_below<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, s: T) -> Result<usize, SolveError> {
    let step = T::lit(1e-12) * s.abs().max(T::lit(1e-6));
    let mut last = None;
    for attempt in 0..4 {
        let shift = s - T::from_usize_lossy(attempt) * step;
        match SkylineLdl::factor(a, Some((m, -shift))) {
            Ok(f) => return Ok(f.negative_pivots()),
            Err(e @ SparseError::ZeroPivot { .. }) => last = Some(e),
            Err(source) => return Err(SolveError::Factorization { shift: shift.to_f64_lossy(), source }),
        }
    }
    Err(SolveError::Factorization { shift: s.to_f64_lossy(), source: last.expect("at least one attempt") })
}

/// Largest `|VᵀMV − I|` entry.
pub fn m_gram_error<T: Real>(m: &CsrMatrix<T>, vectors: &[Vec<T>]) -> T {
    let mv: Vec<Vec<T>> = vectors.iter().map(|v| m.mul_vec(v)).collect();
    let mut worst = T::zero();
    for (i, v) in vectors.iter().enumerate() {
        for (j, w) in mv.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((dot(v, w) - target).abs());
        }
    }
    worst
}

pub fn solve_lowest<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    opts: &SolveOptions<T>,
) -> Result<SpectralResult<T>, SolveError> {
    let n = a.dim();
    if m.dim() != n {
        return Err(SolveError::InvalidInput(format!("A is {n}x{n}, M is {0}x{0}", m.dim())));
    }
    if opts.count == 0 || opts.count > n {
        return Err(SolveError::InvalidInput(format!("cannot compute {} eigenpairs of a {n}-dimensional problem", opts.count)));
    }
    let method = match opts.method {
        MethodChoice::Force(method) => method,
        MethodChoice::Auto if n <= opts.dense_threshold => Method::Dense,
        MethodChoice::Auto => Method::ShiftInvert,
    };
    match method {
        Method::Dense => solve_dense(a, m, opts),
        Method::ShiftInvert => solve_shift_invert(a, m, opts),
    }
}

fn solve_dense<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, opts: &SolveOptions<T>) -> Result<SpectralResult<T>, SolveError> {
    let eig = generalized_lowest(&DenseMatrix::from_sparse(a), &DenseMatrix::from_sparse(m), opts.count)?;
    let eigenvalues: Vec<T> = eig.values[..opts.count].to_vec();
    let residuals: Vec<T> = eigenvalues
        .iter()
        .zip(&eig.vectors)
        .map(|(&l, u)| relative_residual(a, m, l, u))
        .collect();
    let worst = residuals.iter().copied().fold(T::zero(), T::max);
    if worst > opts.tol {
        return Err(SolveError::NoConvergence { iterations: 0, worst: worst.to_f64_lossy() });
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: eig.vectors,
        residuals,
        method: Method::Dense,
        iterations: 0,
        n_dof: a.dim(),
        shift: None,
    })
}

/// Deterministic pseudo-random vector (xorshift64*).
fn start_vector<T: Real>(n: usize, salt: u64) -> Vec<T> {
    let mut s = 0x9e37_79b9_7f4a_7c15u64 ^ salt.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    (0..n)
        .map(|_| {
            s ^= s >> 12;
            s ^= s << 25;
            s ^= s >> 27;
            let r = s.wrapping_mul(0x2545_f491_4f6c_dd1d);
            T::lit((r >> 11) as f64 / (1u64 << 53) as f64 + 0.25)
        })
        .collect()
}

fn trace_ratio<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>) -> T {
    let ta: T = (0..a.dim()).map(|i| a.get(i, i)).sum();
    let tm: T = (0..m.dim()).map(|i| m.get(i, i)).sum();
    if tm > T::zero() {
        (ta / tm).abs()
    } else {
        T::one()
    }
}

fn choose_shift<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, strategy: ShiftStrategy<T>) -> Result<T, SolveError> {
    let safe = -T::lit(1e-6) * trace_ratio(a, m).max(T::min_positive_value());
    match strategy {
        ShiftStrategy::Auto => Ok(safe),
        ShiftStrategy::Fixed(s) => Ok(s),
        ShiftStrategy::Bracketed { steps } => {
            let probe = start_vector::<T>(a.dim(), 7);
            let mut hi = rayleigh_quotient(a, m, &probe)?;
            let mut lo = safe;
            for _ in 0..steps {
                let mid = T::lit(0.5) * (lo + hi);
                match count_below(a, m, mid) {
                    Ok(0) => lo = mid,
                    _ => hi = mid,
                }
            }
            Ok(if lo > T::zero() { T::lit(0.9) * lo } else { lo })
        }
    }
}

struct KrylovBasis<T> {
    v: Vec<Vec<T>>,
    mv: Vec<Vec<T>>,
    w: Vec<Vec<T>>,
    h: Vec<Vec<T>>,
}

impl<T: Real> KrylovBasis<T> {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// M-orthogonalizes `x` against the basis twice; returns its M-norm.
    fn orthogonalize(&self, x: &mut [T], m: &CsrMatrix<T>) -> T {
        for _ in 0..2 {
            for (vi, mvi) in self.v.iter().zip(&self.mv) {
                let c = dot(mvi, x);
                for (xk, vk) in x.iter_mut().zip(vi) {
                    *xk -= c * *vk;
                }
            }
        }
        m.quadratic_form(x).max(T::zero()).sqrt()
    }

    /// Appends the M-unit vector `x` and its image; fills the projected
    /// matrix row/column. Returns the new (unnormalized) residual direction.
    fn push(&mut self, x: Vec<T>, m: &CsrMatrix<T>, factor: &SkylineLdl<T>) -> Vec<T> {
        let mx = m.mul_vec(&x);
        let mut wx = mx.clone();
        factor.solve_in_place(&mut wx);
        let k = self.len();
        let col: Vec<T> = self.mv.iter().map(|mvi| dot(mvi, &wx)).chain(std::iter::once(dot(&mx, &wx))).collect();
        for (i, row) in self.h.iter_mut().enumerate() {
            row.push(col[i]);
        }
        self.h.push(col);
        debug_assert_eq!(self.h.len(), k + 1);
        let residual = wx.clone();
        self.v.push(x);
        self.mv.push(mx);
        self.w.push(wx);
        residual
    }

    fn ritz(&self, keep: usize) -> Result<(Vec<T>, Vec<Vec<T>>), DenseError> {
        let k = self.len();
        let mut neg = DenseMatrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                neg[(i, j)] = -T::lit(0.5) * (self.h[i][j] + self.h[j][i]);
            }
        }
        let eig = crate::dense::symmetric_lowest(neg, keep)?;
        let theta = eig.values[..keep].iter().map(|v| -*v).collect();
        Ok((theta, eig.vectors))
    }

    fn combine(cols: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); cols[0].len()];
        for (c, col) in coeffs.iter().zip(cols) {
            if *c != T::zero() {
                for (o, x) in out.iter_mut().zip(col) {
                    *o += *c * *x;
                }
            }
        }
        out
    }
}

fn solve_shift_invert<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    opts: &SolveOptions<T>,
) -> Result<SpectralResult<T>, SolveError> {
    let n = a.dim();
    let p = opts.count;
    let shift = choose_shift(a, m, opts.shift)?;
    let factor = SkylineLdl::factor(a, Some((m, -shift)))
        .map_err(|source| SolveError::Factorization { shift: shift.to_f64_lossy(), source })?;
    let kmax = opts.krylov_dim.unwrap_or((2 * p + 24).max(48)).min(n).max(p);
    let keep = (p + 8).max(kmax / 2).min(kmax.saturating_sub(1)).max(p);

    let mut basis = KrylovBasis { v: vec![], mv: vec![], w: vec![], h: vec![] };
    let mut next = start_vector::<T>(n, 0);
    let nrm = m.quadratic_form(&next).sqrt();
    next.iter_mut().for_each(|x| *x /= nrm);
    let mut salt = 1u64;
    let mut iterations = 0usize;
    let mut worst = T::infinity();

    for _restart in 0..=opts.max_restarts {
        while basis.len() < kmax {
            let mut r = basis.push(next.clone(), m, &factor);
            iterations += 1;
            let scale = m.quadratic_form(&r).max(T::zero()).sqrt();
            let beta = basis.orthogonalize(&mut r, m);
            if basis.len() == n {
                break;
            }
            if beta <= T::lit(1e-12) * scale.max(T::min_positive_value()) {
                // invariant subspace: continue with a fresh direction
                let mut fresh = start_vector::<T>(n, salt);
                salt += 1;
                let b = basis.orthogonalize(&mut fresh, m);
                fresh.iter_mut().for_each(|x| *x /= b);
                next = fresh;
                continue;
            }
            r.iter_mut().for_each(|x| *x /= beta);
            next = r;
        }

        let take = keep.min(basis.len());
        let (theta, coeffs) = basis.ritz(take)?;
        let pairs: Vec<(T, Vec<T>)> = theta[..p]
            .iter()
            .zip(&coeffs)
            .map(|(&t, s)| (shift + T::one() / t, KrylovBasis::combine(&basis.v, s)))
            .collect();
        let residuals: Vec<T> = pairs.iter().map(|(l, u)| relative_residual(a, m, *l, u)).collect();
        worst = residuals.iter().copied().fold(T::zero(), T::max);
        if worst <= opts.tol || basis.len() == n {
            let (eigenvalues, eigenvectors): (Vec<T>, Vec<Vec<T>>) = pairs.into_iter().unzip();
            if opts.verify_count {
                verify_count(a, m, &eigenvalues)?;
            }
            return Ok(SpectralResult {
                eigenvalues,
                eigenvectors,
                residuals,
                method: Method::ShiftInvert,
                iterations,
                n_dof: n,
                shift: Some(shift),
            });
        }

        // thick restart on the `take` dominant Ritz vectors
        let v: Vec<Vec<T>> = coeffs.iter().map(|s| KrylovBasis::combine(&basis.v, s)).collect();
        let mv: Vec<Vec<T>> = coeffs.iter().map(|s| KrylovBasis::combine(&basis.mv, s)).collect();
        let w: Vec<Vec<T>> = coeffs.iter().map(|s| KrylovBasis::combine(&basis.w, s)).collect();
        let h = (0..take)
            .map(|i| (0..take).map(|j| if i == j { theta[i] } else { T::zero() }).collect())
            .collect();
        basis = KrylovBasis { v, mv, w, h };
        let beta = basis.orthogonalize(&mut next, m);
        if beta > T::zero() {
            next.iter_mut().for_each(|x| *x /= beta);
        }
    }
    Err(SolveError::NoConvergence { iterations, worst: worst.to_f64_lossy() })
}

fn verify_count<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, eigenvalues: &[T]) -> Result<(), SolveError> {
    let top = *eigenvalues.last().expect("non-empty");
    let below = top - T::lit(1e-8) * top.abs().max(T::lit(1e-3));
    let found = count_below(a, m, below)?;
    let expected = eigenvalues.len() - 1;
    if found > expected {
        return Err(SolveError::MissedEigenvalue { below: below.to_f64_lossy(), found, expected });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CooBuilder;

    fn tridiag(n: usize) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
        let mut a = CooBuilder::new(n);
        let mut m = CooBuilder::new(n);
        for i in 0..n {
            a.push(i, i, 2.0);
            m.push(i, i, 1.0);
            if i + 1 < n {
                a.push(i, i + 1, -1.0);
                a.push(i + 1, i, -1.0);
            }
        }
        (a.build(), m.build())
    }

    fn exact(n: usize, k: usize) -> f64 {
        2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()
    }

    #[test]
    fn both_routes_match_closed_form() {
        let (a, m) = tridiag(300);
        for method in [Method::Dense, Method::ShiftInvert] {
            let r = solve_lowest(&a, &m, &SolveOptions::lowest(4).with_method(method)).unwrap();
            for (k, l) in r.eigenvalues.iter().enumerate() {
                assert!((l - exact(300, k + 1)).abs() < 1e-12, "{method:?} {k}");
            }
            assert!(m_gram_error(&m, &r.eigenvectors) < 1e-10);
            assert!(r.residuals.iter().all(|r| *r <= 1e-10));
        }
    }

    #[test]
    fn bracketed_shift_stays_below() {
        let (a, m) = tridiag(200);
        let mut opts = SolveOptions::lowest(2).with_method(Method::ShiftInvert);
        opts.shift = ShiftStrategy::Bracketed { steps: 30 };
        let r = solve_lowest(&a, &m, &opts).unwrap();
        assert!(r.shift.unwrap() < r.eigenvalues[0]);
        assert!((r.eigenvalues[0] - exact(200, 1)).abs() < 1e-12);
    }

    #[test]
    fn inertia_counts_agree_with_closed_form() {
        let (a, m) = tridiag(100);
        for s in [0.001, 0.1, 0.5, 1.9, 3.9] {
            let want = (1..=100).filter(|&k| exact(100, k) < s).count();
            assert_eq!(count_below(&a, &m, s).unwrap(), want);
        }
    }

    #[test]
    fn rayleigh_quotient_bounds_and_errors() {
        let (a, m) = tridiag(50);
        let u: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        assert!(rayleigh_quotient(&a, &m, &u).unwrap() >= exact(50, 1) - 1e-12);
        assert!(rayleigh_quotient(&a, &m, &vec![0.0; 50]).is_err());
    }

    #[test]
    fn rejects_bad_counts() {
        let (a, m) = tridiag(5);
        assert!(solve_lowest(&a, &m, &SolveOptions::lowest(0)).is_err());
        assert!(solve_lowest(&a, &m, &SolveOptions::lowest(6)).is_err());
    }

    #[test]
    fn small_krylov_space_restarts() {
        let (a, m) = tridiag(400);
        let mut opts = SolveOptions::lowest(3).with_method(Method::ShiftInvert);
        opts.krylov_dim = Some(12);
        let r = solve_lowest(&a, &m, &opts).unwrap();
        for (k, l) in r.eigenvalues.iter().enumerate() {
            assert!((l - exact(400, k + 1)).abs() < 1e-11);
        }
        assert!(r.iterations > 12);
    }
}
