//! One-dimensional Robin eigenvalues and the separable comparison bounds
//! built from them.
//!
//! The Robin form adds `+γ |u|²` on the boundary, so the natural condition
//! is `∂u/∂n + γ u = 0`.

use serde::{Deserialize, Serialize};

use crate::geometry::BoundaryKind;
use crate::scalar::Real;

/// Interval `[0, length]` with a condition at each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinInterval<T> {
    pub length: T,
    pub left: BoundaryKind<T>,
    pub right: BoundaryKind<T>,
}

/// `atan(γ / k)`, with Dirichlet as `γ = ∞`.
fn phase<T: Real>(bc: &BoundaryKind<T>, k: T) -> T {
    match *bc {
        BoundaryKind::Neumann => T::zero(),
        BoundaryKind::Dirichlet => T::FRAC_PI_2(),
        BoundaryKind::Robin(g) if g.is_infinite() => T::FRAC_PI_2(),
        BoundaryKind::Robin(g) => (g / k).atan(),
    }
}

fn is_natural<T: Real>(bc: &BoundaryKind<T>) -> bool {
    match *bc {
        BoundaryKind::Neumann => true,
        BoundaryKind::Robin(g) => g == T::zero(),
        BoundaryKind::Dirichlet => false,
    }
}

impl<T: Real> RobinInterval<T> {
    pub fn new(length: T, left: BoundaryKind<T>, right: BoundaryKind<T>) -> Self {
        RobinInterval { length, left, right }
    }

    /// Lowest eigenvalue of `-u''`.
    ///
    /// With `u = cos(kx - α)` the two end conditions read
    /// `kℓ = atan(γ_l / k) + atan(γ_r / k)`; the left side minus the right
    /// side is increasing in `k`, and the lowest root lies in `(0, π/ℓ]`.
    pub fn lowest(&self) -> T {
        assert!(self.length > T::zero(), "interval length must be positive");
        if is_natural(&self.left) && is_natural(&self.right) {
            return T::zero();
        }
        let l = self.length;
        let g = |k: T| k * l - phase(&self.left, k) - phase(&self.right, k);
        let mut lo = T::zero();
        let mut hi = T::PI() / l;
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::lit(1e-15) * hi {
                break;
            }
        }
        let k = T::lit(0.5) * (lo + hi);
        k * k
    }
}

/// Lowest eigenvalue on `[0, ℓ]` with Neumann at 0 and Robin `γ` at `ℓ`:
/// the root of `√μ tan(√μ ℓ) = γ` with `√μ ℓ ∈ (0, π/2)`.
///
/// `γ = 0` gives 0 and `γ = ∞` gives `(π / 2ℓ)²`.
pub fn robin_root<T: Real>(length: T, gamma: T) -> T {
    RobinInterval::new(length, BoundaryKind::Neumann, BoundaryKind::Robin(gamma)).lowest()
}

/// Square `[0, a]²`, Neumann on the axes and Robin on `x = a`, `y = a`.
pub fn mu_square<T: Real>(a: T, gamma: T) -> T {
    T::lit(2.0) * robin_root(a, gamma)
}

/// Rectangle `[0, a] × [a, 2d - a]` with Robin on its horizontal sides and
/// Neumann on the vertical ones. Symmetry halves it to a Neumann/Robin
/// interval of length `d - a`.
pub fn mu_hat3<T: Real>(a: T, gamma: T, d: T) -> T {
    assert!(a > T::zero() && a < d, "need 0 < a < d");
    robin_root(d - a, gamma)
}

/// Rectangle with independent conditions in each direction.
pub fn rectangle_lowest<T: Real>(x: &RobinInterval<T>, y: &RobinInterval<T>) -> T {
    x.lowest() + y.lowest()
}

/// Leg length `l₂ = d(1 - 1/η) + 2δ/η` of the comparison triangle.
pub fn triangle_leg<T: Real>(eta: T, delta: T, d: T) -> T {
    d * (T::one() - T::one() / eta) + T::lit(2.0) * delta / eta
}

/// `2π² / l₂²`: the isosceles right triangle with Dirichlet legs and a
/// Neumann hypotenuse reflects to the Dirichlet square of side `l₂`.
pub fn mu_triangle_dirichlet_limit<T: Real>(eta: T, delta: T, d: T) -> T {
    let l2 = triangle_leg(eta, delta, d);
    T::lit(2.0) * T::PI() * T::PI() / (l2 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // independent oracle: plain bisection on x tan x = γ ℓ in (0, π/2)
    fn oracle(l: f64, gamma: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, PI / 2.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.tan() < gamma * l {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        (x / l).powi(2)
    }

    #[test]
    fn limits_and_known_root() {
        assert_eq!(robin_root(1.0, 0.0), 0.0);
        assert!((robin_root(1.0, f64::INFINITY) - PI * PI / 4.0).abs() < 1e-12);
        let mu: f64 = robin_root(1.0, 1.0);
        assert!((mu.sqrt() - 0.860_333_589_019_380).abs() < 1e-12);
        assert!((mu - 0.740_174).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_tangent_oracle() {
        for &l in &[0.1, 0.45, 1.0, 3.0] {
            for &g in &[1e-3, 0.5, 1.0, 7.0, 50.0, 1e4] {
                let got = robin_root(l, g);
                let want = oracle(l, g);
                assert!((got - want).abs() <= 1e-12 * want, "l={l} g={g}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn robin_zero_is_neumann_and_other_endpoints() {
        let n = RobinInterval::new(2.0, BoundaryKind::Robin(0.0), BoundaryKind::Dirichlet);
        let m = RobinInterval::new(2.0, BoundaryKind::Neumann, BoundaryKind::Dirichlet);
        assert_eq!(n.lowest(), m.lowest());
        assert!((m.lowest() - (PI / 4.0).powi(2)).abs() < 1e-12);
        let dd = RobinInterval::new(2.0, BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
        assert!((dd.lowest() - (PI / 2.0).powi(2)).abs() < 1e-12);
        // symmetric Robin/Robin on 2ℓ equals Neumann/Robin on ℓ
        let rr = RobinInterval::new(2.0f64, BoundaryKind::Robin(3.0), BoundaryKind::Robin(3.0));
        assert!((rr.lowest() - robin_root(1.0, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert!((mu_square(0.5, f64::INFINITY) - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(mu_square(0.3, 0.0), 0.0);
        let delta = 0.05;
        let got = mu_hat3(0.5 - delta, f64::INFINITY, 1.0);
        assert!((got - PI * PI / 1.21).abs() < 1e-12);
        assert!((mu_triangle_dirichlet_limit(2.0, 0.0, 1.0) - 8.0 * PI * PI).abs() < 1e-12);
        let near = mu_triangle_dirichlet_limit(1.0 + 1e-12, 0.05, 1.0);
        assert!((near - 2.0 * PI * PI / 0.01).abs() < 1e-6);
    }

    #[test]
    fn monotone_in_gamma_and_length() {
        let gammas: Vec<f64> = (0..40).map(|i| 10f64.powf(-3.0 + 0.2 * i as f64)).collect();
        let mus: Vec<f64> = gammas.iter().map(|&g| robin_root(1.0, g)).collect();
        assert!(mus.windows(2).all(|w| w[1] > w[0]));
        assert!(*mus.last().unwrap() < PI * PI / 4.0);
        let lens = [0.2, 0.4, 0.8, 1.6, 3.2];
        let mus: Vec<f64> = lens.iter().map(|&l| robin_root(l, 2.0)).collect();
        assert!(mus.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn single_precision() {
        let mu = robin_root(1.0f32, 1.0);
        assert!((mu - 0.740_174).abs() < 1e-5);
    }
}
