//! Small statistics helpers.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Interval {
    assert!(trials > 0 && successes <= trials, "need 0 <= successes <= trials, trials > 0");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // pin the exact endpoints so that k = 0 gives lo = 0 and k = n gives hi = 1
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    Interval { lo, hi }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need two points");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Removes the `h^order` term from values at pitches `h` and `h / ratio`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let r = ratio.powf(order);
    (r * fine - coarse) / (r - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // textbook case 8 / 10
        let w = wilson_interval(8, 10, Z95);
        assert!((w.lo - 0.490_162).abs() < 1e-6);
        assert!((w.hi - 0.943_318).abs() < 1e-6);
        let zero = wilson_interval(0, 200, Z95);
        assert_eq!(zero.lo, 0.0);
        assert!(zero.hi > 0.0 && zero.hi < 0.02);
        let one = wilson_interval(1, 200, Z95);
        assert!(one.lo > 0.0);
    }

    #[test]
    fn interval_contains_estimate() {
        for n in [1usize, 7, 50, 200] {
            for k in 0..=n {
                let w = wilson_interval(k, n, Z95);
                let p = k as f64 / n as f64;
                assert!(w.lo <= p + 1e-15 && p <= w.hi + 1e-15);
            }
        }
    }

    #[test]
    fn slopes_and_extrapolation() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((log_log_slope(&h, &e) - 2.0).abs() < 1e-12);
        let f = |x: f64| 5.0 + 2.0 * x * x;
        assert!((richardson(f(0.2), f(0.1), 2.0, 2.0) - 5.0).abs() < 1e-12);
    }
}
