//! Poisson atom configurations with reproducible per-sample streams.
//!
//! Stream seeds come from [`derive_stream`]:
//!
//! ```text
//! z = master + (index + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! seed = z ^ (z >> 31)
//! ```
//!
//! that is, the SplitMix64 output function. Each stream seeds a ChaCha8
//! generator; gaps are `-ln(u) / ν` with `u` uniform on the open interval
//! `(0, 1)`.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for stream `index` of `master`. Distinct indices map to distinct
/// seeds because the increment is odd and the finalizer is a bijection.
pub fn derive_stream(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One realization of the atom positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfiguration {
    pub nu: f64,
    pub atoms: Vec<f64>,
    pub horizon: f64,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    pub stream_index: u64,
}

impl AtomConfiguration {
    /// Samples stream `stream_index` of `master_seed`.
    pub fn sample(nu: f64, horizon: f64, master_seed: u64, stream_index: u64) -> Self {
        assert!(nu > 0.0 && horizon > 0.0, "need nu > 0 and horizon > 0");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream(master_seed, stream_index));
        let mut atoms = Vec::new();
        let mut a = 0.0;
        loop {
            let u: f64 = rng.sample(Open01);
            a += -u.ln() / nu;
            if a > horizon {
                break;
            }
            atoms.push(a);
        }
        AtomConfiguration { nu, atoms, horizon, master_seed, stream_index }
    }

    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.atoms
            .iter()
            .map(|&a| {
                let g = a - prev;
                prev = a;
                g
            })
            .collect()
    }
}

/// Stream 0 of `seed`.
pub fn sample_configuration(nu: f64, horizon: f64, seed: u64) -> AtomConfiguration {
    AtomConfiguration::sample(nu, horizon, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn splitmix_reference_values() {
        // SplitMix64 seeded with 0 yields 0xE220A8397B1DCDAF first
        assert_eq!(derive_stream(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_stream(7, 3), derive_stream(7, 3));
    }

    #[test]
    fn neighbouring_indices_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let s: u64 = rng.gen();
            assert_ne!(derive_stream(s, 0), derive_stream(s, 1));
        }
    }

    #[test]
    fn halves_are_uniform() {
        let bins = 64usize;
        let draws = 100_000u64;
        let chi = ChiSquared::new((bins - 1) as f64).unwrap();
        for shift in [0u32, 32] {
            let mut counts = vec![0f64; bins];
            for i in 0..draws {
                let half = (derive_stream(0xDEAD_BEEF, i) >> shift) as u32;
                counts[(half >> 26) as usize] += 1.0;
            }
            let expect = draws as f64 / bins as f64;
            let stat: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
            let p = 1.0 - chi.cdf(stat);
            assert!(p > 0.001, "shift {shift}: chi2 = {stat}, p = {p}");
        }
    }

    #[test]
    fn same_seed_same_atoms() {
        let a = sample_configuration(1.0, 10.0, 99);
        let b = sample_configuration(1.0, 10.0, 99);
        assert_eq!(a, b);
        assert!(a.atoms.windows(2).all(|w| w[1] > w[0]));
        assert!(a.atoms.iter().all(|&x| x > 0.0 && x <= 10.0));
    }

    #[test]
    fn count_and_gap_moments() {
        let n = 10_000;
        let (mut sum, mut sum2, mut gaps, mut ngaps) = (0.0, 0.0, 0.0, 0usize);
        for s in 0..n {
            let c = AtomConfiguration::sample(1.0, 10.0, 2024, s);
            let k = c.atoms.len() as f64;
            sum += k;
            sum2 += k * k;
            // later gaps are biased by the horizon cut; the first one is not (to ~e^-10)
            if let Some(g) = c.gaps().first() {
                gaps += g;
                ngaps += 1;
            }
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((mean - 10.0).abs() < 0.3, "mean {mean}");
        // variance of the sample variance of Poisson(10): (μ + 2μ²) / n
        let se_var = ((10.0 + 2.0 * 100.0) / n as f64).sqrt();
        assert!((var - 10.0).abs() < 3.0 * se_var, "var {var}");
        assert!((gaps / ngaps as f64 - 1.0).abs() < 0.04, "first gap mean {}", gaps / ngaps as f64);
    }

    #[test]
    fn gaps_pass_kolmogorov_smirnov() {
        let nu = 2.5;
        let mut gaps: Vec<f64> = (0..400)
            .flat_map(|s| AtomConfiguration::sample(nu, 20.0, 5, s).gaps())
            .collect();
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        let d = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let f = 1.0 - (-nu * g).exp();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at significance 0.001
        assert!(d < 1.9495 / n.sqrt(), "D = {d} over {n} gaps");
    }

    #[test]
    fn tiny_intensity_is_empty() {
        assert!((0..1000).all(|s| sample_configuration(1e-9, 1.0, s).atoms.is_empty()));
    }

    #[test]
    fn json_roundtrip() {
        let c = sample_configuration(1.0, 5.0, 3);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"seed\":3"));
        let back: AtomConfiguration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
