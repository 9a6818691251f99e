use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ground_state::{
    classify_discrete, ground_state, mesh_lowest, small_solve_options, strip_solve_options, threshold_energy, uniform,
    Classification,
};
use super::ExperimentError;
use crate::assembly::SigmaProfile;
use crate::geometry::{build_polygon_mesh, BoundaryKind, DiagonalSplit, PolygonSpec, StripSpec};
use crate::separable_robin::{mu_hat3, mu_square};

/// FEM ground state of the corner triangle with legs `leg`, Robin `gamma`
/// on both legs and a Neumann hypotenuse, meshed with `cells` per leg.
pub fn triangle_robin_fem(leg: f64, gamma: f64, cells: usize) -> Result<f64, ExperimentError> {
    let robin = BoundaryKind::Robin(gamma);
    let spec = PolygonSpec {
        vertices: vec![[0.0, 0.0], [leg, 0.0], [0.0, leg]],
        edge_tags: vec![robin, BoundaryKind::Neumann, robin],
        h: leg / cells as f64,
        diagonal_split: DiagonalSplit::Anti,
    };
    let mesh = build_polygon_mesh(&spec)?;
    Ok(mesh_lowest(&mesh, &small_solve_options())?.eigenvalues[0])
}

/// `μ_1 … μ_4` at Robin constant `gamma` for the dissection line `a`:
/// the corner square and the separable rectangle bound in closed form, the
/// triangle by FEM. `μ_4 = μ_3` by congruence.
pub fn subdomain_mus(d: f64, a: f64, gamma: f64, cells: usize) -> Result<[f64; 4], ExperimentError> {
    if !(a > 0.0 && a < 0.5 * d) {
        return Err(ExperimentError::InvalidInput(format!("dissection line a = {a} must lie in (0, d/2)")));
    }
    let mu1 = mu_square(a, gamma);
    let mu2 = triangle_robin_fem(d - 2.0 * a, gamma, cells)?;
    let mu3 = mu_hat3(a, gamma, d);
    Ok([mu1, mu2, mu3, mu3])
}

/// Closed-form `γ = ∞` values of the four bounds.
pub fn subdomain_limits(d: f64, a: f64) -> [f64; 4] {
    let mu1 = mu_square(a, f64::INFINITY);
    let mu2 = 2.0 * PI * PI / (d - 2.0 * a).powi(2);
    let mu3 = mu_hat3(a, f64::INFINITY, d);
    [mu1, mu2, mu3, mu3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub d: f64,
    pub eta: f64,
    pub delta: f64,
    pub a_grid: Vec<f64>,
    pub fem_cells: usize,
    /// Smallest `γ` found with every margin positive at `γ / 2`.
    pub gamma_hat: f64,
    /// Lower end of the final bracket: some margin is `<= 0` at `γ_lo / 2`.
    pub gamma_lo: f64,
    /// `min_a μ_l(γ̂ / 2, a) - π² / 2d²` for `l = 1..4`.
    pub margins: [f64; 4],
    pub margins_lo: [f64; 4],
    /// The same margins in the `γ = ∞` limit.
    pub limit_margins: [f64; 4],
}

fn min_margins(rows: impl Iterator<Item = [f64; 4]>, threshold: f64) -> [f64; 4] {
    rows.fold([f64::INFINITY; 4], |acc, mu| std::array::from_fn(|l| acc[l].min(mu[l] - threshold)))
}

/// `a`-grid over `[(d/2 - δ)/η, d/2 - δ]`.
pub fn dissection_grid(d: f64, eta: f64, delta: f64, points: usize) -> Vec<f64> {
    let hi = 0.5 * d - delta;
    let lo = hi / eta;
    if points <= 1 {
        return vec![hi];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Bisection in `log γ` on the predicate "every `μ_l(γ/2, a) > π²/2d²` on
/// the grid".
pub fn estimate_gamma(d: f64, eta: f64, delta: f64, points: usize, cells: usize) -> Result<ThresholdEstimate, ExperimentError> {
    if !(d > 0.0) || !(eta > 1.0) || !(delta > 0.0 && delta < 0.5 * d) || points == 0 || cells < 2 {
        return Err(ExperimentError::InvalidInput("need d > 0, eta > 1, 0 < delta < d/2, points >= 1, cells >= 2".into()));
    }
    let threshold = threshold_energy(d);
    let a_grid = dissection_grid(d, eta, delta, points);
    let limit_margins = min_margins(a_grid.iter().map(|&a| subdomain_limits(d, a)), threshold);
    if limit_margins.iter().any(|m| *m <= 0.0) {
        return Err(ExperimentError::PredicateFailsAtInfinity(format!(
            "margins at gamma = inf are {limit_margins:?}; choose eta closer to 1 or a smaller delta"
        )));
    }
    let margins_at = |gamma: f64| -> Result<[f64; 4], ExperimentError> {
        let rows = a_grid
            .iter()
            .map(|&a| subdomain_mus(d, a, 0.5 * gamma, cells))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(min_margins(rows.into_iter(), threshold))
    };
    let holds = |m: &[f64; 4]| m.iter().all(|x| *x > 0.0);

    let mut hi = 1.0 / d;
    let mut m_hi = margins_at(hi)?;
    let mut lo;
    let mut m_lo;
    if holds(&m_hi) {
        loop {
            lo = hi / 4.0;
            m_lo = margins_at(lo)?;
            if !holds(&m_lo) {
                break;
            }
            if lo < 1e-12 {
                return Err(ExperimentError::InvalidInput("predicate holds for every gamma tried".into()));
            }
            hi = lo;
            m_hi = m_lo;
        }
    } else {
        loop {
            lo = hi;
            m_lo = m_hi;
            hi *= 4.0;
            if hi > 1e14 {
                return Err(ExperimentError::PredicateFailsAtInfinity(format!("no finite gamma below {hi:e} works")));
            }
            m_hi = margins_at(hi)?;
            if holds(&m_hi) {
                break;
            }
        }
    }
    while hi / lo > 1.0 + 1e-4 {
        let mid = (lo * hi).sqrt();
        let m = margins_at(mid)?;
        if holds(&m) {
            hi = mid;
            m_hi = m;
        } else {
            lo = mid;
            m_lo = m;
        }
    }
    Ok(ThresholdEstimate {
        d,
        eta,
        delta,
        a_grid,
        fem_cells: cells,
        gamma_hat: hi,
        gamma_lo: lo,
        margins: m_hi,
        margins_lo: m_lo,
        limit_margins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DestructionCheck {
    pub d: f64,
    pub a_k: f64,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub tau: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub error_bar: f64,
    pub class: Classification,
    /// `μ_l(γ/2, a_k)` for `l = 1..4`.
    pub mu: [f64; 4],
    /// Every `μ_l(γ/2, a_k)` exceeds `π² / 2d²`.
    pub bounds_clear: bool,
    /// False only if every bound clears the threshold and FEM still says `NONEMPTY`.
    pub consistent: bool,
}

/// Single atom at `a_k` with coupling `γ`: FEM classification against the
/// analytic subdomain bounds.
pub fn verify_destruction_config(
    d: f64,
    a_k: f64,
    gamma: f64,
    l: f64,
    m: usize,
    tau: f64,
    cells: usize,
) -> Result<DestructionCheck, ExperimentError> {
    let spec = StripSpec::new(d, l, m)?;
    let gs = ground_state(&spec, &[a_k], &uniform(SigmaProfile::constant(gamma)), &strip_solve_options(1))?;
    let class = classify_discrete(gs.e0, gs.error_bar, d, tau);
    let mu = subdomain_mus(d, a_k, 0.5 * gamma, cells)?;
    let bounds_clear = mu.iter().all(|&x| x > threshold_energy(d));
    Ok(DestructionCheck {
        d,
        a_k,
        gamma,
        l,
        m,
        tau,
        e0: gs.e0,
        error_bar: gs.error_bar,
        class,
        mu,
        bounds_clear,
        consistent: !(bounds_clear && class == Classification::Nonempty),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = dissection_grid(1.0, 1.05, 0.02, 5);
        assert!((g[4] - 0.48).abs() < 1e-15);
        assert!((g[0] - 0.48 / 1.05).abs() < 1e-15);
    }

    #[test]
    fn limits_clear_threshold_for_default_window() {
        let t = threshold_energy(1.0);
        for a in dissection_grid(1.0, 1.05, 0.02, 7) {
            assert!(subdomain_limits(1.0, a).iter().all(|m| *m > t));
        }
    }

    #[test]
    fn wide_window_fails_at_infinity() {
        // a near 0.2 d puts the separable rectangle bound below π² / 2d²
        let err = estimate_gamma(1.0, 2.5, 0.02, 3, 8).unwrap_err();
        assert!(matches!(err, ExperimentError::PredicateFailsAtInfinity(_)));
    }
}
