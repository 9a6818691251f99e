use serde::{Deserialize, Serialize};

use super::ground_state::{ground_state, strip_solve_options};
use super::stats::{log_log_slope, richardson};
use super::ExperimentError;
use crate::assembly::SigmaAssignment;
use crate::geometry::StripSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub h: f64,
    pub e0: f64,
    pub residual: f64,
    pub n_dof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub entries: Vec<ConvergenceEntry>,
    /// Richardson value in `h` at the largest `L` from the two finest `M`.
    pub extrapolated: f64,
    /// `|E0(finest) - extrapolated| + |E0(L_max) - E0(L_max-1)|`.
    pub error_bar: f64,
    /// Log-log slope of successive differences in `h` at the largest `L`,
    /// when at least three `M` values are given.
    pub observed_order: Option<f64>,
}

impl ConvergenceStudy {
    pub fn value(&self, l: f64, m: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.l == l && e.m == m).map(|e| e.e0)
    }
}

fn ascending(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// Grid of ground-state energies over `l_list × m_list`.
///
/// Nested spaces make `E0` nonincreasing in `L` at fixed pitch, and in `M`
/// when each `M` divides the next; a violation beyond rounding is reported
/// as a solver failure.
pub fn convergence_study(
    d: f64,
    atoms: &[f64],
    sigma: &SigmaAssignment<f64>,
    l_list: &[f64],
    m_list: &[usize],
) -> Result<ConvergenceStudy, ExperimentError> {
    let ms: Vec<f64> = m_list.iter().map(|&m| m as f64).collect();
    if l_list.is_empty() || m_list.len() < 2 || !ascending(l_list) || !ascending(&ms) {
        return Err(ExperimentError::InvalidInput(
            "need an ascending L-list and at least two ascending M values".into(),
        ));
    }
    let opts = strip_solve_options(1);
    let mut entries = Vec::new();
    for &l in l_list {
        for &m in m_list {
            let spec = StripSpec::new(d, l, m)?;
            let gs = ground_state(&spec, atoms, sigma, &opts)?;
            entries.push(ConvergenceEntry {
                l,
                m,
                h: spec.h(),
                e0: gs.e0,
                residual: gs.spectrum.residuals[0],
                n_dof: gs.spectrum.n_dof,
            });
        }
    }
    let at = |l: f64, m: usize| entries.iter().find(|e| e.l == l && e.m == m).expect("grid entry").e0;
    let slack = |e: f64| 1e-9 * e.abs().max(1.0);
    for &m in m_list {
        for w in l_list.windows(2) {
            let (a, b) = (at(w[0], m), at(w[1], m));
            if b > a + slack(a) {
                return Err(ExperimentError::NonMonotone(format!("E0 rises from {a} to {b} as L grows {} -> {} at M = {m}", w[0], w[1])));
            }
        }
    }
    for &l in l_list {
        for w in m_list.windows(2) {
            if w[1] % w[0] != 0 {
                continue;
            }
            let (a, b) = (at(l, w[0]), at(l, w[1]));
            if b > a + slack(a) {
                return Err(ExperimentError::NonMonotone(format!("E0 rises from {a} to {b} as M grows {} -> {} at L = {l}", w[0], w[1])));
            }
        }
    }

    let l_max = *l_list.last().expect("non-empty");
    let (m1, m2) = (m_list[m_list.len() - 2], m_list[m_list.len() - 1]);
    let fine = at(l_max, m2);
    let extrapolated = richardson(at(l_max, m1), fine, m2 as f64 / m1 as f64, 2.0);
    let truncation = if l_list.len() >= 2 { (fine - at(l_list[l_list.len() - 2], m2)).abs() } else { 0.0 };
    let error_bar = (fine - extrapolated).abs() + truncation;

    let observed_order = (m_list.len() >= 3).then(|| {
        let hs: Vec<f64> = m_list[..m_list.len() - 1].iter().map(|&m| d / m as f64).collect();
        let diffs: Vec<f64> = m_list.windows(2).map(|w| (at(l_max, w[0]) - at(l_max, w[1])).abs()).collect();
        log_log_slope(&hs, &diffs)
    });

    Ok(ConvergenceStudy { entries, extrapolated, error_bar, observed_order })
}
