//! Randomized checks of the Robin rectangle scaling inequalities.
//!
//! A P1 function on a rectangle mesh keeps its nodal values under the
//! affine map `(x, y) -> (αx, βy)`, so `φ̃(x, y) = φ(x/α, y/β)` is exactly
//! representable on the scaled mesh and both Rayleigh quotients are
//! evaluated without interpolation error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::assembly::assemble_polygon_forms;
use crate::geometry::{rectangle_mesh, BoundaryKind, Mesh};
use crate::randomness::derive_stream;
use crate::separable_robin::{mu_hat3, mu_square, mu_triangle_dirichlet_limit, robin_root};

pub const VIOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Proposition {
    /// Both directions stretched, `α, β ≥ 1`.
    A1,
    /// `α ≥ 1`, `1 > β > λ > 0`, right side weighted by `λ²`.
    A2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionCheck {
    pub proposition: Proposition,
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    /// Largest `rhs - lhs` seen (negative when every trial holds strictly).
    pub worst_gap: f64,
    /// Largest relative difference of the two quotients under `α = β = 1`.
    pub identity_error: f64,
}

/// `q[φ] / ‖φ‖²` with Robin terms from the mesh tags.
pub fn robin_quotient(mesh: &Mesh<f64>, phi: &[f64]) -> Result<f64, ExperimentError> {
    let forms = assemble_polygon_forms(mesh)?;
    let phi = forms.restrict_vec(phi);
    Ok(forms.operator().quadratic_form(&phi) / forms.mass.quadratic_form(&phi))
}

struct Trial {
    mesh: Mesh<f64>,
    phi: Vec<f64>,
    alpha: f64,
    beta: f64,
    lambda: f64,
}

fn random_trial(rng: &mut ChaCha8Rng, prop: Proposition) -> Result<Trial, ExperimentError> {
    let x0 = rng.gen_range(0.0..2.0);
    let y0 = rng.gen_range(0.0..2.0);
    let x1 = x0 + rng.gen_range(0.2..2.0);
    let y1 = y0 + rng.gen_range(0.2..2.0);
    let cells = [rng.gen_range(2..9usize), rng.gen_range(2..9usize)];
    let bcs: [BoundaryKind<f64>; 4] = std::array::from_fn(|_| {
        if rng.gen_bool(0.2) {
            BoundaryKind::Robin(0.0)
        } else {
            BoundaryKind::Robin(rng.gen_range(0.0..20.0))
        }
    });
    let mesh = rectangle_mesh([x0, x1], [y0, y1], cells, bcs)?;
    let phi = (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let alpha = 1.0 + rng.gen_range(0.0..2.0);
    let (beta, lambda) = match prop {
        Proposition::A1 => (1.0 + rng.gen_range(0.0..2.0), 1.0),
        Proposition::A2 => {
            let beta: f64 = rng.gen_range(0.05..1.0);
            (beta, beta * rng.gen_range(0.01..1.0))
        }
    };
    Ok(Trial { mesh, phi, alpha, beta, lambda })
}

/// Runs `trials` random rectangles and counts violations of
/// `q_1[φ]/‖φ‖² ≥ w q_2[φ̃]/‖φ̃‖² - 1e-10`, with `w = 1` for A1 and
/// `w = λ²` for A2. A2 trials are checked both at a random `λ < β` and at
/// the tightest `λ = β - 1e-6`.
pub fn check_proposition(prop: Proposition, trials: usize, seed: u64) -> Result<PropositionCheck, ExperimentError> {
    let mut violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut identity_error: f64 = 0.0;
    for t in 0..trials as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream(seed, t));
        let trial = random_trial(&mut rng, prop)?;
        let q1 = robin_quotient(&trial.mesh, &trial.phi)?;
        let q2 = robin_quotient(&trial.mesh.scaled(trial.alpha, trial.beta), &trial.phi)?;
        let weights: Vec<f64> = match prop {
            Proposition::A1 => vec![1.0],
            Proposition::A2 => vec![trial.lambda.powi(2), (trial.beta - 1e-6).powi(2)],
        };
        for w in weights {
            let gap = w * q2 - q1;
            worst_gap = worst_gap.max(gap);
            if gap > VIOLATION_TOL {
                violations += 1;
            }
        }
        let same = robin_quotient(&trial.mesh.scaled(1.0, 1.0), &trial.phi)?;
        identity_error = identity_error.max((same - q1).abs() / q1.abs().max(f64::MIN_POSITIVE));
    }
    Ok(PropositionCheck { proposition: prop, trials, seed, violations, worst_gap, identity_error })
}

pub fn check_prop_a1(trials: usize, seed: u64) -> Result<PropositionCheck, ExperimentError> {
    check_proposition(Proposition::A1, trials, seed)
}

pub fn check_prop_a2(trials: usize, seed: u64) -> Result<PropositionCheck, ExperimentError> {
    check_proposition(Proposition::A2, trials, seed)
}

/// One row of the comparison-eigenvalue table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    #[serde(with = "super::report::extended_f64")]
    pub gamma: f64,
    pub robin_root: f64,
    pub mu_square: f64,
    pub mu_hat3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTable {
    pub d: f64,
    pub delta: f64,
    pub eta: f64,
    /// Line `a = d/2 - δ`.
    pub a: f64,
    pub rows: Vec<MuRow>,
    pub triangle_dirichlet_limit: f64,
    pub threshold: f64,
}

/// Comparison eigenvalues at `a = d/2 - δ` over a `γ` sweep ending at `∞`.
pub fn mu_table(d: f64, eta: f64, delta: f64) -> MuTable {
    let a = 0.5 * d - delta;
    let gammas = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, f64::INFINITY];
    let rows = gammas
        .iter()
        .map(|&gamma| MuRow {
            gamma,
            robin_root: robin_root(a, gamma),
            mu_square: mu_square(a, gamma),
            mu_hat3: mu_hat3(a, gamma, d),
        })
        .collect();
    MuTable {
        d,
        delta,
        eta,
        a,
        rows,
        triangle_dirichlet_limit: mu_triangle_dirichlet_limit(eta, delta, d),
        threshold: super::threshold_energy(d),
    }
}
