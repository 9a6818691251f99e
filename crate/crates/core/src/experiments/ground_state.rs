use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::assembly::{assemble_hamiltonian, assemble_polygon_forms, AssembledForms, SigmaAssignment, SigmaProfile};
use crate::eigensolve::{count_below, solve_lowest, Method, SolveOptions, SpectralResult};
use crate::geometry::{build_polygon_mesh, build_strip_mesh, snap_atoms, Mesh, PolygonSpec, StripSpec};

/// Bottom of the essential spectrum, `π² / 2d²`.
pub fn threshold_energy(d: f64) -> f64 {
    PI * PI / (2.0 * d * d)
}

/// Default classification margin: 5% of the threshold.
pub fn default_tau(d: f64) -> f64 {
    0.05 * threshold_energy(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Nonempty,
    Empty,
    Undecided,
}

impl Classification {
    pub const ALL: [Classification; 3] = [Classification::Nonempty, Classification::Empty, Classification::Undecided];
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Nonempty => "NONEMPTY",
            Classification::Empty => "EMPTY",
            Classification::Undecided => "UNDECIDED",
        })
    }
}

impl FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NONEMPTY" => Ok(Classification::Nonempty),
            "EMPTY" => Ok(Classification::Empty),
            "UNDECIDED" => Ok(Classification::Undecided),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

/// Decides whether a discrete eigenvalue exists below `π² / 2d²`.
///
/// `NONEMPTY` needs `E0 + error_bar + τ` below the threshold. The computed
/// `E0` is an upper bound for the true ground state (truncation and
/// conforming elements both raise it), so `EMPTY` (`E0 ≥ threshold - τ`)
/// carries that caveat.
pub fn classify_discrete(e0: f64, error_bar: f64, d: f64, tau: f64) -> Classification {
    let threshold = threshold_energy(d);
    if e0 + error_bar + tau < threshold {
        Classification::Nonempty
    } else if e0 >= threshold - tau {
        Classification::Empty
    } else {
        Classification::Undecided
    }
}

/// Lowest eigenpairs of one strip configuration.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub e0: f64,
    pub error_bar: f64,
    pub spectrum: SpectralResult<f64>,
    /// Ground state on all mesh nodes (zero on Dirichlet nodes).
    pub eigenvector: Vec<f64>,
    pub snapped_atoms: Vec<f64>,
    pub snap_error: f64,
}

/// Per-atom profiles after snapping; atoms merged onto one grid line add
/// their couplings.
pub fn snapped_sigma(
    sigma: &SigmaAssignment<f64>,
    raw_atoms: usize,
    source: &[usize],
    lines: usize,
) -> Result<SigmaAssignment<f64>, ExperimentError> {
    if let SigmaAssignment::PerAtom(list) = sigma {
        if list.len() != raw_atoms {
            return Err(ExperimentError::InvalidInput(format!(
                "{} per-atom couplings given for {raw_atoms} atoms",
                list.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(lines);
    for line in 0..lines {
        let members: Vec<usize> = (0..raw_atoms).filter(|&k| source[k] == line).collect();
        let first = sigma.for_atom(members[0]).expect("checked length").clone();
        if members.iter().any(|&k| sigma.for_atom(k) != Some(&first)) {
            return Err(ExperimentError::InvalidInput(format!(
                "atoms {members:?} snap to one grid line but carry different couplings"
            )));
        }
        out.push(first.scaled(members.len() as f64));
    }
    Ok(SigmaAssignment::PerAtom(out))
}

/// Mesh, reduced forms, snapped atom positions and the largest snap shift.
pub type StripForms = (Mesh<f64>, AssembledForms<f64>, Vec<f64>, f64);

/// Snaps the atoms, meshes and assembles the strip problem.
pub fn strip_forms(
    spec: &StripSpec<f64>,
    atoms: &[f64],
    sigma: &SigmaAssignment<f64>,
) -> Result<StripForms, ExperimentError> {
    spec.validate()?;
    let snapped = snap_atoms(atoms, spec.h())?;
    let sigma = snapped_sigma(sigma, atoms.len(), &snapped.source, snapped.positions.len())?;
    let mesh = build_strip_mesh(spec, &snapped.positions)?;
    let forms = assemble_hamiltonian(&mesh, &sigma)?;
    Ok((mesh, forms, snapped.positions, snapped.max_error))
}

pub fn ground_state(
    spec: &StripSpec<f64>,
    atoms: &[f64],
    sigma: &SigmaAssignment<f64>,
    opts: &SolveOptions<f64>,
) -> Result<GroundState, ExperimentError> {
    let (_, forms, snapped_atoms, snap_error) = strip_forms(spec, atoms, sigma)?;
    let spectrum = solve_lowest(&forms.operator(), &forms.mass, opts)?;
    let eigenvector = forms.extend(&spectrum.eigenvectors[0]);
    Ok(GroundState {
        e0: spectrum.eigenvalues[0],
        error_bar: spectrum.error_bar(0),
        spectrum,
        eigenvector,
        snapped_atoms,
        snap_error,
    })
}

/// Number of eigenvalues below `level` from the inertia of the assembled
/// strip problem; no eigenvectors are computed.
pub fn count_strip_eigenvalues(
    spec: &StripSpec<f64>,
    atoms: &[f64],
    sigma: &SigmaAssignment<f64>,
    level: f64,
) -> Result<usize, ExperimentError> {
    let (_, forms, _, _) = strip_forms(spec, atoms, sigma)?;
    Ok(count_below(&forms.operator(), &forms.mass, level)?)
}

/// Lowest eigenpairs of a polygon mesh with its own boundary tags.
pub fn polygon_lowest(spec: &PolygonSpec<f64>, opts: &SolveOptions<f64>) -> Result<SpectralResult<f64>, ExperimentError> {
    let mesh = build_polygon_mesh(spec)?;
    mesh_lowest(&mesh, opts)
}

pub fn mesh_lowest(mesh: &Mesh<f64>, opts: &SolveOptions<f64>) -> Result<SpectralResult<f64>, ExperimentError> {
    let forms = assemble_polygon_forms(mesh)?;
    Ok(solve_lowest(&forms.operator(), &forms.mass, opts)?)
}

/// Solver options used by the strip experiments.
pub fn strip_solve_options(count: usize) -> SolveOptions<f64> {
    SolveOptions::lowest(count)
}

/// Shift-invert options for many small solves.
pub fn small_solve_options() -> SolveOptions<f64> {
    SolveOptions::lowest(1).with_method(Method::ShiftInvert)
}

pub fn uniform(profile: SigmaProfile<f64>) -> SigmaAssignment<f64> {
    SigmaAssignment::Uniform(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(classify_discrete(4.0, 0.05, 1.0, 0.1), Classification::Nonempty);
        assert_eq!(classify_discrete(4.8, 0.05, 1.0, 0.1), Classification::Undecided);
        assert_eq!(classify_discrete(5.4, 0.05, 1.0, 0.1), Classification::Empty);
    }

    #[test]
    fn merged_atoms_add_couplings() {
        let sigma = uniform(SigmaProfile::constant(2.0));
        let out = snapped_sigma(&sigma, 3, &[0, 0, 1], 2).unwrap();
        assert_eq!(
            out,
            SigmaAssignment::PerAtom(vec![SigmaProfile::constant(4.0), SigmaProfile::constant(2.0)])
        );
        let mixed = SigmaAssignment::PerAtom(vec![SigmaProfile::constant(1.0), SigmaProfile::constant(2.0)]);
        assert!(snapped_sigma(&mixed, 2, &[0, 0], 1).is_err());
    }
}
