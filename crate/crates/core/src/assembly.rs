//! Discrete quadratic form of the molecule Hamiltonian: P1 stiffness and
//! mass matrices, weighted trace matrices on interaction lines and Robin
//! edges, and elimination of Dirichlet nodes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Chain, EdgeTag, Mesh};
use crate::scalar::Real;
use crate::sparse::{CooBuilder, CsrMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("an infinite coupling must be imposed by Dirichlet elimination, not as a trace matrix")]
    InfiniteTrace,
    #[error("coupling profile invalid: {0}")]
    InvalidProfile(String),
    #[error("no free degrees of freedom remain after Dirichlet elimination")]
    NoFreeNodes,
    #[error("{given} per-atom couplings given for {atoms} atoms")]
    AtomCountMismatch { given: usize, atoms: usize },
}

/// Coupling strength `sigma(y)` along one interaction line.
///
/// The argument is the coordinate that varies along the line: `y` on
/// `x = a`, `x` on `y = a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SigmaProfile<T> {
    Constant { value: T },
    /// `values[0]` below `breakpoints[0]`, `values[i]` on
    /// `[breakpoints[i-1], breakpoints[i])`, last value beyond.
    Piecewise { breakpoints: Vec<T>, values: Vec<T> },
    Infinite,
}

impl<T: Real> SigmaProfile<T> {
    pub fn constant(value: T) -> Self {
        SigmaProfile::Constant { value }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        match self {
            SigmaProfile::Constant { value } => {
                if !(*value >= T::zero()) || !value.is_finite() {
                    return Err(AssemblyError::InvalidProfile(format!("constant {value} must be finite and >= 0")));
                }
            }
            SigmaProfile::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(AssemblyError::InvalidProfile(
                        "piecewise profile needs one more value than breakpoints".into(),
                    ));
                }
                if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(AssemblyError::InvalidProfile("breakpoints must ascend".into()));
                }
                if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
                    return Err(AssemblyError::InvalidProfile("values must be finite and >= 0".into()));
                }
            }
            SigmaProfile::Infinite => {}
        }
        Ok(())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SigmaProfile::Infinite)
    }

    pub fn eval(&self, s: T) -> T {
        match self {
            SigmaProfile::Constant { value } => *value,
            SigmaProfile::Piecewise { breakpoints, values } => {
                let k = breakpoints.partition_point(|b| *b <= s);
                values[k]
            }
            SigmaProfile::Infinite => T::infinity(),
        }
    }

    /// Copy with every finite value multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        match self {
            SigmaProfile::Constant { value } => SigmaProfile::Constant { value: *value * factor },
            SigmaProfile::Piecewise { breakpoints, values } => SigmaProfile::Piecewise {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| *v * factor).collect(),
            },
            SigmaProfile::Infinite => SigmaProfile::Infinite,
        }
    }
}

/// Command-line spelling: a number, `inf`, or `pw:v0,b1,v1,b2,v2,...`.
impl<T: Real> fmt::Display for SigmaProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaProfile::Constant { value } => write!(f, "{}", value.to_f64_lossy()),
            SigmaProfile::Infinite => write!(f, "inf"),
            SigmaProfile::Piecewise { breakpoints, values } => {
                write!(f, "pw:{}", values[0].to_f64_lossy())?;
                for (b, v) in breakpoints.iter().zip(&values[1..]) {
                    write!(f, ",{},{}", b.to_f64_lossy(), v.to_f64_lossy())?;
                }
                Ok(())
            }
        }
    }
}

impl<T: Real> FromStr for SigmaProfile<T> {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let num = |t: &str| -> Result<T, AssemblyError> {
            t.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| AssemblyError::InvalidProfile(format!("not a number: {t:?}")))
        };
        let profile = if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            SigmaProfile::Infinite
        } else if let Some(rest) = s.strip_prefix("pw:") {
            let items = rest.split(',').map(num).collect::<Result<Vec<T>, _>>()?;
            if items.len() % 2 == 0 {
                return Err(AssemblyError::InvalidProfile("pw: expects v0,b1,v1,...".into()));
            }
            let values = items.iter().step_by(2).copied().collect();
            let breakpoints = items.iter().skip(1).step_by(2).copied().collect();
            SigmaProfile::Piecewise { breakpoints, values }
        } else {
            SigmaProfile::Constant { value: num(s)? }
        };
        profile.validate()?;
        Ok(profile)
    }
}

impl<T: Real> Serialize for SigmaSpec<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

/// String-serialized wrapper used in reports and config files.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSpec<T>(pub SigmaProfile<T>);

impl<'de, T: Real> Deserialize<'de> for SigmaSpec<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SigmaSpec(SigmaProfile::constant(T::lit(v)))),
            Raw::Text(t) => t.parse().map(SigmaSpec).map_err(serde::de::Error::custom),
        }
    }
}

/// Which profile each atom gets.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaAssignment<T> {
    Uniform(SigmaProfile<T>),
    PerAtom(Vec<SigmaProfile<T>>),
}

impl<T: Real> SigmaAssignment<T> {
    pub fn for_atom(&self, k: usize) -> Option<&SigmaProfile<T>> {
        match self {
            SigmaAssignment::Uniform(p) => Some(p),
            SigmaAssignment::PerAtom(list) => list.get(k),
        }
    }
}

/// Element stiffness of the P1 triangle `[p0, p1, p2]`.
pub fn element_stiffness<T: Real>(p: [[T; 2]; 3]) -> [[T; 3]; 3] {
    let two_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut b = [T::zero(); 3];
    let mut c = [T::zero(); 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let denom = T::lit(2.0) * two_area;
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (b[i] * b[j] + c[i] * c[j]) / denom;
        }
    }
    out
}

pub fn assemble_stiffness<T: Real>(mesh: &Mesh<T>) -> CsrMatrix<T> {
    let mut b = CooBuilder::new(mesh.n_nodes());
    for tri in &mesh.triangles {
        let local = element_stiffness(tri.map(|i| mesh.nodes[i]));
        for (a, &i) in tri.iter().enumerate() {
            for (c, &j) in tri.iter().enumerate() {
                b.push(i, j, local[a][c]);
            }
        }
    }
    b.build()
}

/// Consistent P1 mass matrix.
pub fn assemble_mass<T: Real>(mesh: &Mesh<T>) -> CsrMatrix<T> {
    let mut b = CooBuilder::new(mesh.n_nodes());
    let twelfth = T::lit(1.0 / 12.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.triangle_area(t) * twelfth;
        for &i in tri {
            for &j in tri {
                b.push(i, j, if i == j { w + w } else { w });
            }
        }
    }
    b.build()
}

/// One-dimensional consistent mass matrix along `chains`, weighted by the
/// profile at each edge midpoint.
pub fn assemble_trace<T: Real>(
    mesh: &Mesh<T>,
    chains: &[&Chain],
    sigma: &SigmaProfile<T>,
) -> Result<CsrMatrix<T>, AssemblyError> {
    if sigma.is_infinite() {
        return Err(AssemblyError::InfiniteTrace);
    }
    sigma.validate()?;
    let mut b = CooBuilder::new(mesh.n_nodes());
    let sixth = T::lit(1.0 / 6.0);
    for &[p, q] in chains.iter().copied().flatten() {
        let (a, c) = (mesh.nodes[p], mesh.nodes[q]);
        let vertical = (c[0] - a[0]).abs() <= (c[1] - a[1]).abs() * T::lit(1e-12);
        let mid = if vertical {
            T::lit(0.5) * (a[1] + c[1])
        } else {
            T::lit(0.5) * (a[0] + c[0])
        };
        let w = sigma.eval(mid) * mesh.edge_length([p, q]) * sixth;
        if w == T::zero() {
            continue;
        }
        b.push(p, p, w + w);
        b.push(q, q, w + w);
        b.push(p, q, w);
        b.push(q, p, w);
    }
    Ok(b.build())
}

/// Forms restricted to the free (non-Dirichlet) nodes.
#[derive(Debug, Clone)]
pub struct AssembledForms<T> {
    pub stiffness: CsrMatrix<T>,
    pub mass: CsrMatrix<T>,
    /// Weighted trace matrices: one per atom for strip problems, one per
    /// Robin group for polygon problems.
    pub traces: Vec<CsrMatrix<T>>,
    /// Mesh node -> reduced index.
    pub dof_map: Vec<Option<usize>>,
    /// Reduced index -> mesh node.
    pub free_nodes: Vec<usize>,
}

impl<T: Real> AssembledForms<T> {
    pub fn n_dof(&self) -> usize {
        self.free_nodes.len()
    }

    /// `K + sum_i T_i`.
    pub fn operator(&self) -> CsrMatrix<T> {
        self.traces
            .iter()
            .fold(self.stiffness.clone(), |acc, t| acc.add_scaled(t, T::one()))
    }

    /// Nodal vector on the whole mesh, zero on eliminated nodes.
    pub fn extend(&self, reduced: &[T]) -> Vec<T> {
        self.dof_map
            .iter()
            .map(|slot| slot.map_or(T::zero(), |k| reduced[k]))
            .collect()
    }

    pub fn restrict_vec(&self, full: &[T]) -> Vec<T> {
        self.free_nodes.iter().map(|&i| full[i]).collect()
    }
}

/// Removes the rows and columns of every node on a chain carrying one of
/// `dirichlet_tags`.
pub fn apply_dirichlet<T: Real>(
    stiffness: &CsrMatrix<T>,
    mass: &CsrMatrix<T>,
    traces: &[CsrMatrix<T>],
    mesh: &Mesh<T>,
    dirichlet_tags: &[EdgeTag],
) -> Result<AssembledForms<T>, AssemblyError> {
    let fixed = mesh.nodes_with_tags(dirichlet_tags);
    let free_nodes: Vec<usize> = (0..mesh.n_nodes()).filter(|i| !fixed.contains(i)).collect();
    if free_nodes.is_empty() {
        return Err(AssemblyError::NoFreeNodes);
    }
    let mut dof_map = vec![None; mesh.n_nodes()];
    for (k, &i) in free_nodes.iter().enumerate() {
        dof_map[i] = Some(k);
    }
    Ok(AssembledForms {
        stiffness: stiffness.restrict(&free_nodes),
        mass: mass.restrict(&free_nodes),
        traces: traces.iter().map(|t| t.restrict(&free_nodes)).collect(),
        dof_map,
        free_nodes,
    })
}

/// Number of `GAMMA` groups on a strip mesh.
pub fn atom_count<T: Real>(mesh: &Mesh<T>) -> usize {
    mesh.edge_groups
        .iter()
        .filter_map(|g| match g.tag {
            EdgeTag::Gamma(k) => Some(k + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Full molecule problem on a strip mesh: Dirichlet walls and truncation,
/// natural conditions on the axes, one trace term per atom.
///
/// Infinite couplings eliminate the corresponding `GAMMA` nodes and leave a
/// zero trace matrix in that atom's slot.
pub fn assemble_hamiltonian<T: Real>(
    mesh: &Mesh<T>,
    sigma: &SigmaAssignment<T>,
) -> Result<AssembledForms<T>, AssemblyError> {
    let atoms = atom_count(mesh);
    if let SigmaAssignment::PerAtom(list) = sigma {
        if list.len() != atoms {
            return Err(AssemblyError::AtomCountMismatch { given: list.len(), atoms });
        }
    }
    let stiffness = assemble_stiffness(mesh);
    let mass = assemble_mass(mesh);
    let mut dirichlet = vec![EdgeTag::DirichletStrip, EdgeTag::DirichletTrunc];
    let mut traces = Vec::with_capacity(atoms);
    for k in 0..atoms {
        let profile = sigma.for_atom(k).expect("length checked");
        if profile.is_infinite() {
            dirichlet.push(EdgeTag::Gamma(k));
            traces.push(CsrMatrix::zeros(mesh.n_nodes()));
        } else {
            traces.push(assemble_trace(mesh, &mesh.chains(EdgeTag::Gamma(k)), profile)?);
        }
    }
    apply_dirichlet(&stiffness, &mass, &traces, mesh, &dirichlet)
}

/// Laplacian on a polygon or rectangle mesh with the mesh's own
/// Neumann/Dirichlet/Robin tags.
pub fn assemble_polygon_forms<T: Real>(mesh: &Mesh<T>) -> Result<AssembledForms<T>, AssemblyError> {
    let stiffness = assemble_stiffness(mesh);
    let mass = assemble_mass(mesh);
    let mut traces = Vec::new();
    for g in mesh.groups(EdgeTag::Robin) {
        let gamma = g.robin.unwrap_or_else(T::zero);
        let chains: Vec<&Chain> = g.chains.iter().collect();
        traces.push(assemble_trace(mesh, &chains, &SigmaProfile::constant(gamma))?);
    }
    apply_dirichlet(&stiffness, &mass, &traces, mesh, &[EdgeTag::Dirichlet])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_polygon_mesh, build_strip_mesh, BoundaryKind, DiagonalSplit, PolygonSpec, StripSpec};

    fn unit_square(h: f64, bc: BoundaryKind<f64>) -> Mesh<f64> {
        build_polygon_mesh(&PolygonSpec {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            edge_tags: vec![bc; 4],
            h,
            diagonal_split: DiagonalSplit::Main,
        })
        .unwrap()
    }

    #[test]
    fn stiffness_kills_constants_and_integrates_linear() {
        let mesh = unit_square(0.125, BoundaryKind::Neumann);
        let k = assemble_stiffness(&mesh);
        let ones = vec![1.0; mesh.n_nodes()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
        assert!((k.quadratic_form(&x) - 1.0).abs() < 1e-12);
        assert!(k.asymmetry() < 1e-14);
    }

    #[test]
    fn element_stiffness_matches_quadrature_of_gradients() {
        // right triangle with legs h: gradients of the hat functions are
        // constant, so one-point quadrature is exact
        let h = 0.3f64;
        let p = [[0.0, 0.0], [h, 0.0], [0.0, h]];
        let grads = [[-1.0 / h, -1.0 / h], [1.0 / h, 0.0], [0.0, 1.0 / h]];
        let area = 0.5 * h * h;
        let local = element_stiffness(p);
        for i in 0..3 {
            for j in 0..3 {
                let exact = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                assert!((local[i][j] - exact).abs() < 1e-12);
            }
        }
        // the familiar stencil
        assert!((local[0][0] - 1.0).abs() < 1e-12);
        assert!((local[0][1] + 0.5).abs() < 1e-12);
        assert!(local[1][2].abs() < 1e-12);
    }

    #[test]
    fn mass_totals_equal_area() {
        let mesh = unit_square(0.25, BoundaryKind::Neumann);
        assert!((assemble_mass(&mesh).sum_entries() - 1.0).abs() < 1e-12);
        let strip = build_strip_mesh(&StripSpec::new(1.0f64, 2.0, 2).unwrap(), &[]).unwrap();
        assert!((assemble_mass(&strip).sum_entries() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_totals() {
        let strip = build_strip_mesh(&StripSpec::new(1.0f64, 2.0, 4).unwrap(), &[1.0]).unwrap();
        let chains = strip.chains(EdgeTag::Gamma(0));
        let one = assemble_trace(&strip, &chains[..1], &SigmaProfile::constant(1.0)).unwrap();
        assert!((one.sum_entries() - 2.0).abs() < 1e-12);
        let zero = assemble_trace(&strip, &chains, &SigmaProfile::constant(0.0)).unwrap();
        assert_eq!(zero.nnz(), 0);
        let pw: SigmaProfile<f64> = "pw:1,1,3".parse().unwrap();
        let t = assemble_trace(&strip, &chains[..1], &pw).unwrap();
        assert!((t.sum_entries() - 4.0).abs() < 1e-12);
        assert_eq!(
            assemble_trace(&strip, &chains, &SigmaProfile::Infinite).unwrap_err(),
            AssemblyError::InfiniteTrace
        );
    }

    #[test]
    fn dirichlet_square_census() {
        let mesh = unit_square(0.5, BoundaryKind::Dirichlet);
        let forms = assemble_polygon_forms(&mesh).unwrap();
        assert_eq!(forms.n_dof(), 1);
        assert_eq!(forms.free_nodes, vec![4]);
    }

    #[test]
    fn strip_walls_are_eliminated() {
        let spec = StripSpec::new(1.0f64, 4.0, 4).unwrap();
        let mesh = build_strip_mesh(&spec, &[]).unwrap();
        let forms = assemble_hamiltonian(&mesh, &SigmaAssignment::Uniform(SigmaProfile::constant(0.0))).unwrap();
        for (i, p) in mesh.nodes.iter().enumerate() {
            let on_wall = ((p[0] - p[1]).abs() - 1.0).abs() < 1e-12;
            let on_cut = p[0] == 4.0 || p[1] == 4.0;
            assert_eq!(forms.dof_map[i].is_none(), on_wall || on_cut, "node {i} at {p:?}");
        }
    }

    #[test]
    fn sigma_parsing() {
        let p: SigmaProfile<f64> = "1e4".parse().unwrap();
        assert_eq!(p, SigmaProfile::constant(1e4));
        assert_eq!("inf".parse::<SigmaProfile<f64>>().unwrap(), SigmaProfile::Infinite);
        let pw: SigmaProfile<f64> = "pw:1,0.5,3,2,0".parse().unwrap();
        assert_eq!(pw.eval(0.1), 1.0);
        assert_eq!(pw.eval(0.5), 3.0);
        assert_eq!(pw.eval(2.5), 0.0);
        assert_eq!(pw.to_string(), "pw:1,0.5,3,2,0");
        assert!("-1".parse::<SigmaProfile<f64>>().is_err());
        assert!("pw:1,2".parse::<SigmaProfile<f64>>().is_err());
    }

    #[test]
    fn per_atom_length_is_checked() {
        let spec = StripSpec::new(1.0, 4.0, 4).unwrap();
        let mesh = build_strip_mesh(&spec, &[1.0, 2.0]).unwrap();
        let sigma = SigmaAssignment::PerAtom(vec![SigmaProfile::constant(1.0)]);
        assert_eq!(
            assemble_hamiltonian(&mesh, &sigma).unwrap_err(),
            AssemblyError::AtomCountMismatch { given: 1, atoms: 2 }
        );
    }
}
