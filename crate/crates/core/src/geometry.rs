//! Structured triangulations of the truncated strip and of the polygonal
//! comparison domains.
//!
//! Every mesh lives on an integer lattice: node `p` sits at
//! `origin + lattice[p] * pitch`. Triangles come from splitting lattice
//! cells along one of their diagonals, and a lattice triangle is kept when
//! its centroid lies inside the (lattice) polygon. Polygon edges are grid
//! lines or cell diagonals, so no triangle straddles the boundary and all
//! inside/outside decisions are exact integer arithmetic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid strip parameters: {0}")]
    InvalidStrip(String),
    #[error("atom positions must be strictly ascending and positive (index {index})")]
    UnsortedAtoms { index: usize },
    #[error("atom {index} at {position} is not a multiple of the pitch")]
    AtomOffGrid { index: usize, position: f64 },
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("polygon edge {edge} has slope {slope:+} but the cell split is {split:?}")]
    DiagonalConflict {
        edge: usize,
        slope: i64,
        split: DiagonalSplit,
    },
    #[error("pitch must be positive")]
    NonPositivePitch,
}

/// Which diagonal of each lattice cell the triangulation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagonalSplit {
    /// Diagonal parallel to `y = x`.
    Main,
    /// Diagonal parallel to `y = -x`.
    Anti,
}

/// Tag carried by a group of boundary or interface edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    /// The walls `|x - y| = d`.
    DirichletStrip,
    /// The half-axes `x = 0` and `y = 0`.
    NeumannAxis,
    /// The cut `x = L` or `y = L`.
    DirichletTrunc,
    /// The interaction lines `x = a_k`, `y = a_k` of atom `k` (zero based).
    Gamma(usize),
    Neumann,
    Dirichlet,
    Robin,
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeTag::DirichletStrip => write!(f, "DIRICHLET_STRIP"),
            EdgeTag::NeumannAxis => write!(f, "NEUMANN_AXIS"),
            EdgeTag::DirichletTrunc => write!(f, "DIRICHLET_TRUNC"),
            EdgeTag::Gamma(k) => write!(f, "GAMMA_{}", k + 1),
            EdgeTag::Neumann => write!(f, "NEUMANN"),
            EdgeTag::Dirichlet => write!(f, "DIRICHLET"),
            EdgeTag::Robin => write!(f, "ROBIN"),
        }
    }
}

impl FromStr for EdgeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "DIRICHLET_STRIP" => EdgeTag::DirichletStrip,
            "NEUMANN_AXIS" => EdgeTag::NeumannAxis,
            "DIRICHLET_TRUNC" => EdgeTag::DirichletTrunc,
            "NEUMANN" => EdgeTag::Neumann,
            "DIRICHLET" => EdgeTag::Dirichlet,
            "ROBIN" => EdgeTag::Robin,
            other => {
                let k = other
                    .strip_prefix("GAMMA_")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| format!("unknown edge tag {other:?}"))?;
                EdgeTag::Gamma(k - 1)
            }
        })
    }
}

impl Serialize for EdgeTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EdgeTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Boundary condition attached to a polygon edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryKind<T> {
    Neumann,
    Dirichlet,
    Robin(T),
}

impl<T> BoundaryKind<T> {
    fn tag(&self) -> EdgeTag {
        match self {
            BoundaryKind::Neumann => EdgeTag::Neumann,
            BoundaryKind::Dirichlet => EdgeTag::Dirichlet,
            BoundaryKind::Robin(_) => EdgeTag::Robin,
        }
    }
}

/// Ordered, contiguous run of mesh edges.
pub type Chain = Vec<[usize; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGroup<T> {
    pub tag: EdgeTag,
    /// Robin coefficient for `ROBIN` groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin: Option<T>,
    pub chains: Vec<Chain>,
}

/// Conforming triangulation with tagged edge chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh<T> {
    pub nodes: Vec<[T; 2]>,
    /// Node index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edge_groups: Vec<EdgeGroup<T>>,
    /// Lattice pitch in x and y (equal for strip and polygon meshes).
    pub pitch: [T; 2],
    /// Integer lattice coordinates of each node.
    pub lattice: Vec<[i64; 2]>,
}

/// Truncated strip `{|x - y| <= d, 0 <= x, y <= L}` meshed with pitch `d / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec<T> {
    pub d: T,
    #[serde(rename = "L")]
    pub l: T,
    #[serde(rename = "M")]
    pub m: usize,
}

impl<T: Real> StripSpec<T> {
    pub fn new(d: T, l: T, m: usize) -> Result<Self, GeometryError> {
        let spec = StripSpec { d, l, m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn h(&self) -> T {
        self.d / T::from_usize_lossy(self.m)
    }

    /// Number of lattice cells along each axis.
    pub fn cells(&self) -> Result<i64, GeometryError> {
        lattice_index(self.l, self.h()).ok_or_else(|| {
            GeometryError::InvalidStrip(format!(
                "L = {} is not a multiple of h = {}",
                self.l,
                self.h()
            ))
        })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.d > T::zero()) || !self.d.is_finite() {
            return Err(GeometryError::InvalidStrip(format!("d = {} must be positive", self.d)));
        }
        if self.m < 2 {
            return Err(GeometryError::InvalidStrip(format!("M = {} must be at least 2", self.m)));
        }
        let n = self.cells()?;
        if n <= self.m as i64 {
            return Err(GeometryError::InvalidStrip(format!(
                "L = {} must exceed d = {}",
                self.l, self.d
            )));
        }
        Ok(())
    }

    /// Analytic area of the truncated strip, `2 L d - d^2`.
    pub fn area(&self) -> T {
        T::lit(2.0) * self.l * self.d - self.d * self.d
    }
}

/// Axis-aligned polygon with at most one 45 degree edge, on the `h` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec<T> {
    pub vertices: Vec<[T; 2]>,
    /// Boundary condition of the edge from vertex `i` to vertex `i + 1`.
    pub edge_tags: Vec<BoundaryKind<T>>,
    pub h: T,
    pub diagonal_split: DiagonalSplit,
}

/// Result of moving atoms onto the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SnappedAtoms<T> {
    pub positions: Vec<T>,
    pub max_error: T,
    /// Index into `positions` for each input atom.
    pub source: Vec<usize>,
}

/// Moves each atom to the nearest positive multiple of `h` (ties round up)
/// and merges atoms that land on the same grid line.
///
/// Atoms closer to the origin than `h / 2` go to `h`, so for those the
/// reported error can exceed `h / 2`.
pub fn snap_atoms<T: Real>(atoms: &[T], h: T) -> Result<SnappedAtoms<T>, GeometryError> {
    if !(h > T::zero()) {
        return Err(GeometryError::NonPositivePitch);
    }
    check_ascending(atoms)?;
    let mut positions: Vec<T> = Vec::with_capacity(atoms.len());
    let mut source = Vec::with_capacity(atoms.len());
    let mut max_error = T::zero();
    for &a in atoms {
        let k = (a / h + T::lit(0.5)).floor().max(T::one());
        let snapped = k * h;
        max_error = max_error.max((snapped - a).abs());
        if positions.last().is_none_or(|&last| snapped > last) {
            positions.push(snapped);
        }
        source.push(positions.len() - 1);
    }
    Ok(SnappedAtoms { positions, max_error, source })
}

fn check_ascending<T: Real>(atoms: &[T]) -> Result<(), GeometryError> {
    for (index, &a) in atoms.iter().enumerate() {
        let bad_order = index > 0 && !(a > atoms[index - 1]);
        if !(a > T::zero()) || !a.is_finite() || bad_order {
            return Err(GeometryError::UnsortedAtoms { index });
        }
    }
    Ok(())
}

/// `Some(k)` if `x` equals `k * h` up to rounding.
fn lattice_index<T: Real>(x: T, h: T) -> Option<i64> {
    let q = x / h;
    let k = q.round();
    let tol = T::lit(1e-9) * T::one().max(q.abs());
    if (q - k).abs() <= tol {
        k.to_i64()
    } else {
        None
    }
}

/// Meshes the truncated strip, with one `GAMMA` group per atom.
///
/// Atoms must already be on the lattice (see [`snap_atoms`]). Atoms at or
/// beyond `L` get an empty group: their lines lie on the truncation cut or
/// outside the mesh.
pub fn build_strip_mesh<T: Real>(spec: &StripSpec<T>, atoms: &[T]) -> Result<Mesh<T>, GeometryError> {
    spec.validate()?;
    check_ascending(atoms)?;
    let h = spec.h();
    let n = spec.cells()?;
    let m = spec.m as i64;
    let atom_lattice = atoms
        .iter()
        .enumerate()
        .map(|(index, &a)| {
            lattice_index(a, h).ok_or(GeometryError::AtomOffGrid {
                index,
                position: a.to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let polygon = [[0, 0], [m, 0], [n, n - m], [n, n], [n - m, n], [0, m]];
    let tags = [
        EdgeTag::NeumannAxis,
        EdgeTag::DirichletStrip,
        EdgeTag::DirichletTrunc,
        EdgeTag::DirichletTrunc,
        EdgeTag::DirichletStrip,
        EdgeTag::NeumannAxis,
    ];
    let grid = LatticeTriangulation::build(&polygon, DiagonalSplit::Main);
    let edge_chains = grid.boundary_chains(&polygon);

    let mut by_tag: BTreeMap<EdgeTag, Vec<Chain>> = BTreeMap::new();
    for (chain, tag) in edge_chains.into_iter().zip(tags) {
        if !chain.is_empty() {
            by_tag.entry(tag).or_default().push(chain);
        }
    }
    let mut edge_groups: Vec<EdgeGroup<T>> = by_tag
        .into_iter()
        .map(|(tag, chains)| EdgeGroup { tag, robin: None, chains })
        .collect();
    for (k, &p) in atom_lattice.iter().enumerate() {
        let chains = if p > 0 && p < n {
            [grid.interior_line(0, p), grid.interior_line(1, p)]
                .into_iter()
                .filter(|c| !c.is_empty())
                .collect()
        } else {
            Vec::new()
        };
        edge_groups.push(EdgeGroup { tag: EdgeTag::Gamma(k), robin: None, chains });
    }
    Ok(grid.into_mesh([T::zero(), T::zero()], [h, h], edge_groups))
}

/// Meshes a polygon whose vertices sit on the `h` lattice.
pub fn build_polygon_mesh<T: Real>(spec: &PolygonSpec<T>) -> Result<Mesh<T>, GeometryError> {
    if !(spec.h > T::zero()) {
        return Err(GeometryError::NonPositivePitch);
    }
    let nv = spec.vertices.len();
    if nv < 3 {
        return Err(GeometryError::InvalidPolygon("fewer than three vertices".into()));
    }
    if spec.edge_tags.len() != nv {
        return Err(GeometryError::InvalidPolygon(format!(
            "{} vertices but {} edge tags",
            nv,
            spec.edge_tags.len()
        )));
    }
    let mut polygon = Vec::with_capacity(nv);
    for (i, v) in spec.vertices.iter().enumerate() {
        let (Some(x), Some(y)) = (lattice_index(v[0], spec.h), lattice_index(v[1], spec.h)) else {
            return Err(GeometryError::InvalidPolygon(format!("vertex {i} is not on the h-lattice")));
        };
        polygon.push([x, y]);
    }
    let mut diagonals = 0;
    for e in 0..nv {
        let (p, q) = (polygon[e], polygon[(e + 1) % nv]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        if dx == 0 && dy == 0 {
            return Err(GeometryError::InvalidPolygon(format!("edge {e} is degenerate")));
        }
        if dx != 0 && dy != 0 {
            if dx.abs() != dy.abs() {
                return Err(GeometryError::InvalidPolygon(format!("edge {e} is neither axis-aligned nor 45 degrees")));
            }
            diagonals += 1;
            let slope = dx.signum() * dy.signum();
            let wanted = if slope > 0 { DiagonalSplit::Main } else { DiagonalSplit::Anti };
            if wanted != spec.diagonal_split {
                return Err(GeometryError::DiagonalConflict { edge: e, slope, split: spec.diagonal_split });
            }
        }
        if let BoundaryKind::Robin(g) = spec.edge_tags[e] {
            if !(g >= T::zero()) || !g.is_finite() {
                return Err(GeometryError::InvalidPolygon(format!("edge {e} has invalid Robin constant")));
            }
        }
    }
    if diagonals > 1 {
        return Err(GeometryError::InvalidPolygon("more than one diagonal edge".into()));
    }
    if signed_area2(&polygon) == 0 {
        return Err(GeometryError::InvalidPolygon("zero area".into()));
    }
    let grid = LatticeTriangulation::build(&polygon, spec.diagonal_split);
    let chains = grid.boundary_chains(&polygon);
    let edge_groups = chains
        .into_iter()
        .zip(&spec.edge_tags)
        .filter(|(c, _)| !c.is_empty())
        .map(|(chain, bc)| EdgeGroup {
            tag: bc.tag(),
            robin: match bc {
                BoundaryKind::Robin(g) => Some(*g),
                _ => None,
            },
            chains: vec![chain],
        })
        .collect();
    Ok(grid.into_mesh([T::zero(), T::zero()], [spec.h, spec.h], edge_groups))
}

/// Mesh of `[x0, x1] x [y0, y1]` with `nx * ny` cells (pitches may differ).
///
/// Boundary conditions are listed bottom, right, top, left.
pub fn rectangle_mesh<T: Real>(
    x: [T; 2],
    y: [T; 2],
    cells: [usize; 2],
    bcs: [BoundaryKind<T>; 4],
) -> Result<Mesh<T>, GeometryError> {
    if !(x[1] > x[0]) || !(y[1] > y[0]) || cells[0] == 0 || cells[1] == 0 {
        return Err(GeometryError::InvalidPolygon("empty rectangle".into()));
    }
    let (nx, ny) = (cells[0] as i64, cells[1] as i64);
    let polygon = [[0, 0], [nx, 0], [nx, ny], [0, ny]];
    let grid = LatticeTriangulation::build(&polygon, DiagonalSplit::Main);
    let edge_groups = grid
        .boundary_chains(&polygon)
        .into_iter()
        .zip(bcs)
        .map(|(chain, bc)| EdgeGroup {
            tag: bc.tag(),
            robin: match bc {
                BoundaryKind::Robin(g) => Some(g),
                _ => None,
            },
            chains: vec![chain],
        })
        .collect();
    let pitch = [
        (x[1] - x[0]) / T::from_usize_lossy(cells[0]),
        (y[1] - y[0]) / T::from_usize_lossy(cells[1]),
    ];
    Ok(grid.into_mesh([x[0], y[0]], pitch, edge_groups))
}

fn signed_area2(poly: &[[i64; 2]]) -> i128 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] as i128 * q[1] as i128 - q[0] as i128 * p[1] as i128
        })
        .sum()
}

/// Crossing-number test for a point given in thirds of a lattice unit.
fn inside_thirds(poly: &[[i64; 2]], pt: [i64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ax, ay, bx, by) = (3 * a[0] as i128, 3 * a[1] as i128, 3 * b[0] as i128, 3 * b[1] as i128);
        let (px, py) = (pt[0] as i128, pt[1] as i128);
        if (ay > py) != (by > py) {
            // x-coordinate of the crossing compared without division
            let lhs = (px - ax) * (by - ay);
            let rhs = (bx - ax) * (py - ay);
            if (by > ay && lhs < rhs) || (by < ay && lhs > rhs) {
                inside = !inside;
            }
        }
    }
    inside
}

struct LatticeTriangulation {
    lattice: Vec<[i64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Edge -> number of incident triangles.
    edges: HashMap<[usize; 2], u8>,
}

impl LatticeTriangulation {
    fn build(polygon: &[[i64; 2]], split: DiagonalSplit) -> Self {
        let (mut imin, mut imax, mut jmin, mut jmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in polygon {
            imin = imin.min(p[0]);
            imax = imax.max(p[0]);
            jmin = jmin.min(p[1]);
            jmax = jmax.max(p[1]);
        }
        let mut lattice_tris: Vec<[[i64; 2]; 3]> = Vec::new();
        for j in jmin..jmax {
            for i in imin..imax {
                let (a, b, c, d) = ([i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]);
                let pair = match split {
                    DiagonalSplit::Main => [[a, b, c], [a, c, d]],
                    DiagonalSplit::Anti => [[a, b, d], [b, c, d]],
                };
                for tri in pair {
                    let centroid = [
                        tri[0][0] + tri[1][0] + tri[2][0],
                        tri[0][1] + tri[1][1] + tri[2][1],
                    ];
                    if inside_thirds(polygon, centroid) {
                        lattice_tris.push(tri);
                    }
                }
            }
        }
        let mut used: Vec<[i64; 2]> = lattice_tris.iter().flatten().copied().collect();
        used.sort_by_key(|p| (p[1], p[0]));
        used.dedup();
        let index: HashMap<[i64; 2], usize> = used.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let triangles: Vec<[usize; 3]> = lattice_tris
            .iter()
            .map(|t| [index[&t[0]], index[&t[1]], index[&t[2]]])
            .collect();
        let mut edges = HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (p, q) = (t[e], t[(e + 1) % 3]);
                *edges.entry([p.min(q), p.max(q)]).or_insert(0u8) += 1;
            }
        }
        LatticeTriangulation { lattice: used, triangles, edges }
    }

    /// One ordered chain per polygon edge, oriented along that edge.
    fn boundary_chains(&self, polygon: &[[i64; 2]]) -> Vec<Chain> {
        let nv = polygon.len();
        let mut chains: Vec<Vec<(i64, [usize; 2])>> = vec![Vec::new(); nv];
        let mut boundary: Vec<[usize; 2]> = self
            .edges
            .iter()
            .filter(|(_, &count)| count == 1)
            .map(|(&e, _)| e)
            .collect();
        boundary.sort_unstable();
        for [p, q] in boundary {
            let (lp, lq) = (self.lattice[p], self.lattice[q]);
            for e in 0..nv {
                let (a, b) = (polygon[e], polygon[(e + 1) % nv]);
                if on_segment(a, b, lp) && on_segment(a, b, lq) {
                    let dir = [b[0] - a[0], b[1] - a[1]];
                    let tp = dir[0] * (lp[0] - a[0]) + dir[1] * (lp[1] - a[1]);
                    let tq = dir[0] * (lq[0] - a[0]) + dir[1] * (lq[1] - a[1]);
                    let oriented = if tp < tq { (tp, [p, q]) } else { (tq, [q, p]) };
                    chains[e].push(oriented);
                    break;
                }
            }
        }
        chains
            .into_iter()
            .map(|mut c| {
                c.sort_unstable_by_key(|&(t, _)| t);
                c.into_iter().map(|(_, e)| e).collect()
            })
            .collect()
    }

    /// Interior edges on the lattice line `coord[axis] == value`, ordered.
    fn interior_line(&self, axis: usize, value: i64) -> Chain {
        let along = 1 - axis;
        let mut edges: Vec<(i64, [usize; 2])> = self
            .edges
            .iter()
            .filter(|(_, &count)| count == 2)
            .filter_map(|(&[p, q], _)| {
                let (lp, lq) = (self.lattice[p], self.lattice[q]);
                (lp[axis] == value && lq[axis] == value).then(|| {
                    if lp[along] < lq[along] {
                        (lp[along], [p, q])
                    } else {
                        (lq[along], [q, p])
                    }
                })
            })
            .collect();
        edges.sort_unstable_by_key(|&(t, _)| t);
        edges.into_iter().map(|(_, e)| e).collect()
    }

    fn into_mesh<T: Real>(self, origin: [T; 2], pitch: [T; 2], edge_groups: Vec<EdgeGroup<T>>) -> Mesh<T> {
        let nodes = self
            .lattice
            .iter()
            .map(|p| {
                [
                    origin[0] + T::lit(p[0] as f64) * pitch[0],
                    origin[1] + T::lit(p[1] as f64) * pitch[1],
                ]
            })
            .collect();
        Mesh { nodes, triangles: self.triangles, edge_groups, pitch, lattice: self.lattice }
    }
}

fn on_segment(a: [i64; 2], b: [i64; 2], p: [i64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross == 0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

impl<T: Real> Mesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Signed area of triangle `t` (positive for counter-clockwise).
    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        T::lit(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: [usize; 2]) -> T {
        let (p, q) = (self.nodes[e[0]], self.nodes[e[1]]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    pub fn groups(&self, tag: EdgeTag) -> impl Iterator<Item = &EdgeGroup<T>> {
        self.edge_groups.iter().filter(move |g| g.tag == tag)
    }

    /// All chains carrying `tag`.
    pub fn chains(&self, tag: EdgeTag) -> Vec<&Chain> {
        self.groups(tag).flat_map(|g| g.chains.iter()).collect()
    }

    pub fn tagged_length(&self, tag: EdgeTag) -> T {
        self.chains(tag)
            .into_iter()
            .flatten()
            .map(|&e| self.edge_length(e))
            .sum()
    }

    /// Nodes touched by any chain carrying one of `tags`.
    pub fn nodes_with_tags(&self, tags: &[EdgeTag]) -> BTreeSet<usize> {
        self.edge_groups
            .iter()
            .filter(|g| tags.contains(&g.tag))
            .flat_map(|g| g.chains.iter().flatten())
            .flat_map(|e| [e[0], e[1]])
            .collect()
    }

    /// Number of triangles sharing each edge.
    pub fn edge_incidence(&self) -> HashMap<[usize; 2], usize> {
        let mut edges = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (p, q) = (t[e], t[(e + 1) % 3]);
                *edges.entry([p.min(q), p.max(q)]).or_insert(0) += 1;
            }
        }
        edges
    }

    /// The same mesh under `(x, y) -> (alpha x, beta y)`.
    pub fn scaled(&self, alpha: T, beta: T) -> Mesh<T> {
        let mut out = self.clone();
        for p in &mut out.nodes {
            p[0] *= alpha;
            p[1] *= beta;
        }
        out.pitch = [self.pitch[0] * alpha, self.pitch[1] * beta];
        out
    }

    /// Permutation of node indices realising `(x, y) -> (y, x)`, if the node
    /// set is symmetric.
    pub fn reflection_permutation(&self) -> Option<Vec<usize>> {
        let index: HashMap<[i64; 2], usize> = self.lattice.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        self.lattice
            .iter()
            .map(|p| index.get(&[p[1], p[0]]).copied())
            .collect()
    }
}
