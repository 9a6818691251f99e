//! Finite-element spectra of the Robin-coupled strip Hamiltonian.
//!
//! The numerical layers (`geometry`, `assembly`, `sparse`, `dense`,
//! `eigensolve`, `separable_robin`) are generic over [`scalar::Real`]; the
//! aliases below fix them to `f64` (and `f32` with a `32` suffix). The
//! experiment drivers and the command line work in `f64` only.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod dense;
pub mod eigensolve;
pub mod experiments;
pub mod geometry;
pub mod randomness;
pub mod scalar;
pub mod separable_robin;
pub mod sparse;

pub use scalar::Real;

pub type Mesh = geometry::Mesh<f64>;
pub type StripSpec = geometry::StripSpec<f64>;
pub type PolygonSpec = geometry::PolygonSpec<f64>;
pub type BoundaryKind = geometry::BoundaryKind<f64>;
pub type SigmaProfile = assembly::SigmaProfile<f64>;
pub type SigmaAssignment = assembly::SigmaAssignment<f64>;
pub type AssembledForms = assembly::AssembledForms<f64>;
pub type CsrMatrix = sparse::CsrMatrix<f64>;
pub type SolveOptions = eigensolve::SolveOptions<f64>;
pub type SpectralResult = eigensolve::SpectralResult<f64>;
pub type RobinInterval = separable_robin::RobinInterval<f64>;

pub type Mesh32 = geometry::Mesh<f32>;
pub type StripSpec32 = geometry::StripSpec<f32>;
pub type SigmaAssignment32 = assembly::SigmaAssignment<f32>;
pub type CsrMatrix32 = sparse::CsrMatrix<f32>;
pub type SolveOptions32 = eigensolve::SolveOptions<f32>;
pub type SpectralResult32 = eigensolve::SpectralResult<f32>;
