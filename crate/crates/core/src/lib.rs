//! Hybrid aeroacoustic coupling toolkit.
//!
//! A coarse hexahedral acoustic mesh and a fine polyhedral fluid mesh are
//! intersected cell by cell ([`intersect`]); polynomials are integrated
//! exactly over the cut cells ([`quadfree`]); piecewise-constant fluid sources
//! are L2-projected onto a spectral-element space ([`projection`]); and the
//! inhomogeneous wave equation is advanced with implicit Newmark ([`sem`]).
//! [`sources`] provides the analytic corotating vortex pair and the Lighthill
//! source post-processing; [`studies`] wires these into the benchmark and
//! validation runs exposed by the CLI.

pub mod error;
pub mod linalg;
pub mod mesh;
pub mod intersect;
pub mod quadfree;
pub mod sem;
pub mod projection;
pub mod sources;
pub mod studies;
pub mod tol;

pub use error::{Error, Result};
pub use intersect::{CutMesh, IntersectionRecord, Provenance};
pub use mesh::{Aabb, CellField, CellKind, HexElement, PolyMesh, Vec3};
pub use projection::{CouplingMethod, CouplingSystem};
pub use quadfree::{Monomial, MonomialCache, Polytope};
pub use sem::{GllBasis, SemSpace, WaveOperators, WaveState};
pub use sources::VortexPairConfig;
