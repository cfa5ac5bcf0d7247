//! Geometric and numerical tolerances, in one place.
//!
//! Relative tolerances are scaled by the local length scale (cell or face
//! diameter) at the point of use.

/// Max vertex distance to a face's best-fit plane, relative to face diameter.
pub const PLANAR: f64 = 1e-10;

/// Closure of a cell: |Σ signed area vectors| relative to diameter².
pub const CLOSED: f64 = 1e-10;

/// Convexity: vertex signed distance to any face plane, relative to diameter.
pub const CONVEX: f64 = 1e-9;

/// Affine-map detection: magnitude of the bilinear/trilinear map coefficients
/// relative to element diameter.
pub const AFFINE: f64 = 1e-12;

/// Reference-cube containment slack for the bounding-box shortcut.
pub const REF_CONTAIN: f64 = 1e-9;

/// Newton inverse of the trilinear map: residual relative to element diameter.
pub const NEWTON_RESIDUAL: f64 = 1e-12;

/// Newton iteration cap before a point is declared not contained.
pub const NEWTON_MAX_ITER: usize = 50;

/// Sliver threshold for cut cells, relative to min(|K_a|, |K_f|).
pub const SLIVER_VOLUME: f64 = 1e-14;

/// Near-parallel edge pairs are skipped as separating axes below this cross norm.
pub const SAT_PARALLEL: f64 = 1e-12;

/// Half-space classification band during clipping, relative to polytope diameter.
pub const CLIP_SNAP: f64 = 1e-12;

/// Quantization step for polytope content hashing.
pub const HASH_QUANTUM: f64 = 1e-15;

/// Relative residual for the Newmark effective-system solve.
pub const NEWMARK_CG: f64 = 1e-10;

/// Relative residual for projection mass solves.
pub const PROJECTION_CG: f64 = 1e-12;
