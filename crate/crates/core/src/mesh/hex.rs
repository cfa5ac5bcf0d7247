use nalgebra::Matrix3;

use super::{Aabb, Vec3, HEX_CORNERS};
use crate::tol;

/// Hexahedral element with trilinear map θ(ξ) = Σ_a N_a(ξ) X_a from [−1,1]³.
#[derive(Debug, Clone)]
pub struct HexElement {
    pub corner_ids: [usize; 8],
    pub corners: [Vec3; 8],
    /// θ(ξ) = c0 + cξ ξ + cη η + cζ ζ + cξη ξη + cξζ ξζ + cηζ ηζ + cξηζ ξηζ
    coef: [Vec3; 8],
    affine: bool,
    diameter: f64,
}

impl HexElement {
    pub fn new(corners: [Vec3; 8]) -> Self {
        Self::with_ids([0; 8], corners)
    }

    pub fn with_ids(corner_ids: [usize; 8], corners: [Vec3; 8]) -> Self {
        let mut coef = [Vec3::zeros(); 8];
        for (a, x) in corners.iter().enumerate() {
            let [s, t, u] = HEX_CORNERS[a];
            let w = [1.0, s, t, u, s * t, s * u, t * u, s * t * u];
            for k in 0..8 {
                coef[k] += w[k] * x / 8.0;
            }
        }
        let diameter = Aabb::from_points(&corners).extent().norm();
        let affine = coef[4..].iter().all(|c| c.norm() <= tol::AFFINE * diameter);
        HexElement { corner_ids, corners, coef, affine, diameter }
    }

    /// True iff the element is a parallelepiped (constant Jacobian).
    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.corners)
    }

    pub fn map(&self, xi: &Vec3) -> Vec3 {
        let c = &self.coef;
        let (s, t, u) = (xi.x, xi.y, xi.z);
        c[0] + c[1] * s + c[2] * t + c[3] * u + c[4] * (s * t) + c[5] * (s * u) + c[6] * (t * u) + c[7] * (s * t * u)
    }

    /// Columns are ∂θ/∂ξ, ∂θ/∂η, ∂θ/∂ζ.
    pub fn jacobian(&self, xi: &Vec3) -> Matrix3<f64> {
        let c = &self.coef;
        let (s, t, u) = (xi.x, xi.y, xi.z);
        let ds = c[1] + c[4] * t + c[5] * u + c[7] * (t * u);
        let dt = c[2] + c[4] * s + c[6] * u + c[7] * (s * u);
        let du = c[3] + c[5] * s + c[6] * t + c[7] * (s * t);
        Matrix3::from_columns(&[ds, dt, du])
    }

    /// Centre and constant Jacobian of the affine part: θ(ξ) ≈ x_c + J ξ.
    pub fn affine_part(&self) -> (Vec3, Matrix3<f64>) {
        (self.coef[0], Matrix3::from_columns(&[self.coef[1], self.coef[2], self.coef[3]]))
    }

    pub fn min_corner_jacobian(&self) -> f64 {
        HEX_CORNERS
            .iter()
            .map(|c| self.jacobian(&Vec3::new(c[0], c[1], c[2])).determinant())
            .fold(f64::INFINITY, f64::min)
    }

    /// Newton inverse of θ. Returns `None` if the residual does not drop below
    /// 1e−12·diameter within the iteration cap or the Jacobian turns singular.
    pub fn inverse_map(&self, x: &Vec3) -> Option<Vec3> {
        let target = tol::NEWTON_RESIDUAL * self.diameter;
        let mut xi = Vec3::zeros();
        for _ in 0..tol::NEWTON_MAX_ITER {
            let r = self.map(&xi) - x;
            if r.norm() <= target {
                return Some(xi);
            }
            let step = self.jacobian(&xi).lu().solve(&r)?;
            xi -= step;
            if !xi.iter().all(|v| v.is_finite()) {
                return None;
            }
        }
        let r = self.map(&xi) - x;
        (r.norm() <= target).then_some(xi)
    }

    /// Faces planar (each quad's corners coplanar within tolerance).
    pub fn has_planar_faces(&self) -> bool {
        super::HEX_FACES.iter().all(|lf| {
            let p: Vec<Vec3> = lf.iter().map(|&k| self.corners[k]).collect();
            let n = (p[1] - p[0]).cross(&(p[3] - p[0]));
            let nn = n.norm();
            nn > 0.0 && (n / nn).dot(&(p[2] - p[0])).abs() <= tol::PLANAR * self.diameter
        })
    }
}
