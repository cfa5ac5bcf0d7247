//! Independent oracles for the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use lighthill_core::mesh::{generate_cartesian, PolyMesh};
use lighthill_core::sem::gauss_legendre;
use lighthill_core::{Aabb, Polytope, Vec3};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// ∫ f over a tetrahedron with a collapsed (Duffy) tensor Gauss rule of n
/// points per direction; exact for polynomials of degree ≤ 2n − 3.
pub fn tet_integral(v: [Vec3; 4], f: &dyn Fn(&Vec3) -> f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let e3 = v[3] - v[0];
    let det = e1.dot(&e2.cross(&e3)).abs();
    let mut s = 0.0;
    for i in 0..n {
        let a = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let b = 0.5 * (x[j] + 1.0);
            for k in 0..n {
                let c = 0.5 * (x[k] + 1.0);
                let (u, vv, ww) = (a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b));
                let p = v[0] + e1 * u + e2 * vv + e3 * ww;
                let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                s += w[i] * w[j] * w[k] * 0.125 * jac * f(&p);
            }
        }
    }
    s * det
}

/// Sub-tessellation quadrature: cone from the vertex mean over fan-split faces.
pub fn polytope_integral(p: &Polytope, f: &dyn Fn(&Vec3) -> f64, n: usize) -> f64 {
    let vs = p.vertices();
    let c = vs.iter().fold(Vec3::zeros(), |a, v| a + v) / vs.len() as f64;
    let mut s = 0.0;
    for cyc in p.face_cycles() {
        for k in 1..cyc.len() - 1 {
            s += tet_integral([c, vs[cyc[0]], vs[cyc[k]], vs[cyc[k + 1]]], f, n);
        }
    }
    s
}

fn trapezoid_periodic(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    // integrand over [0, π] extended evenly is smooth and 2π-periodic
    let h = PI / n as f64;
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h
}

fn composite_gauss(f: impl Fn(f64) -> f64, b: f64, panels: usize) -> f64 {
    let (gx, gw) = gauss_legendre(20);
    let h = b / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            s += 0.5 * h * wi * f(a + 0.5 * h * (xi + 1.0));
        }
    }
    s
}

/// J₂(x) = (1/π)∫₀^π cos(2τ − x sin τ) dτ
pub fn bessel_j2_integral(x: f64) -> f64 {
    trapezoid_periodic(|t| (2.0 * t - x * t.sin()).cos(), 4000) / PI
}

/// Y₂(x) = (1/π)∫₀^π sin(x sin τ − 2τ) dτ − (1/π)∫₀^∞ (e^{2t} + e^{−2t}) e^{−x sinh t} dt
pub fn bessel_y2_integral(x: f64) -> f64 {
    // this integrand is odd about τ = 0, so the periodic trapezoid rule does not apply
    let first = composite_gauss(|t| (x * t.sin() - 2.0 * t).sin(), PI, 200) / PI;
    // tail cut where x sinh t exceeds 80
    let t_max = (80.0 / x).asinh() + 1.0;
    let second = composite_gauss(|t| ((2.0 * t).exp() + (-2.0 * t).exp()) * (-x * t.sinh()).exp(), t_max, 400);
    first - second / PI
}

/// All (acoustic, fluid) pairs whose bounding boxes overlap, by exhaustive search.
pub fn brute_force_candidates(ta: &PolyMesh, tf: &PolyMesh) -> Vec<(u32, u32)> {
    let fb: Vec<Aabb> = (0..tf.num_cells()).map(|c| tf.cell_aabb(c)).collect();
    let mut out = Vec::new();
    for a in 0..ta.num_cells() {
        let ab = ta.cell_aabb(a);
        for (f, b) in fb.iter().enumerate() {
            let sep = (0..3).any(|d| ab.max[d] < b.min[d] || b.max[d] < ab.min[d]);
            if !sep {
                out.push((a as u32, f as u32));
            }
        }
    }
    out
}

/// Unit cube [0,1]³ mapped by a random well-conditioned affine map.
pub fn random_parallelepiped(rng: &mut impl Rng, centre_spread: f64) -> Polytope {
    let cube = generate_cartesian(Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)), [1, 1, 1]).unwrap();
    let p = cube.cell_polytope(0).unwrap();
    let mut m = nalgebra::Matrix3::<f64>::identity();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] += rng.gen_range(-0.4..0.4);
        }
    }
    let scale = rng.gen_range(0.3..1.2);
    let shift = Vec3::new(
        rng.gen_range(-centre_spread..centre_spread),
        rng.gen_range(-centre_spread..centre_spread),
        rng.gen_range(-centre_spread..centre_spread),
    );
    p.mapped(|x| m * (x - Vec3::repeat(0.5)) * scale + shift).unwrap()
}

/// Random non-degenerate tetrahedron with outward faces.
pub fn random_tet(rng: &mut impl Rng, centre_spread: f64) -> Polytope {
    loop {
        let c = Vec3::new(
            rng.gen_range(-centre_spread..centre_spread),
            rng.gen_range(-centre_spread..centre_spread),
            rng.gen_range(-centre_spread..centre_spread),
        );
        let v: Vec<Vec3> = (0..4)
            .map(|_| c + Vec3::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)))
            .collect();
        let vol = (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0])));
        if vol.abs() < 0.02 {
            continue;
        }
        let faces = if vol > 0.0 {
            vec![vec![0, 2, 1], vec![0, 1, 3], vec![1, 2, 3], vec![0, 3, 2]]
        } else {
            vec![vec![0, 1, 2], vec![0, 3, 1], vec![1, 3, 2], vec![0, 2, 3]]
        };
        return Polytope::new(v, faces).unwrap();
    }
}

/// Copy of p shrunk about its centroid by the factor s.
pub fn shrunk(p: &Polytope, s: f64) -> Polytope {
    let c = p.centroid();
    p.mapped(|x| c + (x - c) * s).unwrap()
}
