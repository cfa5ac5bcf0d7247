//! Corotating vortex pair, its acoustic far field, and Lighthill source
//! post-processing on polyhedral fluid meshes.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{CellField, PolyMesh, Vec3};

/// Two equal Scully vortices at ±r0 rotating about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexPairConfig {
    pub gamma: f64,
    pub r0: f64,
    pub rc: f64,
    pub rho0: f64,
    pub c0: f64,
}

impl Default for VortexPairConfig {
    fn default() -> Self {
        VortexPairConfig { gamma: 0.98696, r0: 1.0, rc: 0.2, rho0: 1.0, c0: 1.0 }
    }
}

impl VortexPairConfig {
    /// Angular velocity Γ/(4π r0²).
    pub fn omega(&self) -> f64 {
        self.gamma / (4.0 * PI * self.r0 * self.r0)
    }

    /// Rotating Mach number Γ/(4π r0 c0).
    pub fn mach(&self) -> f64 {
        self.gamma / (4.0 * PI * self.r0 * self.c0)
    }

    /// 8π² r0² / Γ
    pub fn fluid_period(&self) -> f64 {
        8.0 * PI * PI * self.r0 * self.r0 / self.gamma
    }

    pub fn acoustic_period(&self) -> f64 {
        0.5 * self.fluid_period()
    }

    /// Acoustic wavenumber 2ω/c0.
    pub fn wavenumber(&self) -> f64 {
        2.0 * self.omega() / self.c0
    }

    /// Vortex centres at time t.
    pub fn centres(&self, t: f64) -> [[f64; 2]; 2] {
        let (s, c) = (self.omega() * t).sin_cos();
        [[self.r0 * c, self.r0 * s], [-self.r0 * c, -self.r0 * s]]
    }
}

/// Velocity of the desingularized pair at `x`.
pub fn vortex_velocity(cfg: &VortexPairConfig, x: [f64; 2], t: f64) -> [f64; 2] {
    let mut u = [0.0; 2];
    for b in cfg.centres(t) {
        let (dx, dy) = (x[0] - b[0], x[1] - b[1]);
        let s = cfg.gamma / (2.0 * PI * (cfg.rc * cfg.rc + dx * dx + dy * dy));
        u[0] -= s * dy;
        u[1] += s * dx;
    }
    u
}

/// Velocity of each cell centroid at time t (zero vertical component).
pub fn sample_snapshot(cfg: &VortexPairConfig, mesh: &PolyMesh, t: f64) -> FluidSnapshot {
    let values = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let x = mesh.cell_centroid(c);
            let u = vortex_velocity(cfg, [x.x, x.y], t);
            Vec3::new(u[0], u[1], 0.0)
        })
        .collect();
    FluidSnapshot { time: t, velocity: CellField { mesh_id: mesh.id(), values } }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidSnapshot {
    pub time: f64,
    pub velocity: CellField<Vec3>,
}

impl FluidSnapshot {
    /// `cell_id ux uy uz` table.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# t = {:?}", self.time)?;
        writeln!(w, "cell_id ux uy uz")?;
        for (c, u) in self.velocity.values.iter().enumerate() {
            writeln!(w, "{c} {:?} {:?} {:?}", u.x, u.y, u.z)?;
        }
        Ok(())
    }
}

/// Which phase the Y₂ term of the far field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// J₂ sin(2(θ−ωt)) + Y₂ cos(2(θ−ωt)): a rotating quadrupole with period π/ω
    #[default]
    Quadrupole,
    /// J₂ sin(2(θ−ωt)) + Y₂ cos(2θ−ωt)
    AsPrinted,
}

/// Bessel J₂(x) for x ≥ 0.
pub fn bessel_j2(x: f64) -> f64 {
    bessel2(x).0
}

/// Bessel Y₂(x) for x > 0.
pub fn bessel_y2(x: f64) -> f64 {
    bessel2(x).1
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// (J₂, Y₂): ascending series below 12, Hankel expansion above.
pub fn bessel2(x: f64) -> (f64, f64) {
    if x < 12.0 {
        bessel2_series(x)
    } else {
        bessel2_hankel(x)
    }
}

fn bessel2_series(x: f64) -> (f64, f64) {
    let h = 0.5 * x;
    let q = -h * h;
    // ψ(k+1) and ψ(k+3) by recurrence
    let mut psi1 = -EULER_GAMMA;
    let mut psi3 = -EULER_GAMMA + 1.0 + 0.5;
    let mut term = h * h / 2.0; // (x/2)² / (0! 2!)
    let mut j = 0.0;
    let mut s = 0.0;
    for k in 0..200 {
        j += term;
        s += (psi1 + psi3) * term;
        let kf = k as f64;
        psi1 += 1.0 / (kf + 1.0);
        psi3 += 1.0 / (kf + 3.0);
        term *= q / ((kf + 1.0) * (kf + 3.0));
        if term.abs() < 1e-18 * j.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    // finite part: Σ_{k<2} (1−k)!/k! (x/2)^{2k−2} = (x/2)^{-2} + 1
    let finite = 1.0 / (h * h) + 1.0;
    let y = -finite / PI + 2.0 / PI * h.ln() * j - s / PI;
    (j, y)
}

fn bessel2_hankel(x: f64) -> (f64, f64) {
    let mu = 16.0;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let term = a / x.powi(k);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        let m = (2 * k + 1) as f64;
        a *= (mu - m * m) / ((k + 1) as f64 * 8.0);
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - 1.25 * PI;
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Far-field acoustic pressure of the pair at polar (r, θ).
pub fn farfield_pressure(cfg: &VortexPairConfig, r: f64, theta: f64, t: f64, conv: PhaseConvention) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("far field needs r > 0, got {r}")));
    }
    let w = cfg.omega();
    let amp = -cfg.rho0 * cfg.c0 * cfg.c0 / (64.0 * PI.powi(3)) * (cfg.gamma / (cfg.r0 * cfg.c0)).powi(4);
    let (j2, y2) = bessel2(cfg.wavenumber() * r);
    let yphase = match conv {
        PhaseConvention::Quadrupole => 2.0 * (theta - w * t),
        PhaseConvention::AsPrinted => 2.0 * theta - w * t,
    };
    Ok(amp * (j2 * (2.0 * (theta - w * t)).sin() + y2 * yphase.cos()))
}

/// Cell-wise ∇·(ρ0 u⊗u) by the Gauss face sum with linearly interpolated
/// face values; boundary faces take the owner value.
pub fn lighthill_divergence(mesh: &PolyMesh, u: &CellField<Vec3>, rho0: f64) -> Result<CellField<Vec3>> {
    u.check(mesh)?;
    let tensor: Vec<Matrix3<f64>> = u.values.iter().map(|v| v * v.transpose() * rho0).collect();
    let mut acc = vec![Vec3::zeros(); mesh.num_cells()];
    for f in 0..mesh.num_faces() {
        let (p, nb) = mesh.face_cells(f);
        let n = mesh.face_normal(f) * mesh.face_area(f);
        let tf = match nb {
            None => tensor[p],
            Some(q) => {
                let w = owner_weight(mesh, f, p, q);
                tensor[p] * w + tensor[q] * (1.0 - w)
            }
        };
        let flux = tf * n;
        acc[p] += flux;
        if let Some(q) = nb {
            acc[q] -= flux;
        }
    }
    for (c, a) in acc.iter_mut().enumerate() {
        *a /= mesh.cell_volume(c);
    }
    CellField::new(mesh, acc)
}

/// Weight of the owner value in the face interpolation: the fraction of the
/// owner–neighbour segment lying on the neighbour side of the face plane.
fn owner_weight(mesh: &PolyMesh, f: usize, p: usize, q: usize) -> f64 {
    let (xp, xq) = (mesh.cell_centroid(p), mesh.cell_centroid(q));
    let n = mesh.face_normal(f);
    let denom = n.dot(&(xq - xp));
    if denom.abs() < 1e-300 {
        return 0.5;
    }
    let s = n.dot(&(mesh.face_centroid(f) - xp)) / denom;
    (1.0 - s).clamp(0.0, 1.0)
}

/// Gauss-gradient of a cell scalar with the same face interpolation.
pub fn gauss_gradient(mesh: &PolyMesh, phi: &CellField<f64>) -> Result<CellField<Vec3>> {
    phi.check(mesh)?;
    let mut acc = vec![Vec3::zeros(); mesh.num_cells()];
    for f in 0..mesh.num_faces() {
        let (p, nb) = mesh.face_cells(f);
        let n = mesh.face_normal(f) * mesh.face_area(f);
        let v = match nb {
            None => phi.values[p],
            Some(q) => {
                let w = owner_weight(mesh, f, p, q);
                w * phi.values[p] + (1.0 - w) * phi.values[q]
            }
        };
        acc[p] += n * v;
        if let Some(q) = nb {
            acc[q] -= n * v;
        }
    }
    for (c, a) in acc.iter_mut().enumerate() {
        *a /= mesh.cell_volume(c);
    }
    CellField::new(mesh, acc)
}

/// 1 inside r_i, cosine taper to 0 at r_o.
pub fn smoothing_factor(x: f64, r_i: f64, r_o: f64) -> Result<f64> {
    if !(r_i < r_o) {
        return Err(Error::invalid(format!("smoothing radii need r_i < r_o, got {r_i} and {r_o}")));
    }
    Ok(if x < r_i {
        1.0
    } else if x >= r_o {
        0.0
    } else {
        0.5 * (1.0 + (PI * (x - r_i) / (r_o - r_i)).cos())
    })
}
