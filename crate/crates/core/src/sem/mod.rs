//! Spectral elements on GLL nodes for ρ_tt − c₀²Δρ = source, with a
//! first-order absorbing condition and implicit Newmark time stepping.

mod basis;

pub use basis::{build_basis, gauss_legendre, legendre, GllBasis};

use std::collections::HashMap;
use std::io::Write;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::linalg::{self, Csr};
use crate::mesh::{CellKind, HexElement, PolyMesh, Vec3, HEX_FACES};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Absorbing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Neumann,
    Absorbing,
}

#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub c0: f64,
    pub rho0: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { c0: 1.0, rho0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeGeo {
    /// GLL weight × |det J|
    wdet: f64,
    jinv: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(u32),
    Edge(u32, u32, u16),
    Face(u32, u32, u32, u16, u16),
    Interior(u32, u16, u16, u16),
}

/// Corner index from (ξ, η, ζ) bits.
const CORNER_OF: [[[usize; 2]; 2]; 2] = [[[0, 1], [3, 2]], [[4, 5], [7, 6]]];

/// Continuous Q_r space on a hexahedral mesh.
#[derive(Debug, Clone)]
pub struct SemSpace {
    pub basis: GllBasis,
    pub elements: Vec<HexElement>,
    l2g: Vec<u32>,
    pub coords: Vec<Vec3>,
    pub tags: Vec<NodeTag>,
    /// (element, local face, kind) for every boundary face
    pub boundary_faces: Vec<(u32, u8, BoundaryKind)>,
    geo: Vec<NodeGeo>,
}

impl SemSpace {
    /// Space with every boundary face Neumann.
    pub fn new(mesh: &PolyMesh, r: usize) -> Result<SemSpace> {
        Self::with_boundary(mesh, r, |_, _| BoundaryKind::Neumann)
    }

    /// `classify(face centroid, outward normal)` picks the boundary kind.
    pub fn with_boundary(mesh: &PolyMesh, r: usize, classify: impl Fn(&Vec3, &Vec3) -> BoundaryKind) -> Result<SemSpace> {
        if mesh.kind() != CellKind::Hexahedral {
            return Err(Error::UnsupportedGeometry("spectral elements need a hexahedral mesh".into()));
        }
        let basis = build_basis(r)?;
        let n = r + 1;
        let nloc = n * n * n;
        let ne = mesh.num_cells();
        let elements: Vec<HexElement> = (0..ne).map(|c| mesh.hex_element(c)).collect();

        let mut face_count: HashMap<[usize; 4], u32> = HashMap::new();
        for e in &elements {
            for lf in HEX_FACES {
                let mut k = lf.map(|c| e.corner_ids[c]);
                k.sort_unstable();
                *face_count.entry(k).or_insert(0) += 1;
            }
        }

        let mut ids: HashMap<NodeKey, u32> = HashMap::new();
        let mut l2g = Vec::with_capacity(ne * nloc);
        let mut coords = Vec::new();
        let mut geo = Vec::with_capacity(ne * nloc);
        let xi = &basis.nodes;
        for (ei, e) in elements.iter().enumerate() {
            let g = e.corner_ids.map(|v| v as u32);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let key = node_key(ei as u32, &g, [i, j, k], r);
                        let p = Vec3::new(xi[i], xi[j], xi[k]);
                        let id = *ids.entry(key).or_insert_with(|| {
                            coords.push(e.map(&p));
                            (coords.len() - 1) as u32
                        });
                        l2g.push(id);
                        let jac = e.jacobian(&p);
                        let det = jac.determinant();
                        if !(det > 0.0) {
                            return Err(Error::geometry(format!("element {ei}: non-positive Jacobian {det:.3e} at a GLL node")));
                        }
                        geo.push(NodeGeo {
                            wdet: basis.weights[i] * basis.weights[j] * basis.weights[k] * det,
                            jinv: jac.try_inverse().unwrap(),
                        });
                    }
                }
            }
        }

        let mut tags = vec![NodeTag::Interior; coords.len()];
        let mut boundary_faces = Vec::new();
        for (ei, e) in elements.iter().enumerate() {
            for (lf, corners) in HEX_FACES.iter().enumerate() {
                let mut k = corners.map(|c| e.corner_ids[c]);
                k.sort_unstable();
                if face_count[&k] != 1 {
                    continue;
                }
                let pts = corners.map(|c| e.corners[c]);
                let centroid = pts.iter().sum::<Vec3>() / 4.0;
                let normal = (pts[2] - pts[0]).cross(&(pts[3] - pts[1])).normalize();
                let kind = classify(&centroid, &normal);
                boundary_faces.push((ei as u32, lf as u8, kind));
                let tag = match kind {
                    BoundaryKind::Neumann => NodeTag::Neumann,
                    BoundaryKind::Absorbing => NodeTag::Absorbing,
                };
                for local in face_nodes(lf, r) {
                    let gid = l2g[ei * nloc + local] as usize;
                    if tags[gid] != NodeTag::Absorbing {
                        tags[gid] = tag;
                    }
                }
            }
        }
        Ok(SemSpace { basis, elements, l2g, coords, tags, boundary_faces, geo })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        let n = self.basis.n();
        n * n * n
    }

    /// Global ids of element `e`'s nodes, local order i + n(j + n k).
    pub fn element_nodes(&self, e: usize) -> &[u32] {
        let nl = self.nodes_per_element();
        &self.l2g[e * nl..(e + 1) * nl]
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.coords.iter().map(f).collect()
    }

    /// Value of the nodal field `u` at reference point `xi` of element `e`.
    pub fn eval_in_element(&self, u: &[f64], e: usize, xi: &Vec3) -> f64 {
        let (lx, ly, lz) = (self.basis.eval(xi.x), self.basis.eval(xi.y), self.basis.eval(xi.z));
        let n = self.basis.n();
        let ids = self.element_nodes(e);
        let mut s = 0.0;
        for k in 0..n {
            for j in 0..n {
                let w = ly[j] * lz[k];
                for i in 0..n {
                    s += lx[i] * w * u[ids[i + n * (j + n * k)] as usize];
                }
            }
        }
        s
    }

    /// Element and reference coordinates containing `x`, if any.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, Vec3)> {
        let lim = 1.0 + 1e-9;
        for (e, el) in self.elements.iter().enumerate() {
            let bb = el.aabb();
            let pad = 1e-9 * el.diameter();
            if (0..3).any(|d| x[d] < bb.min[d] - pad || x[d] > bb.max[d] + pad) {
                continue;
            }
            if let Some(xi) = el.inverse_map(x) {
                if xi.iter().all(|c| c.abs() <= lim) {
                    return Some((e, xi));
                }
            }
        }
        None
    }

    pub fn assemble_operators(&self, material: Material) -> Result<WaveOperators> {
        let n = self.basis.n();
        let nloc = n * n * n;
        let nn = self.num_nodes();
        let c2 = material.c0 * material.c0;
        let mut m = vec![0.0; nn];
        let mut trip = Vec::with_capacity(self.num_elements() * nloc * nloc);
        let d = &self.basis.deriv;
        let mut kloc = vec![0.0; nloc * nloc];
        for e in 0..self.num_elements() {
            let ids = self.element_nodes(e);
            kloc.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..nloc {
                let g = self.geo[e * nloc + q];
                m[ids[q] as usize] += g.wdet;
                let gm = g.jinv * g.jinv.transpose() * (g.wdet * c2);
                let qi = [q % n, (q / n) % n, q / (n * n)];
                // (local node, reference direction, ∂̂ value)
                let mut grads: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * n);
                for dir in 0..3 {
                    for mm in 0..n {
                        let mut a = qi;
                        a[dir] = mm;
                        let val = d[qi[dir]][mm];
                        if val != 0.0 {
                            grads.push((a[0] + n * (a[1] + n * a[2]), dir, val));
                        }
                    }
                }
                for &(a, da, va) in &grads {
                    for &(b, db, vb) in &grads {
                        kloc[a * nloc + b] += gm[(da, db)] * va * vb;
                    }
                }
            }
            for a in 0..nloc {
                for b in 0..nloc {
                    let v = kloc[a * nloc + b];
                    if v != 0.0 || a == b {
                        trip.push((ids[a] as usize, ids[b] as usize, v));
                    }
                }
            }
        }
        let k = Csr::from_triplets(nn, nn, trip);
        let mut c = vec![0.0; nn];
        for &(e, lf, kind) in &self.boundary_faces {
            if kind != BoundaryKind::Absorbing {
                continue;
            }
            for (local, w) in self.face_quadrature(e as usize, lf as usize) {
                c[self.element_nodes(e as usize)[local] as usize] += material.c0 * w;
            }
        }
        Ok(WaveOperators { m, k, c, material })
    }

    /// (local node, GLL surface weight × surface Jacobian) on local face `lf`.
    pub fn face_quadrature(&self, e: usize, lf: usize) -> Vec<(usize, f64)> {
        let n = self.basis.n();
        let r = self.degree();
        let (axis, side) = (lf / 2, lf % 2);
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let el = &self.elements[e];
        let xi = &self.basis.nodes;
        let mut out = Vec::with_capacity(n * n);
        for t in 0..n {
            for s in 0..n {
                let mut idx = [0usize; 3];
                idx[axis] = if side == 0 { 0 } else { r };
                idx[a1] = s;
                idx[a2] = t;
                let p = Vec3::new(xi[idx[0]], xi[idx[1]], xi[idx[2]]);
                let j = el.jacobian(&p);
                let area = j.column(a1).cross(&j.column(a2)).norm();
                out.push((idx[0] + n * (idx[1] + n * idx[2]), self.basis.weights[s] * self.basis.weights[t] * area));
            }
        }
        out
    }

    /// Neumann data vector: ∫_∂Ω g(x, n) φ_i over faces of the given kind.
    pub fn assemble_boundary_flux(&self, kind: BoundaryKind, g: impl Fn(&Vec3, &Vec3) -> f64) -> Vec<f64> {
        let mut f = vec![0.0; self.num_nodes()];
        for &(e, lf, k) in &self.boundary_faces {
            if k != kind {
                continue;
            }
            let el = &self.elements[e as usize];
            let ids = self.element_nodes(e as usize);
            let corners = HEX_FACES[lf as usize].map(|c| el.corners[c]);
            let normal = (corners[2] - corners[0]).cross(&(corners[3] - corners[1])).normalize();
            for (local, w) in self.face_quadrature(e as usize, lf as usize) {
                let gid = ids[local] as usize;
                f[gid] += w * g(&self.coords[gid], &normal);
            }
        }
        f
    }

    /// F_i = −Σ_K (q, ∇φ_i)^NI_K for a nodal vector field q.
    pub fn assemble_wave_rhs(&self, q: [&[f64]; 3]) -> Result<Vec<f64>> {
        for comp in q {
            if comp.len() != self.num_nodes() {
                return Err(Error::Dimension { expected: self.num_nodes(), got: comp.len() });
            }
        }
        let n = self.basis.n();
        let nloc = n * n * n;
        let d = &self.basis.deriv;
        let mut f = vec![0.0; self.num_nodes()];
        for e in 0..self.num_elements() {
            let ids = self.element_nodes(e);
            for qn in 0..nloc {
                let gid = ids[qn] as usize;
                let qv = Vec3::new(q[0][gid], q[1][gid], q[2][gid]);
                if qv == Vec3::zeros() {
                    continue;
                }
                let g = self.geo[e * nloc + qn];
                let v = g.jinv * qv * g.wdet;
                let qi = [qn % n, (qn / n) % n, qn / (n * n)];
                for dir in 0..3 {
                    for mm in 0..n {
                        let mut a = qi;
                        a[dir] = mm;
                        f[ids[a[0] + n * (a[1] + n * a[2])] as usize] -= v[dir] * d[qi[dir]][mm];
                    }
                }
            }
        }
        Ok(f)
    }

    /// Writes `x y z rho` lines for every node.
    pub fn write_field_table(&self, field: &[f64], mut w: impl Write) -> Result<()> {
        writeln!(w, "x y z rho")?;
        for (x, v) in self.coords.iter().zip(field) {
            writeln!(w, "{:?} {:?} {:?} {:?}", x.x, x.y, x.z, v)?;
        }
        Ok(())
    }
}

fn node_key(elem: u32, g: &[u32; 8], idx: [usize; 3], r: usize) -> NodeKey {
    let ext: Vec<usize> = (0..3).filter(|&d| idx[d] == 0 || idx[d] == r).collect();
    let bit = |v: usize| usize::from(v == r);
    match ext.len() {
        3 => NodeKey::Vertex(g[CORNER_OF[bit(idx[2])][bit(idx[1])][bit(idx[0])]]),
        2 => {
            let free = (0..3).find(|d| !ext.contains(d)).unwrap();
            let corner_at = |v: usize| {
                let mut c = idx;
                c[free] = v;
                g[CORNER_OF[bit(c[2])][bit(c[1])][bit(c[0])]]
            };
            let (a, b) = (corner_at(0), corner_at(r));
            let t = idx[free];
            if a < b {
                NodeKey::Edge(a, b, t as u16)
            } else {
                NodeKey::Edge(b, a, (r - t) as u16)
            }
        }
        1 => {
            let fixed = ext[0];
            let free: Vec<usize> = (0..3).filter(|&d| d != fixed).collect();
            let corner = |s: usize, t: usize| {
                let mut c = idx;
                c[free[0]] = s;
                c[free[1]] = t;
                g[CORNER_OF[bit(c[2])][bit(c[1])][bit(c[0])]]
            };
            let (s, t) = (idx[free[0]], idx[free[1]]);
            // pick the square symmetry that puts the smallest corner id at the
            // origin and its smaller neighbour along the first axis
            let mut best: Option<((u32, u32, u32), (usize, usize))> = None;
            for sym in 0..8 {
                let map = |s: usize, t: usize| {
                    let (u, v) = if sym & 4 != 0 { (t, s) } else { (s, t) };
                    (if sym & 1 != 0 { r - u } else { u }, if sym & 2 != 0 { r - v } else { v })
                };
                // canonical corner positions map back to local corners
                let mut at = HashMap::with_capacity(4);
                for (cs, ct) in [(0, 0), (r, 0), (0, r), (r, r)] {
                    at.insert(map(cs, ct), corner(cs, ct));
                }
                let key = (at[&(0, 0)], at[&(r, 0)], at[&(0, r)]);
                if best.as_ref().is_none_or(|(k, _)| (key.0, key.1) < (k.0, k.1)) {
                    best = Some((key, map(s, t)));
                }
            }
            let ((a, b, c), (s2, t2)) = best.unwrap();
            NodeKey::Face(a, b, c, s2 as u16, t2 as u16)
        }
        _ => NodeKey::Interior(elem, idx[0] as u16, idx[1] as u16, idx[2] as u16),
    }
}

/// Local node indices on local face `lf`.
pub fn face_nodes(lf: usize, r: usize) -> Vec<usize> {
    let n = r + 1;
    let (axis, side) = (lf / 2, lf % 2);
    let fixed = if side == 0 { 0 } else { r };
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if [i, j, k][axis] == fixed {
                    out.push(i + n * (j + n * k));
                }
            }
        }
    }
    out
}

/// Lumped mass M, stiffness K (c₀²-scaled) and absorbing damping C (c₀-scaled).
#[derive(Debug, Clone)]
pub struct WaveOperators {
    pub m: Vec<f64>,
    pub k: Csr,
    pub c: Vec<f64>,
    pub material: Material,
}

impl WaveOperators {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// ½ ρ̇ᵀMρ̇ + ½ ρᵀKρ
    pub fn energy(&self, s: &WaveState) -> f64 {
        let kv = self.k.matvec(&s.rho);
        let kin: f64 = s.rho_dot.iter().zip(&self.m).map(|(v, m)| m * v * v).sum();
        0.5 * kin + 0.5 * linalg::dot(&s.rho, &kv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub rho_ddot: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

impl WaveState {
    pub fn zeros(n: usize) -> Self {
        WaveState { rho: vec![0.0; n], rho_dot: vec![0.0; n], rho_ddot: vec![0.0; n], t: 0.0, step: 0 }
    }

    /// State with ρ̈ solved from the balance M ρ̈ = F − C ρ̇ − K ρ.
    pub fn with_consistent_acceleration(ops: &WaveOperators, rho: Vec<f64>, rho_dot: Vec<f64>, f: &[f64], t: f64) -> Self {
        let kr = ops.k.matvec(&rho);
        let rho_ddot = (0..rho.len()).map(|i| (f[i] - ops.c[i] * rho_dot[i] - kr[i]) / ops.m[i]).collect();
        WaveState { rho, rho_dot, rho_ddot, t, step: 0 }
    }
}

/// Average-acceleration Newmark (β = 1/4, γ = 1/2) with the effective matrix
/// M + γΔt C + βΔt² K assembled once.
#[derive(Debug, Clone)]
pub struct Newmark {
    pub dt: f64,
    pub beta: f64,
    pub gamma: f64,
    eff: Csr,
    diag: Vec<f64>,
}

impl Newmark {
    pub fn new(ops: &WaveOperators, dt: f64) -> Result<Newmark> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("time step {dt} must be positive")));
        }
        let (beta, gamma) = (0.25, 0.5);
        let d: Vec<f64> = ops.m.iter().zip(&ops.c).map(|(m, c)| m + gamma * dt * c).collect();
        let eff = ops.k.scaled_plus_diagonal(beta * dt * dt, &d);
        let diag = eff.diagonal();
        Ok(Newmark { dt, beta, gamma, eff, diag })
    }

    pub fn step(&self, ops: &WaveOperators, s: &WaveState, rhs_next: &[f64]) -> Result<WaveState> {
        let n = s.rho.len();
        if rhs_next.len() != n || ops.len() != n {
            return Err(Error::Dimension { expected: n, got: rhs_next.len().min(ops.len()) });
        }
        let dt = self.dt;
        let up: Vec<f64> = (0..n).map(|i| s.rho[i] + dt * s.rho_dot[i] + dt * dt * (0.5 - self.beta) * s.rho_ddot[i]).collect();
        let vp: Vec<f64> = (0..n).map(|i| s.rho_dot[i] + dt * (1.0 - self.gamma) * s.rho_ddot[i]).collect();
        let ku = ops.k.matvec(&up);
        let rhs: Vec<f64> = (0..n).map(|i| rhs_next[i] - ops.c[i] * vp[i] - ku[i]).collect();
        let mut a = s.rho_ddot.clone();
        linalg::pcg(&self.eff, &self.diag, &rhs, &mut a, tol::NEWMARK_CG, 10 * n.max(100))?;
        let rho = (0..n).map(|i| up[i] + self.beta * dt * dt * a[i]).collect();
        let rho_dot = (0..n).map(|i| vp[i] + self.gamma * dt * a[i]).collect();
        Ok(WaveState { rho, rho_dot, rho_ddot: a, t: s.t + dt, step: s.step + 1 })
    }
}

/// One Newmark step; builds the effective matrix on every call.
pub fn newmark_step(ops: &WaveOperators, s: &WaveState, rhs_next: &[f64], dt: f64) -> Result<WaveState> {
    Newmark::new(ops, dt)?.step(ops, s, rhs_next)
}

/// ½(1 − cos(π t / T_end)) up to T_end, then 1.
pub fn apply_source_ramp(t: f64, t_end: f64) -> Result<f64> {
    if !(t_end > 0.0) {
        return Err(Error::invalid(format!("ramp end time {t_end} must be positive")));
    }
    Ok(if t >= t_end { 1.0 } else { 0.5 * (1.0 - (std::f64::consts::PI * t.max(0.0) / t_end).cos()) })
}

/// How the source is sampled between stored snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotSampling {
    #[default]
    Nearest,
    Linear,
}

/// Snapshot indices and weights for time `t` on a periodic sequence of
/// `count` snapshots spaced `dt`.
pub fn snapshot_weights(t: f64, dt: f64, count: usize, mode: SnapshotSampling) -> [(usize, f64); 2] {
    let s = t / dt;
    match mode {
        SnapshotSampling::Nearest => {
            let i = (s.round() as usize) % count;
            [(i, 1.0), (i, 0.0)]
        }
        SnapshotSampling::Linear => {
            let i0 = s.floor();
            let w = s - i0;
            let i0 = (i0 as usize) % count;
            [(i0, 1.0 - w), ((i0 + 1) % count, w)]
        }
    }
}

/// Fixed sample points with precomputed interpolation weights.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub points: Vec<Vec3>,
    weights: Vec<Vec<(u32, f64)>>,
}

impl ProbeSet {
    pub fn new(space: &SemSpace, points: Vec<Vec3>) -> Result<ProbeSet> {
        let n = space.basis.n();
        let mut weights = Vec::with_capacity(points.len());
        for p in &points {
            let (e, xi) = space
                .locate(p)
                .ok_or_else(|| Error::invalid(format!("probe point ({}, {}, {}) outside the mesh", p.x, p.y, p.z)))?;
            let (lx, ly, lz) = (space.basis.eval(xi.x), space.basis.eval(xi.y), space.basis.eval(xi.z));
            let ids = space.element_nodes(e);
            let mut w = Vec::new();
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let v = lx[i] * ly[j] * lz[k];
                        if v != 0.0 {
                            w.push((ids[i + n * (j + n * k)], v));
                        }
                    }
                }
            }
            weights.push(w);
        }
        Ok(ProbeSet { points, weights })
    }

    /// Evenly spaced points from `origin` along `dir` (count ≥ 2 includes both ends).
    pub fn line(space: &SemSpace, origin: Vec3, end: Vec3, count: usize) -> Result<ProbeSet> {
        let pts = (0..count)
            .map(|i| origin + (end - origin) * (i as f64 / (count.max(2) - 1) as f64))
            .collect();
        Self::new(space, pts)
    }

    pub fn sample(&self, field: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().map(|&(i, v)| v * field[i as usize]).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, generate_distorted, Aabb};

    fn cube_mesh(n: usize) -> PolyMesh {
        generate_cartesian(Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)), [n, n, n]).unwrap()
    }

    #[test]
    fn node_counts_continuous() {
        for r in 1..=3 {
            let s = SemSpace::new(&cube_mesh(2), r).unwrap();
            assert_eq!(s.num_nodes(), (2 * r + 1).pow(3), "r={r}");
        }
    }

    #[test]
    fn shared_nodes_coincide_on_distorted_mesh() {
        let base = generate_cartesian(Aabb::new(Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, 1.0, 0.5)), [3, 3, 2]).unwrap();
        let m = generate_distorted(&base, 0.2, 4).unwrap();
        let s = SemSpace::new(&m, 3).unwrap();
        let n = 4;
        assert_eq!(s.num_nodes(), (3 * 3 + 1) * (3 * 3 + 1) * (2 * 3 + 1));
        let xi = &s.basis.nodes;
        for e in 0..s.num_elements() {
            let ids = s.element_nodes(e);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let x = s.elements[e].map(&Vec3::new(xi[i], xi[j], xi[k]));
                        assert!((x - s.coords[ids[i + n * (j + n * k)] as usize]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn mass_sums_to_volume() {
        let s = SemSpace::new(&cube_mesh(1), 1).unwrap();
        let ops = s.assemble_operators(Material::default()).unwrap();
        assert!((ops.m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let s = SemSpace::new(&cube_mesh(3), 4).unwrap();
        let ops = s.assemble_operators(Material::default()).unwrap();
        assert!((ops.m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ops.m.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn stiffness_kernel_symmetry_and_linear_energy() {
        let mat = Material { c0: 1.7, rho0: 1.0 };
        let s = SemSpace::new(&cube_mesh(2), 2).unwrap();
        let ops = s.assemble_operators(mat).unwrap();
        let ones = vec![1.0; s.num_nodes()];
        assert!(ops.k.matvec(&ones).iter().all(|v| v.abs() < 1e-10));
        assert!(ops.k.asymmetry() <= 1e-12 * ops.k.max_abs());
        let (a, b, c) = (0.3, -1.2, 0.5);
        let u = s.interpolate(|x| a * x.x + b * x.y + c * x.z + 2.0);
        let e = linalg::dot(&u, &ops.k.matvec(&u));
        let exact = mat.c0 * mat.c0 * (a * a + b * b + c * c);
        assert!((e - exact).abs() < 1e-10, "{e} {exact}");
    }

    #[test]
    fn absorbing_row_sums_are_face_areas() {
        let s = SemSpace::with_boundary(&cube_mesh(1), 1, |_, n| {
            if n.z > 0.5 { BoundaryKind::Absorbing } else { BoundaryKind::Neumann }
        })
        .unwrap();
        let ops = s.assemble_operators(Material { c0: 2.0, rho0: 1.0 }).unwrap();
        let top: Vec<usize> = (0..s.num_nodes()).filter(|&i| s.tags[i] == NodeTag::Absorbing).collect();
        assert_eq!(top.len(), 4);
        for &i in &top {
            assert!((ops.c[i] - 2.0 * 0.25).abs() < 1e-15);
        }
        assert!((ops.c.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ramp_values() {
        assert_eq!(apply_source_ramp(0.0, 4.0).unwrap(), 0.0);
        assert_eq!(apply_source_ramp(4.0, 4.0).unwrap(), 1.0);
        assert!((apply_source_ramp(2.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(apply_source_ramp(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_forcing_stays_zero() {
        let s = SemSpace::new(&cube_mesh(2), 2).unwrap();
        let ops = s.assemble_operators(Material::default()).unwrap();
        let nm = Newmark::new(&ops, 0.01).unwrap();
        let mut st = WaveState::zeros(s.num_nodes());
        let f = vec![0.0; s.num_nodes()];
        for _ in 0..10 {
            st = nm.step(&ops, &st, &f).unwrap();
        }
        assert!(st.rho.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_oscillator_conserves_energy() {
        let w = 2.0;
        let ops = WaveOperators {
            m: vec![1.0],
            k: Csr::from_triplets(1, 1, vec![(0, 0, w * w)]),
            c: vec![0.0],
            material: Material::default(),
        };
        let period = 2.0 * std::f64::consts::PI / w;
        let nm = Newmark::new(&ops, period / 100.0).unwrap();
        let mut st = WaveState::with_consistent_acceleration(&ops, vec![1.0], vec![0.0], &[0.0], 0.0);
        let e0 = ops.energy(&st);
        for _ in 0..1000 {
            st = nm.step(&ops, &st, &[0.0]).unwrap();
        }
        assert!(((ops.energy(&st) - e0) / e0).abs() < 1e-8);
    }

    #[test]
    fn rhs_zero_and_partition_of_unity() {
        let s = SemSpace::new(&cube_mesh(2), 3).unwrap();
        let z = vec![0.0; s.num_nodes()];
        assert!(s.assemble_wave_rhs([&z, &z, &z]).unwrap().iter().all(|&v| v == 0.0));
        let q: Vec<f64> = s.coords.iter().map(|x| x.x * x.y + 1.0).collect();
        let f = s.assemble_wave_rhs([&q, &z, &q]).unwrap();
        assert!(f.iter().sum::<f64>().abs() < 1e-12);
        assert!(s.assemble_wave_rhs([&q[1..], &z, &z]).is_err());
    }

    #[test]
    fn probes_reproduce_polynomials() {
        let base = generate_cartesian(Aabb::new(Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, 1.0, 0.5)), [3, 3, 1]).unwrap();
        let m = generate_distorted(&base, 0.2, 2).unwrap();
        let s = SemSpace::new(&m, 2).unwrap();
        let f = |x: &Vec3| 1.0 + 2.0 * x.x - x.y + 0.5 * x.z;
        let u = s.interpolate(f);
        let probes = ProbeSet::line(&s, Vec3::new(-0.9, -0.3, 0.25), Vec3::new(0.9, 0.4, 0.25), 17).unwrap();
        for (p, v) in probes.points.iter().zip(probes.sample(&u)) {
            assert!((v - f(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn snapshot_selection() {
        assert_eq!(snapshot_weights(0.26, 0.1, 10, SnapshotSampling::Nearest)[0], (3, 1.0));
        let w = snapshot_weights(0.95, 0.1, 10, SnapshotSampling::Linear);
        assert_eq!((w[0].0, w[1].0), (9, 0));
        assert!((w[1].1 - 0.5).abs() < 1e-12);
    }
}
