//! Exact integration of monomials over convex polytopes.
//!
//! Uses the homogeneous-function form of Stokes' theorem: for g homogeneous of
//! degree q and a face plane n·x = b,
//!
//! ```text
//! ∫_K g = 1/(3+q) Σ_i b_i ∫_{F_i} g
//! ∫_F g = 1/(2+q) [ Σ_j d_ij ∫_{E_ij} g + ∫_F x0·∇g ]
//! ∫_E g = 1/(1+q) [ Σ_k d_ijk g(v_k)   + ∫_E x0·∇g ]
//! ```
//!
//! with x0 an anchor on the face (edge) and d the signed distance from the
//! anchor to the boundary piece along its outward in-plane normal. The gradient
//! terms are lower-degree monomials, so every moment up to a given exponent box
//! is produced in one sweep over the exponent lattice.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::tol;

/// x^a y^b z^c
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub exps: [u16; 3],
}

impl Monomial {
    pub const ONE: Monomial = Monomial { exps: [0, 0, 0] };

    pub fn new(a: u16, b: u16, c: u16) -> Self {
        Monomial { exps: [a, b, c] }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        x.x.powi(self.exps[0] as i32) * x.y.powi(self.exps[1] as i32) * x.z.powi(self.exps[2] as i32)
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let [a, b, c] = self.exps.map(|e| e as i32);
        let p = |v: f64, e: i32| if e == 0 { 1.0 } else { v.powi(e) };
        let d = |v: f64, e: i32| if e == 0 { 0.0 } else { e as f64 * p(v, e - 1) };
        Vec3::new(
            d(x.x, a) * p(x.y, b) * p(x.z, c),
            p(x.x, a) * d(x.y, b) * p(x.z, c),
            p(x.x, a) * p(x.y, b) * d(x.z, c),
        )
    }
}

impl std::fmt::Display for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        for (name, e) in ["x", "y", "z"].iter().zip(self.exps) {
            match e {
                0 => {}
                1 => parts.push(name.to_string()),
                _ => parts.push(format!("{name}^{e}")),
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolyFace {
    pub cycle: Vec<usize>,
    pub normal: Vec3,
    pub offset: f64,
    pub anchor: Vec3,
    /// (edge index, signed in-plane distance from the face anchor)
    pub edges: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct PolyEdge {
    pub ends: [usize; 2],
    pub anchor: Vec3,
    /// signed distance from the edge anchor to each endpoint along the
    /// outward edge direction at that endpoint
    pub dist: [f64; 2],
}

/// Convex, planar-faced polytope with the face → edge → vertex hierarchy.
#[derive(Debug, Clone)]
pub struct Polytope {
    vertices: Vec<Vec3>,
    faces: Vec<PolyFace>,
    edges: Vec<PolyEdge>,
}

fn newell(vertices: &[Vec3], cycle: &[usize]) -> Vec3 {
    let o = vertices[cycle[0]];
    let mut n = Vec3::zeros();
    for k in 0..cycle.len() {
        let a = vertices[cycle[k]] - o;
        let b = vertices[cycle[(k + 1) % cycle.len()]] - o;
        n += a.cross(&b);
    }
    n * 0.5
}

impl Polytope {
    /// Builds the hierarchy from vertices and outward (counter-clockwise seen
    /// from outside) face cycles. Anchors default to the face vertex average
    /// and edge midpoints.
    pub fn new(vertices: Vec<Vec3>, cycles: Vec<Vec<usize>>) -> Result<Polytope> {
        if cycles.len() < 4 {
            return Err(Error::geometry(format!("polytope has {} faces, need at least 4", cycles.len())));
        }
        let diam = diameter(&vertices);
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<PolyEdge> = Vec::new();
        let mut faces = Vec::with_capacity(cycles.len());
        for (fi, cycle) in cycles.into_iter().enumerate() {
            if cycle.len() < 3 {
                return Err(Error::geometry(format!("face {fi} has fewer than 3 vertices")));
            }
            let area_vec = newell(&vertices, &cycle);
            let area = area_vec.norm();
            if area <= 0.0 || !area.is_finite() {
                return Err(Error::geometry(format!("face {fi} has zero area")));
            }
            let normal = area_vec / area;
            let anchor = cycle.iter().map(|&v| vertices[v]).sum::<Vec3>() / cycle.len() as f64;
            let offset = normal.dot(&anchor);
            for &v in &cycle {
                let dev = (normal.dot(&vertices[v]) - offset).abs();
                if dev > tol::PLANAR * diam.max(f64::MIN_POSITIVE) {
                    return Err(Error::geometry(format!(
                        "face {fi} is not planar (vertex {v} off plane by {dev:.3e})"
                    )));
                }
            }
            let mut fedges = Vec::with_capacity(cycle.len());
            for k in 0..cycle.len() {
                let a = cycle[k];
                let b = cycle[(k + 1) % cycle.len()];
                if a == b {
                    return Err(Error::geometry(format!("face {fi} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                let ei = *edge_map.entry(key).or_insert_with(|| {
                    let (va, vb) = (vertices[key.0], vertices[key.1]);
                    let half = 0.5 * (vb - va).norm();
                    edges.push(PolyEdge { ends: [key.0, key.1], anchor: 0.5 * (va + vb), dist: [half, half] });
                    edges.len() - 1
                });
                let (va, vb) = (vertices[a], vertices[b]);
                let t = (vb - va).normalize();
                let m = t.cross(&normal);
                fedges.push((ei, m.dot(&(va - anchor))));
            }
            faces.push(PolyFace { cycle, normal, offset, anchor, edges: fedges });
        }
        let used = {
            let mut u: Vec<usize> = faces.iter().flat_map(|f| f.cycle.iter().copied()).collect();
            u.sort_unstable();
            u.dedup();
            u.len()
        };
        if used as i64 - edges.len() as i64 + faces.len() as i64 != 2 {
            return Err(Error::geometry(format!(
                "polytope fails Euler check: V={used} E={} F={}",
                edges.len(),
                faces.len()
            )));
        }
        Ok(Polytope { vertices, faces, edges })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[PolyFace] {
        &self.faces
    }

    pub fn edges(&self) -> &[PolyEdge] {
        &self.edges
    }

    pub fn face_cycles(&self) -> impl Iterator<Item = &[usize]> {
        self.faces.iter().map(|f| f.cycle.as_slice())
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    /// Replaces the face and edge anchors. Face anchors are projected onto
    /// their planes; edge anchors onto their lines.
    pub fn set_anchors(&mut self, face_anchors: &[Vec3], edge_anchors: &[Vec3]) {
        assert_eq!(face_anchors.len(), self.faces.len());
        assert_eq!(edge_anchors.len(), self.edges.len());
        for (e, &x) in self.edges.iter_mut().zip(edge_anchors) {
            let (va, vb) = (self.vertices[e.ends[0]], self.vertices[e.ends[1]]);
            let t = (vb - va).normalize();
            let x0 = va + t * t.dot(&(x - va));
            e.anchor = x0;
            e.dist = [-t.dot(&(va - x0)), t.dot(&(vb - x0))];
        }
        for (f, &x) in self.faces.iter_mut().zip(face_anchors) {
            let x0 = x - f.normal * (f.normal.dot(&x) - f.offset);
            f.anchor = x0;
            f.offset = f.normal.dot(&x0);
            for k in 0..f.cycle.len() {
                let (va, vb) = (self.vertices[f.cycle[k]], self.vertices[f.cycle[(k + 1) % f.cycle.len()]]);
                let m = (vb - va).normalize().cross(&f.normal);
                f.edges[k].1 = m.dot(&(va - x0));
            }
        }
    }

    /// Same polytope with every vertex mapped by `f`. `f` must be affine with
    /// positive determinant so convexity and orientation carry over.
    pub fn mapped(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Polytope> {
        let verts = self.vertices.iter().map(f).collect();
        Polytope::new(verts, self.faces.iter().map(|f| f.cycle.clone()).collect())
    }

    pub fn volume(&self) -> f64 {
        self.moments([0, 0, 0]).get(0, 0, 0)
    }

    pub fn centroid(&self) -> Vec3 {
        let t = self.moments([1, 1, 1]);
        let v = t.get(0, 0, 0);
        Vec3::new(t.get(1, 0, 0), t.get(0, 1, 0), t.get(0, 0, 1)) / v
    }

    /// Content hash over vertex coordinates quantized at [`tol::HASH_QUANTUM`]
    /// and the face cycles.
    pub fn content_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.vertices {
            for c in v.iter() {
                ((c / tol::HASH_QUANTUM).round() as i64).hash(&mut h);
            }
        }
        for f in &self.faces {
            f.cycle.hash(&mut h);
        }
        h.finish()
    }

    /// All moments ∫ x^a y^b z^c for a ≤ max[0], b ≤ max[1], c ≤ max[2].
    pub fn moments(&self, max: [usize; 3]) -> MomentTable {
        let dims = [max[0] + 1, max[1] + 1, max[2] + 1];
        let size = dims[0] * dims[1] * dims[2];
        let idx = |a: usize, b: usize, c: usize| (a * dims[1] + b) * dims[2] + c;

        let pmax = max[0].max(max[1]).max(max[2]);
        let mut pw = vec![[0.0f64; 3]; self.vertices.len() * (pmax + 1)];
        for (v, x) in self.vertices.iter().enumerate() {
            let base = v * (pmax + 1);
            pw[base] = [1.0; 3];
            for p in 1..=pmax {
                let prev = pw[base + p - 1];
                pw[base + p] = [prev[0] * x.x, prev[1] * x.y, prev[2] * x.z];
            }
        }
        let mono = |v: usize, a: usize, b: usize, c: usize| {
            let base = v * (pmax + 1);
            pw[base + a][0] * pw[base + b][1] * pw[base + c][2]
        };

        let mut edge_tab = vec![0.0; self.edges.len() * size];
        for (ei, e) in self.edges.iter().enumerate() {
            let t = &mut edge_tab[ei * size..(ei + 1) * size];
            let x0 = e.anchor;
            for a in 0..dims[0] {
                for b in 0..dims[1] {
                    for c in 0..dims[2] {
                        let q = (a + b + c) as f64;
                        let mut s = e.dist[0] * mono(e.ends[0], a, b, c) + e.dist[1] * mono(e.ends[1], a, b, c);
                        if a > 0 {
                            s += a as f64 * x0.x * t[idx(a - 1, b, c)];
                        }
                        if b > 0 {
                            s += b as f64 * x0.y * t[idx(a, b - 1, c)];
                        }
                        if c > 0 {
                            s += c as f64 * x0.z * t[idx(a, b, c - 1)];
                        }
                        t[idx(a, b, c)] = s / (1.0 + q);
                    }
                }
            }
        }

        let mut vol = vec![0.0; size];
        let mut ft = vec![0.0; size];
        for f in &self.faces {
            let x0 = f.anchor;
            for a in 0..dims[0] {
                for b in 0..dims[1] {
                    for c in 0..dims[2] {
                        let i = idx(a, b, c);
                        let q = (a + b + c) as f64;
                        let mut s = 0.0;
                        for &(ei, d) in &f.edges {
                            s += d * edge_tab[ei * size + i];
                        }
                        if a > 0 {
                            s += a as f64 * x0.x * ft[idx(a - 1, b, c)];
                        }
                        if b > 0 {
                            s += b as f64 * x0.y * ft[idx(a, b - 1, c)];
                        }
                        if c > 0 {
                            s += c as f64 * x0.z * ft[idx(a, b, c - 1)];
                        }
                        ft[i] = s / (2.0 + q);
                    }
                }
            }
            for i in 0..size {
                vol[i] += f.offset * ft[i];
            }
        }
        for a in 0..dims[0] {
            for b in 0..dims[1] {
                for c in 0..dims[2] {
                    vol[idx(a, b, c)] /= 3.0 + (a + b + c) as f64;
                }
            }
        }
        MomentTable { dims, data: vol }
    }
}

pub(crate) fn diameter(v: &[Vec3]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut lo = v[0];
    let mut hi = v[0];
    for p in v {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Moments ∫ x^a y^b z^c over one polytope for an exponent box.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl MomentTable {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn integrate_monomial(p: &Polytope, m: Monomial) -> f64 {
    let [a, b, c] = m.exps.map(|e| e as usize);
    p.moments([a, b, c]).get(a, b, c)
}

/// Per-polytope, per-exponent cache of monomial integrals.
#[derive(Debug, Default)]
pub struct MonomialCache {
    map: HashMap<(u64, Monomial), f64>,
    hits: u64,
    misses: u64,
}

impl MonomialCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn integrate(&mut self, p: &Polytope, m: Monomial) -> f64 {
        let key = (p.content_hash(), m);
        if let Some(&v) = self.map.get(&key) {
            self.hits += 1;
            return v;
        }
        self.misses += 1;
        let [a, b, c] = m.exps.map(|e| e as usize);
        let table = p.moments([a, b, c]);
        for i in 0..=a {
            for j in 0..=b {
                for k in 0..=c {
                    self.map
                        .entry((key.0, Monomial::new(i as u16, j as u16, k as u16)))
                        .or_insert(table.get(i, j, k));
                }
            }
        }
        table.get(a, b, c)
    }
}

/// Σ c_m ∫_P m, each monomial served through `cache`.
pub fn integrate_polynomial(p: &Polytope, coeffs: &[(Monomial, f64)], cache: &mut MonomialCache) -> f64 {
    coeffs.iter().map(|&(m, c)| c * cache.integrate(p, m)).sum()
}
