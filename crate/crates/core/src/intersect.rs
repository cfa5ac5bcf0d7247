//! Cut mesh T_a ∩ T_f.
//!
//! Per acoustic cell: bounding-box candidates from a uniform grid over fluid
//! boxes, a containment shortcut (all eight corners of the fluid box map
//! inside the reference cube), a separating-axis filter, and half-space
//! clipping of the fluid cell by the acoustic cell's face planes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mesh::{Aabb, CellKind, HexElement, PolyMesh, Vec3};
use crate::quadfree::{self, Polytope};
use crate::tol;

pub fn aabb_overlap(a: &Aabb, b: &Aabb) -> bool {
    a.overlaps(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BroadPhase {
    #[default]
    Grid,
    BruteForce,
}

/// Uniform bucket grid over fluid cell boxes.
pub struct FluidIndex<'m> {
    mesh: &'m PolyMesh,
    origin: Vec3,
    inv_cell: Vec3,
    dims: [usize; 3],
    bucket_ptr: Vec<u32>,
    bucket_items: Vec<u32>,
}

impl<'m> FluidIndex<'m> {
    pub fn build(mesh: &'m PolyMesh) -> Self {
        let n = mesh.num_cells().max(1);
        let bb = mesh.bounds();
        let mut mean = Vec3::zeros();
        for c in 0..mesh.num_cells() {
            mean += mesh.cell_aabb(c).extent();
        }
        mean /= n as f64;
        let ext = bb.extent();
        let mut dims = [1usize; 3];
        for d in 0..3 {
            let s = mean[d].max(ext[d] * 1e-6).max(f64::MIN_POSITIVE);
            dims[d] = ((ext[d] / s).ceil() as usize).clamp(1, 1 << 10);
        }
        while dims[0] * dims[1] * dims[2] > 8 * n + 64 {
            for d in dims.iter_mut() {
                *d = (*d).div_ceil(2).max(1);
            }
        }
        let inv_cell = Vec3::new(
            if ext.x > 0.0 { dims[0] as f64 / ext.x } else { 0.0 },
            if ext.y > 0.0 { dims[1] as f64 / ext.y } else { 0.0 },
            if ext.z > 0.0 { dims[2] as f64 / ext.z } else { 0.0 },
        );
        let mut idx = FluidIndex { mesh, origin: bb.min, inv_cell, dims, bucket_ptr: Vec::new(), bucket_items: Vec::new() };
        let nb = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; nb + 1];
        for c in 0..mesh.num_cells() {
            let (lo, hi) = idx.range(&mesh.cell_aabb(c));
            idx.for_buckets(lo, hi, |b| counts[b + 1] += 1);
        }
        for b in 0..nb {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nb] as usize];
        for c in 0..mesh.num_cells() {
            let (lo, hi) = idx.range(&mesh.cell_aabb(c));
            idx.for_buckets(lo, hi, |b| {
                items[fill[b] as usize] = c as u32;
                fill[b] += 1;
            });
        }
        idx.bucket_ptr = counts;
        idx.bucket_items = items;
        idx
    }

    fn range(&self, b: &Aabb) -> ([usize; 3], [usize; 3]) {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for d in 0..3 {
            let clamp = |v: f64| (v.floor().max(0.0) as usize).min(self.dims[d] - 1);
            lo[d] = clamp((b.min[d] - self.origin[d]) * self.inv_cell[d]);
            hi[d] = clamp((b.max[d] - self.origin[d]) * self.inv_cell[d]);
        }
        (lo, hi)
    }

    fn for_buckets(&self, lo: [usize; 3], hi: [usize; 3], mut f: impl FnMut(usize)) {
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    f((k * self.dims[1] + j) * self.dims[0] + i);
                }
            }
        }
    }

    /// Sorted fluid cells whose boxes overlap `b`. `stamp` is scratch of
    /// length `num_cells`, reused across queries.
    pub fn query(&self, b: &Aabb, stamp: &mut QueryScratch, out: &mut Vec<u32>) {
        out.clear();
        if stamp.marks.len() != self.mesh.num_cells() {
            stamp.marks = vec![0; self.mesh.num_cells()];
            stamp.epoch = 0;
        }
        stamp.epoch = stamp.epoch.wrapping_add(1);
        if stamp.epoch == 0 {
            stamp.marks.iter_mut().for_each(|m| *m = 0);
            stamp.epoch = 1;
        }
        let bounds = self.mesh.bounds();
        if !bounds.overlaps(b) {
            return;
        }
        let (lo, hi) = self.range(b);
        let epoch = stamp.epoch;
        self.for_buckets(lo, hi, |bk| {
            for &c in &self.bucket_items[self.bucket_ptr[bk] as usize..self.bucket_ptr[bk + 1] as usize] {
                if stamp.marks[c as usize] != epoch {
                    stamp.marks[c as usize] = epoch;
                    if self.mesh.cell_aabb(c as usize).overlaps(b) {
                        out.push(c);
                    }
                }
            }
        });
        out.sort_unstable();
    }
}

#[derive(Debug, Default, Clone)]
pub struct QueryScratch {
    marks: Vec<u32>,
    epoch: u32,
}

/// Candidate fluid cells per acoustic cell.
pub fn broad_phase(ta: &PolyMesh, tf: &PolyMesh, mode: BroadPhase) -> Vec<Vec<u32>> {
    match mode {
        BroadPhase::BruteForce => (0..ta.num_cells())
            .map(|a| {
                let ba = ta.cell_aabb(a);
                (0..tf.num_cells() as u32).filter(|&f| tf.cell_aabb(f as usize).overlaps(&ba)).collect()
            })
            .collect(),
        BroadPhase::Grid => {
            let idx = FluidIndex::build(tf);
            let mut scratch = QueryScratch::default();
            (0..ta.num_cells())
                .map(|a| {
                    let mut out = Vec::new();
                    idx.query(&ta.cell_aabb(a), &mut scratch, &mut out);
                    out
                })
                .collect()
        }
    }
}

pub fn inverse_trilinear(element: &HexElement, x: &Vec3) -> Option<Vec3> {
    element.inverse_map(x)
}

/// Convex cell as vertices, outward face cycles and face planes.
#[derive(Debug, Clone)]
pub struct Hull {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Vec<usize>>,
    pub planes: Vec<(Vec3, f64)>,
    pub scale: f64,
}

impl Hull {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Hull {
        let planes = faces
            .iter()
            .map(|cyc| {
                let mut n = Vec3::zeros();
                let mut c = Vec3::zeros();
                for k in 0..cyc.len() {
                    n += vertices[cyc[k]].cross(&vertices[cyc[(k + 1) % cyc.len()]]);
                    c += vertices[cyc[k]];
                }
                let n = n.normalize();
                (n, n.dot(&(c / cyc.len() as f64)))
            })
            .collect();
        let scale = quadfree::diameter(&vertices);
        Hull { vertices, faces, planes, scale }
    }

    pub fn from_cell(mesh: &PolyMesh, c: usize) -> Hull {
        let (v, f) = mesh.cell_local_faces(c);
        let scale = mesh.cell_aabb(c).extent().norm();
        Hull { vertices: v, faces: f, planes: mesh.cell_planes(c), scale }
    }

    pub fn from_polytope(p: &Polytope) -> Hull {
        Hull {
            vertices: p.vertices().to_vec(),
            faces: p.faces().iter().map(|f| f.cycle.clone()).collect(),
            planes: p.faces().iter().map(|f| (f.normal, f.offset)).collect(),
            scale: p.diameter(),
        }
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        Polytope::new(self.vertices.clone(), self.faces.clone())
    }

    /// Volume by a tetrahedral fan around the vertex average.
    pub fn volume(&self) -> f64 {
        let p = self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64;
        let mut v = 0.0;
        for cyc in &self.faces {
            let a = self.vertices[cyc[0]] - p;
            for k in 1..cyc.len() - 1 {
                let b = self.vertices[cyc[k]] - p;
                let c = self.vertices[cyc[k + 1]] - p;
                v += a.dot(&b.cross(&c));
            }
        }
        v / 6.0
    }

    fn edge_directions(&self) -> Vec<Vec3> {
        let mut dirs: Vec<Vec3> = Vec::new();
        for cyc in &self.faces {
            for k in 0..cyc.len() {
                let (a, b) = (cyc[k], cyc[(k + 1) % cyc.len()]);
                if a > b {
                    continue;
                }
                let d = self.vertices[b] - self.vertices[a];
                let n = d.norm();
                if n == 0.0 {
                    continue;
                }
                let d = d / n;
                if !dirs.iter().any(|e| e.cross(&d).norm() < tol::SAT_PARALLEL) {
                    dirs.push(d);
                }
            }
        }
        dirs
    }
}

fn separated_along(axis: &Vec3, p: &[Vec3], q: &[Vec3], slack: f64) -> bool {
    let (mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in p {
        let s = axis.dot(v);
        pmin = pmin.min(s);
        pmax = pmax.max(s);
    }
    let (mut qmin, mut qmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in q {
        let s = axis.dot(v);
        qmin = qmin.min(s);
        qmax = qmax.max(s);
    }
    pmax < qmin - slack || qmax < pmin - slack
}

/// Separating-axis test on hulls. Touching counts as intersecting.
pub fn sat_hulls(p: &Hull, q: &Hull) -> bool {
    let slack = tol::CLIP_SNAP * p.scale.max(q.scale);
    for (n, _) in p.planes.iter().chain(&q.planes) {
        if separated_along(n, &p.vertices, &q.vertices, slack) {
            return false;
        }
    }
    let (dp, dq) = (p.edge_directions(), q.edge_directions());
    for a in &dp {
        for b in &dq {
            let axis = a.cross(b);
            let len = axis.norm();
            if len < tol::SAT_PARALLEL {
                continue;
            }
            if separated_along(&(axis / len), &p.vertices, &q.vertices, slack) {
                return false;
            }
        }
    }
    true
}

pub fn sat_intersects(p: &Polytope, q: &Polytope) -> bool {
    sat_hulls(&Hull::from_polytope(p), &Hull::from_polytope(q))
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    In,
    On,
    Out,
}

/// Clips `p` by the half-space n·x ≤ b. Returns `None` when nothing remains.
fn clip_plane(p: &Hull, n: &Vec3, b: f64, eps: f64) -> Option<Hull> {
    let d: Vec<f64> = p.vertices.iter().map(|v| n.dot(v) - b).collect();
    let side: Vec<Side> = d
        .iter()
        .map(|&x| if x > eps { Side::Out } else if x < -eps { Side::In } else { Side::On })
        .collect();
    if !side.contains(&Side::Out) {
        return Some(p.clone());
    }
    if !side.contains(&Side::In) {
        return None;
    }
    let mut verts = p.vertices.clone();
    let mut is_new = vec![false; verts.len()];
    let mut cut: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::with_capacity(p.faces.len() + 1);
    for cyc in &p.faces {
        let mut out = Vec::with_capacity(cyc.len() + 1);
        for k in 0..cyc.len() {
            let (u, w) = (cyc[k], cyc[(k + 1) % cyc.len()]);
            if side[u] != Side::Out {
                out.push(u);
            }
            let crosses = matches!((side[u], side[w]), (Side::In, Side::Out) | (Side::Out, Side::In));
            if crosses {
                let key = (u.min(w), u.max(w));
                let id = *cut.entry(key).or_insert_with(|| {
                    let (a, c) = (key.0, key.1);
                    let t = d[a] / (d[a] - d[c]);
                    verts.push(p.vertices[a] + (p.vertices[c] - p.vertices[a]) * t);
                    is_new.push(true);
                    verts.len() - 1
                });
                out.push(id);
            }
        }
        out.dedup();
        if out.len() > 1 && out[0] == *out.last().unwrap() {
            out.pop();
        }
        if out.len() >= 3 {
            faces.push(out);
        }
    }
    // cap polygon: kept vertices lying on the plane, ordered around n
    let mut cap: Vec<usize> = Vec::new();
    for f in &faces {
        for &v in f {
            if (is_new[v] || side[v] == Side::On) && !cap.contains(&v) {
                cap.push(v);
            }
        }
    }
    if cap.len() >= 3 {
        let c = cap.iter().map(|&v| verts[v]).sum::<Vec3>() / cap.len() as f64;
        let e1 = {
            let t = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            n.cross(&t).normalize()
        };
        let e2 = n.cross(&e1);
        let mut ang: Vec<(f64, usize)> = cap
            .iter()
            .map(|&v| {
                let r = verts[v] - c;
                (r.dot(&e2).atan2(r.dot(&e1)), v)
            })
            .collect();
        ang.sort_by(|a, b| a.0.total_cmp(&b.0));
        faces.push(ang.into_iter().map(|(_, v)| v).collect());
    }
    if faces.len() < 4 {
        return None;
    }
    // compact vertex storage
    let mut remap = vec![usize::MAX; verts.len()];
    let mut compact = Vec::new();
    for f in faces.iter_mut() {
        for v in f.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = compact.len();
                compact.push(verts[*v]);
            }
            *v = remap[*v];
        }
    }
    Some(Hull { vertices: compact, faces, planes: Vec::new(), scale: p.scale })
}

/// P ∩ Q by successive clipping of P with each face plane of Q.
pub fn clip_hulls(p: &Hull, q: &Hull) -> Option<Hull> {
    let eps = tol::CLIP_SNAP * p.scale.max(q.scale);
    let mut cur = p.clone();
    for (n, b) in &q.planes {
        cur = clip_plane(&cur, n, *b, eps)?;
    }
    Some(cur)
}

/// P ∩ Q, or `None` when the result is below the sliver volume.
pub fn clip_convex(p: &Polytope, q: &Polytope) -> Option<Polytope> {
    let (hp, hq) = (Hull::from_polytope(p), Hull::from_polytope(q));
    let out = clip_hulls(&hp, &hq)?;
    let vmin = hp.volume().min(hq.volume());
    if out.volume() <= tol::SLIVER_VOLUME * vmin {
        return None;
    }
    out.to_polytope().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Contained,
    Clipped,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Contained => "contained",
            Provenance::Clipped => "clipped",
        }
    }
}

/// Compact boundary representation of a clipped cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCell {
    pub vertices: Vec<Vec3>,
    face_ptr: Vec<u16>,
    face_verts: Vec<u16>,
}

impl CutCell {
    fn from_hull(h: &Hull) -> CutCell {
        let mut face_ptr = vec![0u16];
        let mut face_verts = Vec::new();
        for f in &h.faces {
            face_verts.extend(f.iter().map(|&v| v as u16));
            face_ptr.push(face_verts.len() as u16);
        }
        CutCell { vertices: h.vertices.clone(), face_ptr, face_verts }
    }

    pub fn faces(&self) -> Vec<Vec<usize>> {
        self.face_ptr
            .windows(2)
            .map(|w| self.face_verts[w[0] as usize..w[1] as usize].iter().map(|&v| v as usize).collect())
            .collect()
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        Polytope::new(self.vertices.clone(), self.faces())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionRecord {
    pub acoustic: u32,
    pub fluid: u32,
    pub volume: f64,
    pub provenance: Provenance,
    /// Present for clipped records; contained records are the fluid cell.
    pub cut: Option<Box<CutCell>>,
}

#[derive(Debug, Clone, Default)]
pub struct WorkerStats {
    pub acoustic_cells: std::ops::Range<usize>,
    pub candidates: usize,
    pub contained: usize,
    pub clipped: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct CutMesh {
    pub records: Vec<IntersectionRecord>,
    acoustic_ptr: Vec<usize>,
    num_fluid: usize,
    pub workers: Vec<WorkerStats>,
    pub elapsed: Duration,
}

impl CutMesh {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_acoustic(&self) -> usize {
        self.acoustic_ptr.len() - 1
    }

    pub fn num_fluid(&self) -> usize {
        self.num_fluid
    }

    /// Records of acoustic cell `a`, sorted by fluid cell.
    pub fn records_of(&self, a: usize) -> &[IntersectionRecord] {
        &self.records[self.acoustic_ptr[a]..self.acoustic_ptr[a + 1]]
    }

    pub fn record_range(&self, a: usize) -> std::ops::Range<usize> {
        self.acoustic_ptr[a]..self.acoustic_ptr[a + 1]
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.records.iter().filter(|r| r.provenance == p).count()
    }

    /// Geometry of record `i`; contained records are rebuilt from `fluid`.
    pub fn cut_polytope(&self, i: usize, fluid: &PolyMesh) -> Result<Polytope> {
        let r = &self.records[i];
        match &r.cut {
            Some(c) => c.to_polytope(),
            None => fluid.cell_polytope(r.fluid as usize),
        }
    }

    pub fn volume_by_acoustic(&self) -> Vec<f64> {
        (0..self.num_acoustic()).map(|a| self.records_of(a).iter().map(|r| r.volume).sum()).collect()
    }

    pub fn volume_by_fluid(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_fluid];
        for r in &self.records {
            v[r.fluid as usize] += r.volume;
        }
        v
    }

    /// Text export: one `acoustic_id fluid_id volume provenance` line per record.
    pub fn export(&self) -> String {
        let mut s = String::with_capacity(self.records.len() * 40);
        let _ = writeln!(
            s,
            "# cutmesh acoustic_cells={} fluid_cells={} records={}",
            self.num_acoustic(),
            self.num_fluid,
            self.records.len()
        );
        for r in &self.records {
            let _ = writeln!(s, "{} {} {:?} {}", r.acoustic, r.fluid, r.volume, r.provenance.as_str());
        }
        s
    }

    /// Full geometry dump: per record a header line, vertices and face cycles.
    pub fn export_polytopes(&self, fluid: &PolyMesh) -> Result<String> {
        let mut s = String::new();
        for i in 0..self.records.len() {
            let r = &self.records[i];
            let p = self.cut_polytope(i, fluid)?;
            let _ = writeln!(s, "record {} {} vertices {} faces {}", r.acoustic, r.fluid, p.vertices().len(), p.faces().len());
            for v in p.vertices() {
                let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
            }
            for c in p.face_cycles() {
                let _ = writeln!(s, "{} {}", c.len(), c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntersectOptions {
    pub workers: usize,
    pub broad_phase: BroadPhase,
}

impl Default for IntersectOptions {
    fn default() -> Self {
        IntersectOptions { workers: 1, broad_phase: BroadPhase::Grid }
    }
}

pub fn compute_intersection(ta: &PolyMesh, tf: &PolyMesh, workers: usize) -> Result<CutMesh> {
    compute_intersection_with(ta, tf, &IntersectOptions { workers, ..Default::default() })
}

pub fn compute_intersection_with(ta: &PolyMesh, tf: &PolyMesh, opts: &IntersectOptions) -> Result<CutMesh> {
    let start = Instant::now();
    let na = ta.num_cells();
    let workers = opts.workers.max(1).min(na.max(1));
    let index = match opts.broad_phase {
        BroadPhase::Grid => Some(FluidIndex::build(tf)),
        BroadPhase::BruteForce => None,
    };
    let chunks: Vec<std::ops::Range<usize>> = (0..workers).map(|w| (w * na / workers)..((w + 1) * na / workers)).collect();
    let run = |range: std::ops::Range<usize>| -> Result<(Vec<IntersectionRecord>, Vec<usize>, WorkerStats)> {
        let t0 = Instant::now();
        let mut stats = WorkerStats { acoustic_cells: range.clone(), ..Default::default() };
        let mut recs = Vec::new();
        let mut counts = Vec::with_capacity(range.len());
        let mut scratch = QueryScratch::default();
        let mut cand = Vec::new();
        for a in range {
            let before = recs.len();
            let ba = ta.cell_aabb(a);
            match &index {
                Some(idx) => idx.query(&ba, &mut scratch, &mut cand),
                None => {
                    cand.clear();
                    cand.extend((0..tf.num_cells() as u32).filter(|&f| tf.cell_aabb(f as usize).overlaps(&ba)));
                }
            }
            stats.candidates += cand.len();
            intersect_cell(ta, tf, a, &cand, &mut recs)?;
            for r in &recs[before..] {
                match r.provenance {
                    Provenance::Contained => stats.contained += 1,
                    Provenance::Clipped => stats.clipped += 1,
                }
            }
            counts.push(recs.len() - before);
        }
        stats.elapsed = t0.elapsed();
        Ok((recs, counts, stats))
    };
    let parts: Vec<Result<_>> = if workers == 1 {
        vec![run(0..na)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunks.iter().cloned().map(|r| s.spawn(move || run(r))).collect();
            handles.into_iter().map(|h| h.join().expect("intersection worker panicked")).collect()
        })
    };
    let mut records = Vec::new();
    let mut acoustic_ptr = vec![0usize];
    let mut stats = Vec::new();
    for p in parts {
        let (recs, counts, st) = p?;
        for c in counts {
            acoustic_ptr.push(acoustic_ptr.last().unwrap() + c);
        }
        records.extend(recs);
        stats.push(st);
    }
    Ok(CutMesh { records, acoustic_ptr, num_fluid: tf.num_cells(), workers: stats, elapsed: start.elapsed() })
}

fn intersect_cell(ta: &PolyMesh, tf: &PolyMesh, a: usize, cand: &[u32], out: &mut Vec<IntersectionRecord>) -> Result<()> {
    let shortcut = if ta.kind() == CellKind::Hexahedral {
        let e = ta.hex_element(a);
        (e.is_affine() || e.has_planar_faces()).then_some(e)
    } else {
        None
    };
    let hull_a = Hull::from_cell(ta, a);
    let vol_a = ta.cell_volume(a);
    let lim = 1.0 + tol::REF_CONTAIN;
    for &f in cand {
        let fi = f as usize;
        if let Some(e) = &shortcut {
            let inside = tf.cell_aabb(fi).corners().iter().all(|x| match e.inverse_map(x) {
                Some(xi) => xi.iter().all(|c| c.abs() <= lim),
                None => false,
            });
            if inside {
                out.push(IntersectionRecord {
                    acoustic: a as u32,
                    fluid: f,
                    volume: tf.cell_volume(fi),
                    provenance: Provenance::Contained,
                    cut: None,
                });
                continue;
            }
        }
        let hull_f = Hull::from_cell(tf, fi);
        if !sat_hulls(&hull_a, &hull_f) {
            continue;
        }
        let Some(cut) = clip_hulls(&hull_f, &hull_a) else { continue };
        let v = cut.volume();
        if v <= tol::SLIVER_VOLUME * vol_a.min(tf.cell_volume(fi)) {
            continue;
        }
        if cut.vertices.len() > u16::MAX as usize {
            return Err(Error::geometry(format!("cut of acoustic {a} and fluid {f} has too many vertices")));
        }
        out.push(IntersectionRecord {
            acoustic: a as u32,
            fluid: f,
            volume: v,
            provenance: Provenance::Clipped,
            cut: Some(Box::new(CutCell::from_hull(&cut))),
        });
    }
    Ok(())
}

/// ∫ m over the whole cut mesh, summed in record order.
pub fn integrate_over_cutmesh(cut: &CutMesh, fluid: &PolyMesh, m: quadfree::Monomial) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..cut.len() {
        s += quadfree::integrate_monomial(&cut.cut_polytope(i, fluid)?, m);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cartesian;

    fn bx(lo: f64, hi: f64) -> Aabb {
        Aabb::new(Vec3::repeat(lo), Vec3::repeat(hi))
    }

    fn cube_poly(lo: Vec3, hi: Vec3) -> Polytope {
        let m = generate_cartesian(Aabb::new(lo, hi), [1, 1, 1]).unwrap();
        m.cell_polytope(0).unwrap()
    }

    #[test]
    fn sat_basic() {
        let a = cube_poly(Vec3::zeros(), Vec3::repeat(1.0));
        let b = cube_poly(Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 1.0, 1.0));
        assert!(sat_intersects(&a, &a));
        assert!(!sat_intersects(&a, &b));
        let touch = cube_poly(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.0));
        assert!(sat_intersects(&a, &touch));
    }

    fn tet(v: [Vec3; 4]) -> Polytope {
        let mut faces = vec![vec![0, 1, 2], vec![0, 3, 1], vec![0, 2, 3], vec![1, 3, 2]];
        let n = (v[1] - v[0]).cross(&(v[2] - v[0]));
        if n.dot(&(v[3] - v[0])) > 0.0 {
            faces.iter_mut().for_each(|f| f.reverse());
        }
        Polytope::new(v.to_vec(), faces).unwrap()
    }

    #[test]
    fn sat_needs_edge_axes() {
        // ridge along x at z=0 above a ridge along y at z=−1, and its mirror
        // lifted: only the x × y axis separates them
        let lift = 0.01;
        let t1 = tet([Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, -1.0), Vec3::new(0.0, -1.0, -1.0)]);
        let t2 = tet([
            Vec3::new(0.0, -1.0, lift),
            Vec3::new(0.0, 1.0, lift),
            Vec3::new(-1.0, 0.0, 1.0 + lift),
            Vec3::new(1.0, 0.0, 1.0 + lift),
        ]);
        assert!(t1.volume() > 0.0 && t2.volume() > 0.0);
        let (h1, h2) = (Hull::from_polytope(&t1), Hull::from_polytope(&t2));
        for (n, _) in h1.planes.iter().chain(&h2.planes) {
            assert!(!separated_along(n, &h1.vertices, &h2.vertices, 0.0));
        }
        assert!(!sat_intersects(&t1, &t2));
        assert!(clip_convex(&t1, &t2).is_none());
    }

    #[test]
    fn clip_half_overlap() {
        let a = cube_poly(Vec3::zeros(), Vec3::repeat(1.0));
        let b = cube_poly(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
        let c = clip_convex(&a, &b).unwrap();
        assert!((c.volume() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn clip_nested_returns_inner() {
        let outer = cube_poly(Vec3::zeros(), Vec3::repeat(1.0));
        let inner = cube_poly(Vec3::repeat(0.25), Vec3::new(0.5, 0.75, 0.5));
        let c = clip_convex(&inner, &outer).unwrap();
        assert!((c.volume() - inner.volume()).abs() < 1e-12);
        let c = clip_convex(&outer, &inner).unwrap();
        assert!((c.volume() - inner.volume()).abs() < 1e-12);
    }

    #[test]
    fn clip_oblique_corner() {
        // unit cube cut by x+y+z ≤ 1: the corner tetrahedron of volume 1/6
        let cube = Hull::from_polytope(&cube_poly(Vec3::zeros(), Vec3::repeat(1.0)));
        let n = Vec3::repeat(1.0).normalize();
        let h = clip_plane(&cube, &n, 1.0 / 3f64.sqrt(), 1e-12).unwrap();
        let p = h.to_polytope().unwrap();
        assert_eq!(p.faces().len(), 4);
        assert!((p.volume() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn broad_phase_identical_and_disjoint() {
        let m = generate_cartesian(bx(0.0, 1.0), [1, 1, 1]).unwrap();
        assert_eq!(broad_phase(&m, &m, BroadPhase::Grid), vec![vec![0]]);
        let far = generate_cartesian(bx(5.0, 6.0), [2, 2, 2]).unwrap();
        assert!(broad_phase(&m, &far, BroadPhase::Grid).iter().all(|c| c.is_empty()));
    }

    #[test]
    fn broad_phase_modes_agree() {
        let a = generate_cartesian(bx(-0.5, 0.5), [4, 4, 4]).unwrap();
        let f = generate_cartesian(bx(-0.5, 0.5), [7, 7, 7]).unwrap();
        let g = broad_phase(&a, &f, BroadPhase::Grid);
        let b = broad_phase(&a, &f, BroadPhase::BruteForce);
        assert_eq!(g, b);
    }

    #[test]
    fn identical_meshes_give_identity_cut() {
        let m = generate_cartesian(bx(-0.5, 0.5), [3, 3, 3]).unwrap();
        let cut = compute_intersection(&m, &m, 1).unwrap();
        assert_eq!(cut.len(), 27);
        for r in &cut.records {
            assert_eq!(r.acoustic, r.fluid);
            assert!((r.volume - m.cell_volume(r.acoustic as usize)).abs() < 1e-15);
        }
    }

    #[test]
    fn nested_all_contained() {
        let a = generate_cartesian(bx(-0.5, 0.5), [4, 4, 4]).unwrap();
        let f = generate_cartesian(bx(-0.5, 0.5), [8, 8, 8]).unwrap();
        let cut = compute_intersection(&a, &f, 2).unwrap();
        assert_eq!(cut.len(), 512);
        assert_eq!(cut.count(Provenance::Contained), 512);
        let total: f64 = cut.records.iter().map(|r| r.volume).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn workers_do_not_change_export() {
        let a = generate_cartesian(bx(-0.5, 0.5), [3, 3, 3]).unwrap();
        let f = generate_cartesian(bx(-0.5, 0.5), [5, 5, 5]).unwrap();
        let one = compute_intersection(&a, &f, 1).unwrap().export();
        for w in [2, 4, 8] {
            assert_eq!(compute_intersection(&a, &f, w).unwrap().export(), one);
        }
    }

    #[test]
    fn straddling_census_small() {
        // 2 acoustic cells per axis vs 3 fluid: middle fluid layer straddles
        let a = generate_cartesian(bx(-0.5, 0.5), [2, 2, 2]).unwrap();
        let f = generate_cartesian(bx(-0.5, 0.5), [3, 3, 3]).unwrap();
        let cut = compute_intersection(&a, &f, 1).unwrap();
        assert_eq!(cut.len(), 64);
        assert_eq!(cut.count(Provenance::Contained), 8);
        for (a_i, v) in cut.volume_by_acoustic().iter().enumerate() {
            assert!((v - a.cell_volume(a_i)).abs() < 1e-14);
        }
        for (f_i, v) in cut.volume_by_fluid().iter().enumerate() {
            assert!((v - f.cell_volume(f_i)).abs() < 1e-14);
        }
    }
}
