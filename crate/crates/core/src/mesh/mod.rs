//! Polyhedral and hexahedral meshes: storage, validation, geometry and I/O.

mod generate;
mod hex;
mod io;

pub use generate::{generate_cartesian, generate_distorted, generate_tensor, graded_coordinates, OGridSpec};
pub use hex::HexElement;
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::quadfree::Polytope;
use crate::tol;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut it = pts.into_iter();
        let first = *it.next().expect("empty point set");
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Aabb { min: lo, max: hi }
    }

    /// Closed-interval overlap: touching boxes overlap.
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|d| self.min[d] <= p[d] && p[d] <= self.max[d])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.min + self.max)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(b.x, b.y, b.z),
            Vec3::new(a.x, b.y, b.z),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Hexahedral,
    General,
}

/// Oriented face reference inside a cell: `flipped` means the stored cycle is
/// clockwise as seen from outside this cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceRef {
    pub face: u32,
    pub flipped: bool,
}

const NONE: u32 = u32::MAX;

/// Unstructured mesh of convex, planar-faced cells. Immutable once built.
#[derive(Debug, Clone)]
pub struct PolyMesh {
    vertices: Vec<Vec3>,
    face_ptr: Vec<usize>,
    face_verts: Vec<u32>,
    cell_ptr: Vec<usize>,
    cell_faces: Vec<FaceRef>,
    kind: CellKind,
    hexes: Vec<[u32; 8]>,

    face_cells: Vec<[u32; 2]>,
    face_area: Vec<f64>,
    face_normal: Vec<Vec3>,
    face_centroid: Vec<Vec3>,
    cell_volume: Vec<f64>,
    cell_centroid: Vec<Vec3>,
    cell_aabb: Vec<Aabb>,
    id: u64,
}

impl PartialEq for PolyMesh {
    fn eq(&self, o: &Self) -> bool {
        self.vertices == o.vertices
            && self.face_ptr == o.face_ptr
            && self.face_verts == o.face_verts
            && self.cell_ptr == o.cell_ptr
            && self.cell_faces == o.cell_faces
    }
}

/// Local corner cycles of the six hexahedron faces, outward oriented, in
/// reference-corner order (corner k has ξ bits (k∈{1,2,5,6}, k∈{2,3,6,7}, k≥4)).
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 4, 7, 3], // ξ = −1
    [1, 2, 6, 5], // ξ = +1
    [0, 1, 5, 4], // η = −1
    [2, 3, 7, 6], // η = +1
    [0, 3, 2, 1], // ζ = −1
    [4, 5, 6, 7], // ζ = +1
];

/// Reference coordinates of the hexahedron corners.
pub const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Area vector; relative to the first vertex so small faces far from the
/// origin keep their precision.
fn newell(vertices: &[Vec3], cycle: &[u32]) -> Vec3 {
    let o = vertices[cycle[0] as usize];
    let mut n = Vec3::zeros();
    for k in 0..cycle.len() {
        let a = vertices[cycle[k] as usize] - o;
        let b = vertices[cycle[(k + 1) % cycle.len()] as usize] - o;
        n += a.cross(&b);
    }
    n * 0.5
}

fn points_diameter<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> f64 {
    Aabb::from_points(pts).extent().norm()
}

impl PolyMesh {
    /// Builds and validates a mesh from face cycles and oriented cell face
    /// lists. Non-planar quadrilaterals are split into two triangles.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>, cells: Vec<Vec<FaceRef>>) -> Result<PolyMesh> {
        Self::build(vertices, faces, cells, None)
    }

    /// Builds a hexahedral mesh from corner lists in reference-corner order.
    /// Faces are created once per distinct corner quadruple.
    pub fn from_hexes(vertices: Vec<Vec3>, hexes: Vec<[usize; 8]>) -> Result<PolyMesh> {
        let mut faces: Vec<Vec<usize>> = Vec::new();
        let mut lookup: HashMap<[usize; 4], u32> = HashMap::new();
        let mut cells = Vec::with_capacity(hexes.len());
        for (ci, h) in hexes.iter().enumerate() {
            if h.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::geometry(format!("cell {ci} references a missing vertex")));
            }
            let mut refs = Vec::with_capacity(6);
            for lf in HEX_FACES {
                let cyc: Vec<usize> = lf.iter().map(|&k| h[k]).collect();
                let mut key = [cyc[0], cyc[1], cyc[2], cyc[3]];
                key.sort_unstable();
                match lookup.get(&key) {
                    Some(&f) => refs.push(FaceRef { face: f, flipped: true }),
                    None => {
                        let f = faces.len() as u32;
                        lookup.insert(key, f);
                        faces.push(cyc);
                        refs.push(FaceRef { face: f, flipped: false });
                    }
                }
            }
            cells.push(refs);
        }
        let hx = hexes.iter().map(|h| h.map(|v| v as u32)).collect();
        Self::build(vertices, faces, cells, Some(hx))
    }

    fn build(
        vertices: Vec<Vec3>,
        faces: Vec<Vec<usize>>,
        mut cells: Vec<Vec<FaceRef>>,
        hexes: Option<Vec<[u32; 8]>>,
    ) -> Result<PolyMesh> {
        let nv = vertices.len();
        let mut face_ptr = Vec::with_capacity(faces.len() + 1);
        let mut face_verts: Vec<u32> = Vec::new();
        face_ptr.push(0);
        // faces appended by splitting, indexed by original face
        let mut split: HashMap<u32, u32> = HashMap::new();
        let mut extra: Vec<Vec<u32>> = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.len() < 3 {
                return Err(Error::geometry(format!("face {fi} has fewer than 3 vertices")));
            }
            for k in 0..f.len() {
                if f[k] >= nv {
                    return Err(Error::geometry(format!("face {fi} references missing vertex {}", f[k])));
                }
                if f[k] == f[(k + 1) % f.len()] {
                    return Err(Error::geometry(format!("face {fi} repeats vertex {}", f[k])));
                }
            }
            let cyc: Vec<u32> = f.iter().map(|&v| v as u32).collect();
            let n = newell(&vertices, &cyc);
            let pts: Vec<Vec3> = cyc.iter().map(|&v| vertices[v as usize]).collect();
            let diam = points_diameter(&pts);
            if n.norm() <= 1e-14 * diam * diam {
                return Err(Error::geometry(format!("face {fi} is degenerate (zero area)")));
            }
            let nn = n.normalize();
            let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
            let dev = pts.iter().map(|p| nn.dot(&(p - c)).abs()).fold(0.0, f64::max);
            if dev > tol::PLANAR * diam {
                if cyc.len() != 4 {
                    return Err(Error::geometry(format!(
                        "face {fi} is not planar (deviation {dev:.3e}, diameter {diam:.3e})"
                    )));
                }
                // split along the diagonal that keeps the owner side convex
                let t = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
                let (a, b) = if t.dot(&(pts[3] - pts[0])) <= 0.0 {
                    ([cyc[0], cyc[1], cyc[2]], vec![cyc[0], cyc[2], cyc[3]])
                } else {
                    ([cyc[0], cyc[1], cyc[3]], vec![cyc[1], cyc[2], cyc[3]])
                };
                face_verts.extend_from_slice(&a);
                split.insert(fi as u32, (faces.len() + extra.len()) as u32);
                extra.push(b);
            } else {
                face_verts.extend_from_slice(&cyc);
            }
            face_ptr.push(face_verts.len());
        }
        for e in extra {
            face_verts.extend_from_slice(&e);
            face_ptr.push(face_verts.len());
        }
        let nf = face_ptr.len() - 1;
        let any_split = !split.is_empty();
        if any_split {
            for c in cells.iter_mut() {
                let mut add = Vec::new();
                for r in c.iter() {
                    if let Some(&g) = split.get(&r.face) {
                        add.push(FaceRef { face: g, flipped: r.flipped });
                    }
                }
                c.extend(add);
            }
        }

        let mut cell_ptr = Vec::with_capacity(cells.len() + 1);
        let mut cell_faces = Vec::new();
        cell_ptr.push(0);
        let mut face_cells = vec![[NONE, NONE]; nf];
        for (ci, c) in cells.iter().enumerate() {
            if c.len() < 4 {
                return Err(Error::geometry(format!("cell {ci} has fewer than 4 faces")));
            }
            for r in c {
                let f = r.face as usize;
                if f >= nf {
                    return Err(Error::geometry(format!("cell {ci} references missing face {f}")));
                }
                let slot = if r.flipped { 1 } else { 0 };
                if face_cells[f][slot] != NONE {
                    return Err(Error::geometry(format!(
                        "face {f} used with the same orientation by cells {} and {ci}",
                        face_cells[f][slot]
                    )));
                }
                face_cells[f][slot] = ci as u32;
            }
            cell_faces.extend_from_slice(c);
            cell_ptr.push(cell_faces.len());
        }
        // faces referenced only flipped: store them with the referencing cell as owner
        let mut reowned = vec![false; nf];
        for f in 0..nf {
            if face_cells[f][0] == NONE && face_cells[f][1] != NONE {
                face_verts[face_ptr[f]..face_ptr[f + 1]].reverse();
                face_cells[f] = [face_cells[f][1], NONE];
                reowned[f] = true;
            }
        }
        for r in cell_faces.iter_mut() {
            if reowned[r.face as usize] {
                r.flipped = false;
            }
        }

        let mut mesh = PolyMesh {
            vertices,
            face_ptr,
            face_verts,
            cell_ptr,
            cell_faces,
            kind: CellKind::General,
            hexes: Vec::new(),
            face_cells,
            face_area: Vec::new(),
            face_normal: Vec::new(),
            face_centroid: Vec::new(),
            cell_volume: Vec::new(),
            cell_centroid: Vec::new(),
            cell_aabb: Vec::new(),
            id: 0,
        };
        mesh.compute_face_geometry();
        mesh.validate_cells()?;
        match hexes {
            Some(h) if !any_split => {
                mesh.kind = CellKind::Hexahedral;
                mesh.hexes = h;
            }
            Some(_) => {}
            None => mesh.detect_hexes(),
        }
        if mesh.kind == CellKind::Hexahedral {
            for c in 0..mesh.num_cells() {
                let e = mesh.hex_element(c);
                if e.min_corner_jacobian() <= 0.0 {
                    return Err(Error::geometry(format!("cell {c}: hexahedron has non-positive Jacobian")));
                }
            }
        }
        mesh.id = mesh.fingerprint();
        Ok(mesh)
    }

    fn compute_face_geometry(&mut self) {
        let nf = self.num_faces();
        self.face_area = Vec::with_capacity(nf);
        self.face_normal = Vec::with_capacity(nf);
        self.face_centroid = Vec::with_capacity(nf);
        for f in 0..nf {
            let cyc = self.face(f);
            let n = newell(&self.vertices, cyc);
            let area = n.norm();
            let p0 = self.vertices[cyc[0] as usize];
            let mut c = Vec3::zeros();
            let mut w = 0.0;
            for k in 1..cyc.len() - 1 {
                let (p1, p2) = (self.vertices[cyc[k] as usize], self.vertices[cyc[k + 1] as usize]);
                let a = 0.5 * (p1 - p0).cross(&(p2 - p0)).dot(&n) / area;
                c += a * (p0 + p1 + p2) / 3.0;
                w += a;
            }
            self.face_area.push(area);
            self.face_normal.push(n / area);
            self.face_centroid.push(c / w);
        }
    }

    fn validate_cells(&mut self) -> Result<()> {
        let nc = self.num_cells();
        self.cell_volume = Vec::with_capacity(nc);
        self.cell_centroid = Vec::with_capacity(nc);
        self.cell_aabb = Vec::with_capacity(nc);
        for c in 0..nc {
            let verts = self.cell_vertices(c);
            let pts: Vec<Vec3> = verts.iter().map(|&v| self.vertices[v]).collect();
            let bb = Aabb::from_points(&pts);
            let diam = bb.extent().norm();
            let p = pts.iter().sum::<Vec3>() / pts.len() as f64;

            let mut closure = Vec3::zeros();
            let mut vol = 0.0;
            let mut mom = Vec3::zeros();
            for r in self.cell_face_refs(c) {
                let f = r.face as usize;
                let s = if r.flipped { -1.0 } else { 1.0 };
                closure += s * self.face_area[f] * self.face_normal[f];
                let cyc = self.face(f);
                let v0 = self.vertices[cyc[0] as usize] - p;
                for k in 1..cyc.len() - 1 {
                    let v1 = self.vertices[cyc[k] as usize] - p;
                    let v2 = self.vertices[cyc[k + 1] as usize] - p;
                    let tv = s * v0.dot(&v1.cross(&v2)) / 6.0;
                    vol += tv;
                    mom += tv * (v0 + v1 + v2) / 4.0;
                }
            }
            if closure.norm() > tol::CLOSED * diam * diam {
                return Err(Error::geometry(format!(
                    "cell {c} is not closed (|Σ n|F|| = {:.3e})",
                    closure.norm()
                )));
            }
            if !(vol > 0.0) {
                return Err(Error::geometry(format!("cell {c} has non-positive volume {vol:.6e}")));
            }
            for r in self.cell_face_refs(c) {
                let f = r.face as usize;
                let s = if r.flipped { -1.0 } else { 1.0 };
                let n = s * self.face_normal[f];
                let x0 = self.face_centroid[f];
                for q in &pts {
                    let d = n.dot(&(q - x0));
                    if d > tol::CONVEX * diam {
                        return Err(Error::geometry(format!(
                            "cell {c} is not convex (vertex beyond face {f} by {d:.3e})"
                        )));
                    }
                }
            }
            self.cell_volume.push(vol);
            self.cell_centroid.push(p + mom / vol);
            self.cell_aabb.push(bb);
        }
        Ok(())
    }

    /// Recognizes hexahedra from topology: six quadrilateral faces whose
    /// vertical edges pair a bottom face with a top face.
    fn detect_hexes(&mut self) {
        let mut hexes = Vec::with_capacity(self.num_cells());
        for c in 0..self.num_cells() {
            match self.hex_corners_from_topology(c) {
                Some(h) => hexes.push(h),
                None => return,
            }
        }
        let ok = hexes.iter().all(|h| HexElement::new(h.map(|v| self.vertices[v as usize])).min_corner_jacobian() > 0.0);
        if ok && !hexes.is_empty() {
            self.kind = CellKind::Hexahedral;
            self.hexes = hexes;
        }
    }

    fn hex_corners_from_topology(&self, c: usize) -> Option<[u32; 8]> {
        let refs = self.cell_face_refs(c);
        if refs.len() != 6 {
            return None;
        }
        let mut cycles: Vec<Vec<u32>> = Vec::with_capacity(6);
        for r in refs {
            let f = self.face(r.face as usize);
            if f.len() != 4 {
                return None;
            }
            let mut cyc = f.to_vec();
            if r.flipped {
                cyc.reverse();
            }
            cycles.push(cyc);
        }
        let b = &cycles[0];
        let bottom = [b[0], b[3], b[2], b[1]];
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for cyc in &cycles {
            for k in 0..4 {
                let (u, v) = (cyc[k], cyc[(k + 1) % 4]);
                adj.entry(u).or_default().push(v);
                adj.entry(v).or_default().push(u);
            }
        }
        let mut h = [0u32; 8];
        h[..4].copy_from_slice(&bottom);
        for i in 0..4 {
            let mut up: Vec<u32> = adj.get(&bottom[i])?.iter().copied().filter(|v| !bottom.contains(v)).collect();
            up.sort_unstable();
            up.dedup();
            if up.len() != 1 {
                return None;
            }
            h[4 + i] = up[0];
        }
        let mut all = h.to_vec();
        all.sort_unstable();
        all.dedup();
        if all.len() != 8 {
            return None;
        }
        for lf in HEX_FACES {
            let mut key: Vec<u32> = lf.iter().map(|&k| h[k]).collect();
            key.sort_unstable();
            if !cycles.iter().any(|cyc| {
                let mut s = cyc.clone();
                s.sort_unstable();
                s == key
            }) {
                return None;
            }
        }
        Some(h)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.vertices.len().hash(&mut h);
        self.num_faces().hash(&mut h);
        self.num_cells().hash(&mut h);
        for v in &self.vertices {
            v.x.to_bits().hash(&mut h);
            v.y.to_bits().hash(&mut h);
            v.z.to_bits().hash(&mut h);
        }
        self.face_verts.hash(&mut h);
        h.finish()
    }

    /// Content fingerprint identifying this mesh for [`CellField`]s.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.face_ptr.len() - 1
    }

    pub fn num_cells(&self) -> usize {
        self.cell_ptr.len() - 1
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    /// Vertex cycle of face `f`, counter-clockwise seen from its owner cell.
    pub fn face(&self, f: usize) -> &[u32] {
        &self.face_verts[self.face_ptr[f]..self.face_ptr[f + 1]]
    }

    pub fn cell_face_refs(&self, c: usize) -> &[FaceRef] {
        &self.cell_faces[self.cell_ptr[c]..self.cell_ptr[c + 1]]
    }

    /// (owner, neighbour) of a face; the neighbour is `None` on the boundary.
    pub fn face_cells(&self, f: usize) -> (usize, Option<usize>) {
        let [o, n] = self.face_cells[f];
        (o as usize, if n == NONE { None } else { Some(n as usize) })
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_area[f]
    }

    /// Unit normal of face `f`, pointing out of its owner cell.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normal[f]
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        self.face_centroid[f]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_volume[c]
    }

    pub fn cell_centroid(&self, c: usize) -> Vec3 {
        self.cell_centroid[c]
    }

    pub fn cell_aabb(&self, c: usize) -> Aabb {
        self.cell_aabb[c]
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volume.iter().sum()
    }

    /// Sorted distinct vertex ids of cell `c`.
    pub fn cell_vertices(&self, c: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .cell_face_refs(c)
            .iter()
            .flat_map(|r| self.face(r.face as usize).iter().map(|&v| v as usize))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Outward vertex cycles of cell `c`, indexing [`PolyMesh::cell_vertices`].
    pub fn cell_local_faces(&self, c: usize) -> (Vec<Vec3>, Vec<Vec<usize>>) {
        let ids = self.cell_vertices(c);
        let local = |g: u32| ids.binary_search(&(g as usize)).unwrap();
        let cycles = self
            .cell_face_refs(c)
            .iter()
            .map(|r| {
                let mut cyc: Vec<usize> = self.face(r.face as usize).iter().map(|&g| local(g)).collect();
                if r.flipped {
                    cyc.reverse();
                }
                cyc
            })
            .collect();
        (ids.iter().map(|&g| self.vertices[g]).collect(), cycles)
    }

    /// Outward face planes (unit normal, offset) of cell `c`.
    pub fn cell_planes(&self, c: usize) -> Vec<(Vec3, f64)> {
        self.cell_face_refs(c)
            .iter()
            .map(|r| {
                let f = r.face as usize;
                let n = if r.flipped { -self.face_normal[f] } else { self.face_normal[f] };
                (n, n.dot(&self.face_centroid[f]))
            })
            .collect()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f][1] == NONE
    }

    /// Corner vertex ids of hexahedral cell `c` in reference-corner order.
    pub fn hex_corner_ids(&self, c: usize) -> Option<[usize; 8]> {
        self.hexes.get(c).map(|h| h.map(|v| v as usize))
    }

    /// Trilinear element of cell `c`. Panics on non-hexahedral meshes.
    pub fn hex_element(&self, c: usize) -> HexElement {
        let h = self.hexes[c];
        HexElement::with_ids(h.map(|v| v as usize), h.map(|v| self.vertices[v as usize]))
    }

    /// Polytope hierarchy of cell `c` for the quadrature-free integrator.
    pub fn cell_polytope(&self, c: usize) -> Result<Polytope> {
        let (verts, cycles) = self.cell_local_faces(c);
        Polytope::new(verts, cycles).map_err(|e| Error::geometry(format!("cell {c}: {e}")))
    }

    /// Raw topology, as stored: faces as vertex cycles, cells as oriented refs.
    pub fn topology(&self) -> (Vec<Vec<usize>>, Vec<Vec<FaceRef>>) {
        let faces = (0..self.num_faces())
            .map(|f| self.face(f).iter().map(|&v| v as usize).collect())
            .collect();
        let cells = (0..self.num_cells()).map(|c| self.cell_face_refs(c).to_vec()).collect();
        (faces, cells)
    }

    /// Same topology with new vertex positions, re-validated.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<PolyMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Dimension { expected: self.vertices.len(), got: vertices.len() });
        }
        if self.kind == CellKind::Hexahedral {
            let hexes = self.hexes.iter().map(|h| h.map(|v| v as usize)).collect();
            return PolyMesh::from_hexes(vertices, hexes);
        }
        let (faces, cells) = self.topology();
        PolyMesh::new(vertices, faces, cells)
    }
}

/// Per-cell values tied to one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    pub mesh_id: u64,
    pub values: Vec<T>,
}

impl<T: Clone> CellField<T> {
    pub fn new(mesh: &PolyMesh, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.num_cells() {
            return Err(Error::Dimension { expected: mesh.num_cells(), got: values.len() });
        }
        Ok(CellField { mesh_id: mesh.id(), values })
    }

    pub fn from_fn(mesh: &PolyMesh, f: impl Fn(usize) -> T) -> Self {
        CellField { mesh_id: mesh.id(), values: (0..mesh.num_cells()).map(f).collect() }
    }

    pub fn check(&self, mesh: &PolyMesh) -> Result<()> {
        if self.values.len() != mesh.num_cells() || self.mesh_id != mesh.id() {
            return Err(Error::invalid(format!(
                "cell field does not belong to this mesh ({} values, mesh has {} cells)",
                self.values.len(),
                mesh.num_cells()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> PolyMesh {
        generate_cartesian(Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)), [1, 1, 1]).unwrap()
    }

    #[test]
    fn aabb_overlap_closed() {
        let a = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        assert!(a.overlaps(&Aabb::new(Vec3::repeat(0.5), Vec3::repeat(1.5))));
        assert!(!a.overlaps(&Aabb::new(Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 1.0, 1.0))));
        assert!(a.overlaps(&Aabb::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.0))));
    }

    #[test]
    fn single_cube() {
        let m = unit_cube();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.kind(), CellKind::Hexahedral);
        assert!((m.cell_volume(0) - 1.0).abs() < 1e-15);
        assert!((m.cell_centroid(0) - Vec3::repeat(0.5)).norm() < 1e-15);
        for f in 0..6 {
            let out = m.face_normal(f).dot(&(m.face_centroid(f) - m.cell_centroid(0)));
            assert!(out > 0.0);
        }
    }

    #[test]
    fn tetrahedral_cell_polytope() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let faces = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
        let cells = vec![(0..4).map(|f| FaceRef { face: f, flipped: false }).collect()];
        let m = PolyMesh::new(v, faces, cells).unwrap();
        assert_eq!(m.kind(), CellKind::General);
        let p = m.cell_polytope(0).unwrap();
        assert_eq!((p.vertices().len(), p.edges().len(), p.faces().len()), (4, 6, 4));
        assert!((p.volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_l_shaped_cell() {
        // L-shaped prism: an L polygon in xy extruded in z
        let l = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)];
        let mut v = Vec::new();
        for z in [0.0, 1.0] {
            for &(x, y) in &l {
                v.push(Vec3::new(x, y, z));
            }
        }
        let mut faces = vec![vec![5, 4, 3, 2, 1, 0], vec![6, 7, 8, 9, 10, 11]];
        for k in 0..6 {
            let k1 = (k + 1) % 6;
            faces.push(vec![k, k1, k1 + 6, k + 6]);
        }
        let cells = vec![(0..8).map(|f| FaceRef { face: f, flipped: false }).collect()];
        let err = PolyMesh::new(v, faces, cells).unwrap_err().to_string();
        assert!(err.contains("cell 0") && err.contains("convex"), "{err}");
    }

    #[test]
    fn open_cell_named() {
        let m = unit_cube();
        let (faces, mut cells) = m.topology();
        cells[0].pop();
        let err = PolyMesh::new(m.vertices().to_vec(), faces, cells).unwrap_err().to_string();
        assert!(err.contains("cell 0"), "{err}");
    }

    #[test]
    fn inverted_cell_rejected() {
        let m = unit_cube();
        let (faces, cells) = m.topology();
        let faces: Vec<Vec<usize>> = faces.into_iter().map(|mut f| { f.reverse(); f }).collect();
        let err = PolyMesh::new(m.vertices().to_vec(), faces, cells).unwrap_err().to_string();
        assert!(err.contains("volume"), "{err}");
    }

    #[test]
    fn nonplanar_boundary_quad_is_split() {
        let m = unit_cube();
        let mut v = m.vertices().to_vec();
        // lift one top corner: the top face stops being planar
        let top = m.hex_corner_ids(0).unwrap()[6];
        v[top].z += 0.05;
        let (faces, cells) = m.topology();
        let res = PolyMesh::new(v, faces, cells);
        // the side faces through the lifted corner are non-planar too; all three
        // split so the cell stays convex when the lift is outward
        let mesh = res.unwrap();
        assert!(mesh.num_faces() > 6);
        assert_eq!(mesh.kind(), CellKind::General);
        assert!(mesh.cell_volume(0) > 1.0);
    }

    #[test]
    fn topology_detects_hexes() {
        let m = generate_cartesian(Aabb::new(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0)), [2, 1, 1]).unwrap();
        let (faces, cells) = m.topology();
        let again = PolyMesh::new(m.vertices().to_vec(), faces, cells).unwrap();
        assert_eq!(again.kind(), CellKind::Hexahedral);
        for c in 0..2 {
            let e = again.hex_element(c);
            assert!(e.is_affine());
            assert!((e.map(&Vec3::zeros()) - m.cell_centroid(c)).norm() < 1e-14);
        }
    }

    #[test]
    fn cell_field_length_checked() {
        let m = unit_cube();
        assert!(CellField::new(&m, vec![1.0, 2.0]).is_err());
        assert!(CellField::new(&m, vec![1.0]).unwrap().check(&m).is_ok());
    }
}
