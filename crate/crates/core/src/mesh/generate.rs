use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aabb, PolyMesh, Vec3};
use crate::error::{Error, Result};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * (i as f64 / n as f64) })
        .collect()
}

/// Axis-aligned box grid with `n[d]` cells along axis d.
pub fn generate_cartesian(bounds: Aabb, n: [usize; 3]) -> Result<PolyMesh> {
    if n.contains(&0) {
        return Err(Error::invalid("cell counts must be at least 1 per axis"));
    }
    let e = bounds.extent();
    if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
        return Err(Error::invalid(format!("degenerate bounds {:?}..{:?}", bounds.min, bounds.max)));
    }
    generate_tensor(
        &linspace(bounds.min.x, bounds.max.x, n[0]),
        &linspace(bounds.min.y, bounds.max.y, n[1]),
        &linspace(bounds.min.z, bounds.max.z, n[2]),
    )
}

/// Tensor-product box grid on strictly increasing coordinate lines.
pub fn generate_tensor(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<PolyMesh> {
    for (name, c) in [("x", xs), ("y", ys), ("z", zs)] {
        if c.len() < 2 || c.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!("{name} coordinates must be strictly increasing, at least 2")));
        }
    }
    let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
    let vid = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let mut verts = Vec::with_capacity(nx * ny * nz);
    for &z in zs {
        for &y in ys {
            for &x in xs {
                verts.push(Vec3::new(x, y, z));
            }
        }
    }
    let mut hexes = Vec::with_capacity((nx - 1) * (ny - 1) * (nz - 1));
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                hexes.push([
                    vid(i, j, k),
                    vid(i + 1, j, k),
                    vid(i + 1, j + 1, k),
                    vid(i, j + 1, k),
                    vid(i, j, k + 1),
                    vid(i + 1, j, k + 1),
                    vid(i + 1, j + 1, k + 1),
                    vid(i, j + 1, k + 1),
                ]);
            }
        }
    }
    PolyMesh::from_hexes(verts, hexes)
}

/// Symmetric coordinates on [−half, half]: uniform spacing `h0` out to
/// `core`, then geometric growth by `ratio` until `half` is reached. The
/// last graded interval is merged or stretched so the end lands on `half`.
pub fn graded_coordinates(core: f64, h0: f64, ratio: f64, half: f64) -> Result<Vec<f64>> {
    if !(h0 > 0.0 && core >= 0.0 && half > core && ratio >= 1.0) {
        return Err(Error::invalid("graded coordinates need h0 > 0, 0 <= core < half, ratio >= 1"));
    }
    let nc = (core / h0).round().max(1.0) as usize;
    let hc = core / nc as f64;
    let mut pos: Vec<f64> = (0..=nc).map(|i| i as f64 * hc).collect();
    let mut h = hc;
    let mut x = core;
    loop {
        h *= ratio;
        if x + h >= half - 0.5 * h {
            break;
        }
        x += h;
        pos.push(x);
    }
    pos.push(half);
    let mut out: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    out.pop();
    out.extend(pos);
    out[0] = -half;
    Ok(out)
}

/// Perturbs vertex x and y coordinates by up to `amplitude`·h (h = smallest
/// in-plane edge length at the vertex column). All vertices sharing an
/// (x, y) column move together so extruded faces stay planar, and a
/// coordinate on the bounding box is never moved so the domain is unchanged.
/// On a convexity failure the amplitude is halved, at most three times.
pub fn generate_distorted(base: &PolyMesh, amplitude: f64, seed: u64) -> Result<PolyMesh> {
    if !(0.0..0.3).contains(&amplitude) {
        return Err(Error::invalid(format!("distortion amplitude {amplitude} outside [0, 0.3)")));
    }
    if amplitude == 0.0 {
        return Ok(base.clone());
    }
    let bb = base.bounds();
    let key = |v: &Vec3| (v.x.to_bits(), v.y.to_bits());
    let mut columns: Vec<(u64, u64)> = base.vertices().iter().map(key).collect();
    columns.sort_unstable();
    columns.dedup();
    let col_index: HashMap<(u64, u64), usize> = columns.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let mut h = vec![f64::INFINITY; columns.len()];
    for f in 0..base.num_faces() {
        let cyc = base.face(f);
        for k in 0..cyc.len() {
            let (a, b) = (base.vertex(cyc[k] as usize), base.vertex(cyc[(k + 1) % cyc.len()] as usize));
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            if d > 0.0 {
                for v in [a, b] {
                    let c = col_index[&key(&v)];
                    h[c] = h[c].min(d);
                }
            }
        }
    }

    let mut amp = amplitude;
    let mut last_err = None;
    for _ in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<(f64, f64)> = columns
            .iter()
            .enumerate()
            .map(|(c, &(xb, yb))| {
                let (x, y) = (f64::from_bits(xb), f64::from_bits(yb));
                let (rx, ry): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let hc = if h[c].is_finite() { h[c] } else { 0.0 };
                let dx = if x == bb.min.x || x == bb.max.x { 0.0 } else { amp * hc * rx };
                let dy = if y == bb.min.y || y == bb.max.y { 0.0 } else { amp * hc * ry };
                (dx, dy)
            })
            .collect();
        let verts: Vec<Vec3> = base
            .vertices()
            .iter()
            .map(|v| {
                let (dx, dy) = shifts[col_index[&key(v)]];
                Vec3::new(v.x + dx, v.y + dy, v.z)
            })
            .collect();
        match base.with_vertices(verts) {
            Ok(m) => return Ok(m),
            Err(e) => {
                last_err = Some(e);
                amp *= 0.5;
            }
        }
    }
    Err(Error::geometry(format!(
        "distortion failed after halving the amplitude three times: {}",
        last_err.unwrap()
    )))
}

/// Quasi-circular acoustic grid: a graded Cartesian block [−a, a]² surrounded
/// by an O-grid ring out to `radius`, one element thick in z.
#[derive(Debug, Clone)]
pub struct OGridSpec {
    /// half width of the central block
    pub block_half: f64,
    /// half width of the uniform core of the block
    pub core_half: f64,
    /// element size in the core
    pub core_h: f64,
    /// geometric growth ratio outside the core
    pub growth: f64,
    /// outer radius (absorbing boundary)
    pub radius: f64,
    /// element layers between the block and the outer circle
    pub ring_layers: usize,
    /// z extent, centred on 0
    pub thickness: f64,
}

impl OGridSpec {
    pub fn build(&self) -> Result<PolyMesh> {
        let xs = graded_coordinates(self.core_half, self.core_h, self.growth, self.block_half)?;
        let a = self.block_half;
        if self.radius <= a * std::f64::consts::SQRT_2 {
            return Err(Error::invalid("outer radius must exceed the block corner distance"));
        }
        if self.ring_layers == 0 || !(self.thickness > 0.0) {
            return Err(Error::invalid("ring layers and thickness must be positive"));
        }
        let n = xs.len();
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for &y in &xs {
            for &x in &xs {
                pts.push((x, y));
            }
        }
        let bid = |i: usize, j: usize| j * n + i;
        let mut quads: Vec<[usize; 4]> = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                quads.push([bid(i, j), bid(i + 1, j), bid(i + 1, j + 1), bid(i, j + 1)]);
            }
        }
        // block boundary, counter-clockwise starting at (a, -a)
        let mut ring: Vec<usize> = Vec::new();
        for j in 0..n - 1 {
            ring.push(bid(n - 1, j));
        }
        for i in (1..n).rev() {
            ring.push(bid(i, n - 1));
        }
        for j in (1..n).rev() {
            ring.push(bid(0, j));
        }
        for i in 0..n - 1 {
            ring.push(bid(i, 0));
        }
        let m = ring.len();
        let mut layer_ids: Vec<Vec<usize>> = vec![ring.clone()];
        let lr = self.ring_layers;
        for l in 1..=lr {
            let s = l as f64 / lr as f64;
            let mut ids = Vec::with_capacity(m);
            for &b in &ring {
                let (px, py) = pts[b];
                let phi = py.atan2(px);
                let (qx, qy) = (self.radius * phi.cos(), self.radius * phi.sin());
                let (x, y) = if l == lr { (qx, qy) } else { (px + s * (qx - px), py + s * (qy - py)) };
                pts.push((x, y));
                ids.push(pts.len() - 1);
            }
            layer_ids.push(ids);
        }
        for l in 0..lr {
            for k in 0..m {
                let k1 = (k + 1) % m;
                quads.push([layer_ids[l][k], layer_ids[l + 1][k], layer_ids[l + 1][k1], layer_ids[l][k1]]);
            }
        }
        extrude_quads(&pts, &quads, -0.5 * self.thickness, 0.5 * self.thickness)
    }
}

/// Extrudes counter-clockwise planar quads into one layer of hexahedra.
pub(crate) fn extrude_quads(pts: &[(f64, f64)], quads: &[[usize; 4]], z0: f64, z1: f64) -> Result<PolyMesh> {
    let np = pts.len();
    let mut verts = Vec::with_capacity(2 * np);
    for &(x, y) in pts {
        verts.push(Vec3::new(x, y, z0));
    }
    for &(x, y) in pts {
        verts.push(Vec3::new(x, y, z1));
    }
    let hexes = quads
        .iter()
        .map(|q| [q[0], q[1], q[2], q[3], q[0] + np, q[1] + np, q[2] + np, q[3] + np])
        .collect();
    PolyMesh::from_hexes(verts, hexes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CellKind;

    fn cube(h: f64) -> Aabb {
        Aabb::new(Vec3::repeat(-h), Vec3::repeat(h))
    }

    #[test]
    fn cartesian_counts_and_volume() {
        let m = generate_cartesian(cube(0.5), [4, 4, 4]).unwrap();
        assert_eq!(m.num_cells(), 64);
        assert!((m.cell_volume(0) - 0.25f64.powi(3)).abs() < 1e-15);
        let m = generate_cartesian(cube(0.5), [10, 10, 10]).unwrap();
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
        assert!(m.hex_element(17).is_affine());
    }

    #[test]
    fn cartesian_rejects_degenerate() {
        assert!(generate_cartesian(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0)), [1, 1, 1]).is_err());
        assert!(generate_cartesian(cube(1.0), [0, 1, 1]).is_err());
    }

    #[test]
    fn distortion_zero_is_identity() {
        let base = generate_cartesian(cube(1.0), [3, 3, 2]).unwrap();
        assert_eq!(generate_distorted(&base, 0.0, 5).unwrap(), base);
    }

    #[test]
    fn distortion_keeps_volume_and_is_deterministic() {
        let base = generate_cartesian(Aabb::new(Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, 1.0, 0.2)), [4, 4, 1]).unwrap();
        let a = generate_distorted(&base, 0.2, 1).unwrap();
        let b = generate_distorted(&base, 0.2, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, base);
        assert!((a.total_volume() - base.total_volume()).abs() < 1e-12);
        assert_eq!(a.kind(), CellKind::Hexahedral);
        assert!(a.bounds() == base.bounds());
    }

    #[test]
    fn graded_is_symmetric() {
        let c = graded_coordinates(1.5, 0.25, 1.2, 16.0).unwrap();
        assert_eq!(c[0], -16.0);
        assert_eq!(*c.last().unwrap(), 16.0);
        for i in 0..c.len() {
            assert_eq!(c[i], -c[c.len() - 1 - i]);
        }
        assert!(c.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ogrid_valid() {
        let spec = OGridSpec {
            block_half: 4.0,
            core_half: 1.0,
            core_h: 0.5,
            growth: 1.3,
            radius: 10.0,
            ring_layers: 4,
            thickness: 1.0,
        };
        let m = spec.build().unwrap();
        assert_eq!(m.kind(), CellKind::Hexahedral);
        // polygonal approximation of the disk, slightly below π R² t
        let area = m.total_volume();
        assert!(area < std::f64::consts::PI * 100.0 && area > 0.97 * std::f64::consts::PI * 100.0, "{area}");
    }
}
