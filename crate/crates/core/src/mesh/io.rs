//! Line-oriented text format:
//!
//! ```text
//! polymesh 1
//! vertices N
//! x y z            (N lines)
//! faces M
//! k v1 … vk        (M lines)
//! cells C
//! m f1 … fm        (C lines; a flipped face f is written −f−1)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{FaceRef, PolyMesh, Vec3};
use crate::error::{Error, Result};

pub fn format_mesh(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "polymesh 1");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "faces {}", mesh.num_faces());
    for f in 0..mesh.num_faces() {
        let cyc = mesh.face(f);
        let _ = write!(s, "{}", cyc.len());
        for v in cyc {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "cells {}", mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let refs = mesh.cell_face_refs(c);
        let _ = write!(s, "{}", refs.len());
        for r in refs {
            let v = if r.flipped { -(r.face as i64) - 1 } else { r.face as i64 };
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.it.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(Error::Parse { line: self.line + 1, msg: "unexpected end of file".into() })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let t = self.next()?;
        if t.len() != 2 || t[0] != name {
            return Err(self.err(format!("expected `{name} <count>`")));
        }
        t[1].parse().map_err(|_| self.err(format!("bad {name} count `{}`", t[1])))
    }

    fn counted<T: std::str::FromStr>(&mut self, what: &str) -> Result<Vec<T>> {
        let t = self.next()?;
        let k: usize = t[0].parse().map_err(|_| self.err(format!("bad {what} length `{}`", t[0])))?;
        if t.len() != k + 1 {
            return Err(self.err(format!("{what} declares {k} entries but has {}", t.len() - 1)));
        }
        t[1..]
            .iter()
            .map(|s| s.parse().map_err(|_| self.err(format!("bad {what} entry `{s}`"))))
            .collect()
    }
}

pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut r = Lines { it: text.lines().enumerate(), line: 0 };
    let h = r.next()?;
    if h != ["polymesh", "1"] {
        return Err(r.err("expected header `polymesh 1`"));
    }
    let nv = r.header("vertices")?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = r.next()?;
        if t.len() != 3 {
            return Err(r.err("vertex line needs 3 coordinates"));
        }
        let mut c = [0.0; 3];
        for d in 0..3 {
            c[d] = t[d].parse().map_err(|_| r.err(format!("bad coordinate `{}`", t[d])))?;
        }
        verts.push(Vec3::new(c[0], c[1], c[2]));
    }
    let nf = r.header("faces")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let f: Vec<usize> = r.counted("face")?;
        if let Some(&v) = f.iter().find(|&&v| v >= nv) {
            return Err(r.err(format!("face references vertex {v}, only {nv} vertices")));
        }
        faces.push(f);
    }
    let nc = r.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let c: Vec<i64> = r.counted("cell")?;
        let mut refs = Vec::with_capacity(c.len());
        for v in c {
            let (face, flipped) = if v < 0 { ((-v - 1) as usize, true) } else { (v as usize, false) };
            if face >= nf {
                return Err(r.err(format!("cell references face {face}, only {nf} faces")));
            }
            refs.push(FaceRef { face: face as u32, flipped });
        }
        cells.push(refs);
    }
    PolyMesh::new(verts, faces, cells)
}
