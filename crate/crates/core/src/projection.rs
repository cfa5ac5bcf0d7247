//! L2 projection of piecewise-constant fluid fields onto the spectral-element
//! space through the cut mesh.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intersect::{self, CutMesh};
use crate::linalg::{self, CgReport, Csr};
use crate::mesh::{generate_cartesian, Aabb, CellField, PolyMesh, Vec3};
use crate::quadfree::MomentTable;
use crate::sem::{gauss_legendre, GllBasis, SemSpace};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingMethod {
    /// exact cut-cell integrals of the basis
    QuadratureFree,
    /// basis value at the cut-cell barycentre times its volume
    MidPoint,
}

impl CouplingMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            CouplingMethod::QuadratureFree => "QF",
            CouplingMethod::MidPoint => "MP",
        }
    }
}

/// M_aa q_a = M_af q_f
#[derive(Debug, Clone)]
pub struct CouplingSystem {
    pub maa: Csr,
    pub maf: Csr,
    pub degree: usize,
    pub method: CouplingMethod,
    maa_diag: Vec<f64>,
}

/// Consistent mass matrix with (r+2)-point Gauss per element.
pub fn assemble_mass(space: &SemSpace) -> Csr {
    let n = space.basis.n();
    let nloc = n * n * n;
    let (gx, gw) = gauss_legendre(space.degree() + 2);
    let vals: Vec<Vec<f64>> = gx.iter().map(|&x| space.basis.eval(x)).collect();
    let blocks: Vec<Vec<(usize, usize, f64)>> = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let el = &space.elements[e];
            let ids = space.element_nodes(e);
            let mut loc = vec![0.0; nloc * nloc];
            let mut phi = vec![0.0; nloc];
            for (c, zc) in gx.iter().enumerate() {
                for (b, yb) in gx.iter().enumerate() {
                    for (a, xa) in gx.iter().enumerate() {
                        let w = gw[a] * gw[b] * gw[c] * el.jacobian(&Vec3::new(*xa, *yb, *zc)).determinant();
                        for k in 0..n {
                            for j in 0..n {
                                for i in 0..n {
                                    phi[i + n * (j + n * k)] = vals[a][i] * vals[b][j] * vals[c][k];
                                }
                            }
                        }
                        for p in 0..nloc {
                            let wp = w * phi[p];
                            for q in 0..nloc {
                                loc[p * nloc + q] += wp * phi[q];
                            }
                        }
                    }
                }
            }
            let mut t = Vec::with_capacity(nloc * nloc);
            for p in 0..nloc {
                for q in 0..nloc {
                    t.push((ids[p] as usize, ids[q] as usize, loc[p * nloc + q]));
                }
            }
            t
        })
        .collect();
    Csr::from_triplets(space.num_nodes(), space.num_nodes(), blocks.into_iter().flatten().collect())
}

/// ∫_P ℓ_i(ξ)ℓ_j(η)ℓ_k(ζ) for all local (i, j, k) from the reference-space
/// moments of P, contracted one axis at a time.
fn basis_integrals(basis: &GllBasis, m: &MomentTable, out: &mut [f64]) {
    let n = basis.n();
    let mono = &basis.monomial;
    // t1[k][p][q] = Σ_s mono[k][s] M(p, q, s)
    let mut t1 = vec![0.0; n * n * n];
    for k in 0..n {
        for p in 0..n {
            for q in 0..n {
                t1[(k * n + p) * n + q] = (0..n).map(|s| mono[k][s] * m.get(p, q, s)).sum();
            }
        }
    }
    // t2[j][k][p] = Σ_q mono[j][q] t1[k][p][q]
    let mut t2 = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for p in 0..n {
                t2[(j * n + k) * n + p] = (0..n).map(|q| mono[j][q] * t1[(k * n + p) * n + q]).sum();
            }
        }
    }
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out[i + n * (j + n * k)] = (0..n).map(|p| mono[i][p] * t2[(j * n + k) * n + p]).sum();
            }
        }
    }
}

fn tensor_values(basis: &GllBasis, xi: &Vec3, scale: f64, out: &mut [f64]) {
    let n = basis.n();
    let (lx, ly, lz) = (basis.eval(xi.x), basis.eval(xi.y), basis.eval(xi.z));
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out[i + n * (j + n * k)] = lx[i] * ly[j] * lz[k] * scale;
            }
        }
    }
}

/// Visits every record of acoustic element `e` once and fills, for each
/// requested (basis, method), the local coupling column of that record.
fn visit_element_records(
    e: usize,
    space: &SemSpace,
    targets: &[(&GllBasis, CouplingMethod)],
    cut: &CutMesh,
    fluid: &PolyMesh,
    mut sink: impl FnMut(usize, &crate::intersect::IntersectionRecord, &[f64]),
) -> Result<()> {
    let recs = cut.records_of(e);
    if recs.is_empty() {
        return Ok(());
    }
    let el = &space.elements[e];
    let need_qf = targets.iter().any(|t| t.1 == CouplingMethod::QuadratureFree);
    if !el.is_affine() && need_qf {
        return Err(Error::UnsupportedGeometry(format!(
            "acoustic element {e} is not affine; exact coupling needs an affine map"
        )));
    }
    let max_r = targets.iter().map(|t| t.0.degree).max().unwrap_or(1).max(1);
    let (xc, jac) = el.affine_part();
    let jinv = jac.try_inverse().ok_or_else(|| Error::geometry(format!("element {e}: singular Jacobian")))?;
    let det = jac.determinant().abs();
    let first = cut.record_range(e).start;
    let mut vals: Vec<Vec<f64>> = targets.iter().map(|t| vec![0.0; t.0.n().pow(3)]).collect();
    for (off, rec) in recs.iter().enumerate() {
        let poly = cut.cut_polytope(first + off, fluid)?;
        if el.is_affine() {
            let p_ref = poly.mapped(|x| jinv * (x - xc))?;
            let m = p_ref.moments([max_r; 3]);
            let xb = Vec3::new(m.get(1, 0, 0), m.get(0, 1, 0), m.get(0, 0, 1)) / m.get(0, 0, 0);
            for (t, v) in targets.iter().zip(vals.iter_mut()) {
                match t.1 {
                    CouplingMethod::QuadratureFree => {
                        basis_integrals(t.0, &m, v);
                        v.iter_mut().for_each(|x| *x *= det);
                    }
                    CouplingMethod::MidPoint => tensor_values(t.0, &xb, rec.volume, v),
                }
            }
        } else {
            let xb = poly.centroid();
            let xi = el.inverse_map(&xb).ok_or_else(|| {
                Error::geometry(format!("element {e}: barycentre of record ({e}, {}) not invertible", rec.fluid))
            })?;
            for (t, v) in targets.iter().zip(vals.iter_mut()) {
                tensor_values(t.0, &xi, rec.volume, v);
            }
        }
        for (ti, v) in vals.iter().enumerate() {
            sink(ti, rec, v);
        }
    }
    Ok(())
}

fn check_sizes(space: &SemSpace, cut: &CutMesh, fluid: &PolyMesh) -> Result<()> {
    if cut.num_acoustic() != space.num_elements() || cut.num_fluid() != fluid.num_cells() {
        return Err(Error::invalid(format!(
            "cut mesh is {}x{} cells, space/fluid have {}x{}",
            cut.num_acoustic(),
            cut.num_fluid(),
            space.num_elements(),
            fluid.num_cells()
        )));
    }
    Ok(())
}

/// Builds M_aa and M_af over the records of `cut` (acoustic mesh of `space`, fluid mesh `fluid`).
pub fn assemble_coupling(space: &SemSpace, cut: &CutMesh, fluid: &PolyMesh, method: CouplingMethod) -> Result<CouplingSystem> {
    check_sizes(space, cut, fluid)?;
    let targets = [(&space.basis, method)];
    let blocks: Vec<Result<Vec<(usize, usize, f64)>>> = (0..space.num_elements())
        .into_par_iter()
        .map(|e| {
            let ids = space.element_nodes(e);
            let mut out = Vec::new();
            visit_element_records(e, space, &targets, cut, fluid, |_, rec, v| {
                for (l, &x) in v.iter().enumerate() {
                    out.push((ids[l] as usize, rec.fluid as usize, x));
                }
            })?;
            Ok(out)
        })
        .collect();
    let mut trip = Vec::new();
    for b in blocks {
        trip.extend(b?);
    }
    let maf = Csr::from_triplets(space.num_nodes(), fluid.num_cells(), trip);
    let maa = assemble_mass(space);
    let maa_diag = maa.diagonal();
    Ok(CouplingSystem { maa, maf, degree: space.degree(), method, maa_diag })
}

/// M_af q_f for several (space, method) pairs on the same acoustic mesh in one
/// pass over the records, without storing M_af.
pub fn coupling_rhs(targets: &[(&SemSpace, CouplingMethod)], cut: &CutMesh, fluid: &PolyMesh, qf: &[f64]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = targets.first() else {
        return Ok(Vec::new());
    };
    for (s, _) in targets {
        check_sizes(s, cut, fluid)?;
        if s.num_elements() != first.0.num_elements() {
            return Err(Error::invalid("coupling targets must share one acoustic mesh"));
        }
    }
    if qf.len() != fluid.num_cells() {
        return Err(Error::Dimension { expected: fluid.num_cells(), got: qf.len() });
    }
    let bases: Vec<(&GllBasis, CouplingMethod)> = targets.iter().map(|(s, m)| (&s.basis, *m)).collect();
    let locals: Vec<Result<Vec<Vec<f64>>>> = (0..first.0.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut acc: Vec<Vec<f64>> = targets.iter().map(|(s, _)| vec![0.0; s.nodes_per_element()]).collect();
            visit_element_records(e, first.0, &bases, cut, fluid, |ti, rec, v| {
                let q = qf[rec.fluid as usize];
                for (a, &x) in acc[ti].iter_mut().zip(v) {
                    *a += x * q;
                }
            })?;
            Ok(acc)
        })
        .collect();
    let mut out: Vec<Vec<f64>> = targets.iter().map(|(s, _)| vec![0.0; s.num_nodes()]).collect();
    for (e, loc) in locals.into_iter().enumerate() {
        let loc = loc?;
        for (ti, (s, _)) in targets.iter().enumerate() {
            for (&id, &v) in s.element_nodes(e).iter().zip(&loc[ti]) {
                out[ti][id as usize] += v;
            }
        }
    }
    Ok(out)
}

impl CouplingSystem {
    pub fn num_acoustic_dofs(&self) -> usize {
        self.maa.nrows
    }

    pub fn num_fluid_cells(&self) -> usize {
        self.maf.ncols
    }

    /// Solves M_aa q_a = rhs.
    pub fn solve_mass(&self, rhs: &[f64]) -> Result<(Vec<f64>, CgReport)> {
        let mut x = vec![0.0; rhs.len()];
        let n = self.maa.nrows;
        let rep = linalg::pcg(&self.maa, &self.maa_diag, rhs, &mut x, tol::PROJECTION_CG, 10 * n.max(10))?;
        Ok((x, rep))
    }

    /// Projection with the solver started from `guess`.
    pub fn project_from(&self, qf: &[f64], guess: &[f64]) -> Result<(Vec<f64>, CgReport)> {
        if qf.len() != self.num_fluid_cells() {
            return Err(Error::Dimension { expected: self.num_fluid_cells(), got: qf.len() });
        }
        if guess.len() != self.num_acoustic_dofs() {
            return Err(Error::Dimension { expected: self.num_acoustic_dofs(), got: guess.len() });
        }
        let mut x = guess.to_vec();
        let rhs = self.maf.matvec(qf);
        let n = self.maa.nrows;
        let rep = linalg::pcg(&self.maa, &self.maa_diag, &rhs, &mut x, tol::PROJECTION_CG, 10 * n.max(10))?;
        Ok((x, rep))
    }

    pub fn project(&self, qf: &[f64]) -> Result<Vec<f64>> {
        if qf.len() != self.num_fluid_cells() {
            return Err(Error::Dimension { expected: self.num_fluid_cells(), got: qf.len() });
        }
        Ok(self.solve_mass(&self.maf.matvec(qf))?.0)
    }

    pub fn project_field(&self, qf: &CellField<f64>) -> Result<Vec<f64>> {
        self.project(&qf.values)
    }

    /// Componentwise projection of a cell vector field.
    pub fn project_vector(&self, qf: &CellField<Vec3>) -> Result<[Vec<f64>; 3]> {
        let comp = |d: usize| self.project(&qf.values.iter().map(|v| v[d]).collect::<Vec<_>>());
        Ok([comp(0)?, comp(1)?, comp(2)?])
    }
}

/// Mid-point projection of `qf`.
pub fn project_midpoint(cut: &CutMesh, space: &SemSpace, fluid: &PolyMesh, qf: &[f64]) -> Result<Vec<f64>> {
    assemble_coupling(space, cut, fluid, CouplingMethod::MidPoint)?.project(qf)
}

/// Separable product Π_d cos(k_d x_d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigProduct {
    pub k: [f64; 3],
}

impl Default for TrigProduct {
    fn default() -> Self {
        use std::f64::consts::PI;
        TrigProduct { k: [2.0 * PI, 2.0 * PI, PI] }
    }
}

impl TrigProduct {
    pub fn eval(&self, x: &Vec3) -> f64 {
        (0..3).map(|d| (self.k[d] * x[d]).cos()).product()
    }

    /// Exact mean over an axis-aligned box.
    pub fn box_average(&self, b: &Aabb) -> f64 {
        (0..3)
            .map(|d| {
                let (lo, hi, k) = (b.min[d], b.max[d], self.k[d]);
                if k == 0.0 {
                    1.0
                } else {
                    ((k * hi).sin() - (k * lo).sin()) / (k * (hi - lo))
                }
            })
            .product()
    }

    /// Exact cell averages; every cell must be an axis-aligned box.
    pub fn cell_averages(&self, mesh: &PolyMesh) -> Result<CellField<f64>> {
        let mut v = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let b = mesh.cell_aabb(c);
            if (b.volume() - mesh.cell_volume(c)).abs() > 1e-12 * b.volume() {
                return Err(Error::UnsupportedGeometry(format!("cell {c} is not an axis-aligned box")));
            }
            v.push(self.box_average(&b));
        }
        CellField::new(mesh, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// ‖f − f_a‖
    pub e_a: f64,
    /// ‖f − f_p‖
    pub e_fp: f64,
    /// ‖f_p − f_a‖
    pub e_pa: f64,
}

/// Direct L2 projection f_p of `f` onto the space.
pub fn project_function(space: &SemSpace, maa: &Csr, f: &dyn Fn(&Vec3) -> f64) -> Result<Vec<f64>> {
    let n = space.basis.n();
    let (gx, gw) = gauss_legendre(space.degree() + 6);
    let vals: Vec<Vec<f64>> = gx.iter().map(|&x| space.basis.eval(x)).collect();
    let mut b = vec![0.0; space.num_nodes()];
    for e in 0..space.num_elements() {
        let el = &space.elements[e];
        let ids = space.element_nodes(e);
        for (c, zc) in gx.iter().enumerate() {
            for (bb, yb) in gx.iter().enumerate() {
                for (a, xa) in gx.iter().enumerate() {
                    let xi = Vec3::new(*xa, *yb, *zc);
                    let w = gw[a] * gw[bb] * gw[c] * el.jacobian(&xi).determinant() * f(&el.map(&xi));
                    for k in 0..n {
                        for j in 0..n {
                            for i in 0..n {
                                b[ids[i + n * (j + n * k)] as usize] += w * vals[a][i] * vals[bb][j] * vals[c][k];
                            }
                        }
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; b.len()];
    linalg::pcg(maa, &maa.diagonal(), &b, &mut x, tol::PROJECTION_CG, 10 * b.len().max(10))?;
    Ok(x)
}

/// L2 norm of g(x, u_h(x)) with (r+4)-point Gauss per element.
pub fn l2_norm_with(space: &SemSpace, fields: &[&[f64]], g: &dyn Fn(&Vec3, &[f64]) -> f64) -> f64 {
    let n = space.basis.n();
    let (gx, gw) = gauss_legendre(space.degree() + 4);
    let vals: Vec<Vec<f64>> = gx.iter().map(|&x| space.basis.eval(x)).collect();
    let mut acc = 0.0;
    let mut u = vec![0.0; fields.len()];
    for e in 0..space.num_elements() {
        let el = &space.elements[e];
        let ids = space.element_nodes(e);
        for (c, zc) in gx.iter().enumerate() {
            for (bb, yb) in gx.iter().enumerate() {
                for (a, xa) in gx.iter().enumerate() {
                    let xi = Vec3::new(*xa, *yb, *zc);
                    let w = gw[a] * gw[bb] * gw[c] * el.jacobian(&xi).determinant();
                    u.iter_mut().for_each(|v| *v = 0.0);
                    for k in 0..n {
                        for j in 0..n {
                            let wjk = vals[bb][j] * vals[c][k];
                            for i in 0..n {
                                let phi = vals[a][i] * wjk;
                                let id = ids[i + n * (j + n * k)] as usize;
                                for (s, fld) in fields.iter().enumerate() {
                                    u[s] += phi * fld[id];
                                }
                            }
                        }
                    }
                    let v = g(&el.map(&xi), &u);
                    acc += w * v * v;
                }
            }
        }
    }
    acc.sqrt()
}

/// ‖f − q_a‖, ‖f − f_p‖ and ‖f_p − q_a‖.
pub fn error_norms(f: &dyn Fn(&Vec3) -> f64, qa: &[f64], space: &SemSpace, maa: &Csr) -> Result<ErrorNorms> {
    let fp = project_function(space, maa, f)?;
    let e_a = l2_norm_with(space, &[qa], &|x, u| f(x) - u[0]);
    let e_fp = l2_norm_with(space, &[&fp], &|x, u| f(x) - u[0]);
    let e_pa = l2_norm_with(space, &[&fp, qa], &|_, u| u[0] - u[1]);
    Ok(ErrorNorms { e_a, e_fp, e_pa })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub domain: Aabb,
    /// acoustic cells per axis
    pub acoustic_cells: Vec<usize>,
    pub degrees: Vec<usize>,
    /// fluid refinement factors h_a / h_f
    pub refinements: Vec<usize>,
    pub methods: Vec<CouplingMethod>,
    pub f: TrigProduct,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            domain: Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5)),
            acoustic_cells: vec![4, 8],
            degrees: vec![1, 2, 3, 4],
            refinements: vec![2, 4, 8, 16],
            methods: vec![CouplingMethod::QuadratureFree, CouplingMethod::MidPoint],
            f: TrigProduct::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h_a: f64,
    pub h_f: f64,
    pub r: usize,
    pub method: CouplingMethod,
    pub norms: ErrorNorms,
}

/// Nested Cartesian convergence sweep; one cut mesh per (h_a, h_f) is reused across r and methods.
pub fn projection_sweep(cfg: &SweepConfig, mut progress: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let ext = cfg.domain.extent();
    for &na in &cfg.acoustic_cells {
        let ta = generate_cartesian(cfg.domain, [na; 3])?;
        let h_a = ext.x / na as f64;
        let spaces: Vec<(SemSpace, Csr)> = cfg
            .degrees
            .iter()
            .map(|&r| {
                let s = SemSpace::new(&ta, r)?;
                let m = assemble_mass(&s);
                Ok((s, m))
            })
            .collect::<Result<_>>()?;
        let fp_norms: Vec<(Vec<f64>, f64)> = spaces
            .iter()
            .map(|(s, m)| {
                let f = |x: &Vec3| cfg.f.eval(x);
                let fp = project_function(s, m, &f)?;
                let e = l2_norm_with(s, &[&fp], &|x, u| f(x) - u[0]);
                Ok((fp, e))
            })
            .collect::<Result<_>>()?;
        let diags: Vec<Vec<f64>> = spaces.iter().map(|(_, m)| m.diagonal()).collect();
        for &m in &cfg.refinements {
            let tf = generate_cartesian(cfg.domain, [na * m; 3])?;
            let cut = intersect::compute_intersection(&ta, &tf, cfg.workers)?;
            let qf = cfg.f.cell_averages(&tf)?;
            let targets: Vec<(&SemSpace, CouplingMethod)> = spaces
                .iter()
                .flat_map(|(s, _)| cfg.methods.iter().map(move |&mt| (s, mt)))
                .collect();
            let rhs = coupling_rhs(&targets, &cut, &tf, &qf.values)?;
            drop((cut, tf, qf));
            for (ti, b) in rhs.iter().enumerate() {
                let si = ti / cfg.methods.len().max(1);
                let (space, maa) = &spaces[si];
                let mut qa = vec![0.0; b.len()];
                let n = maa.nrows;
                linalg::pcg(maa, &diags[si], b, &mut qa, tol::PROJECTION_CG, 10 * n.max(10))?;
                let f = |x: &Vec3| cfg.f.eval(x);
                let (fp, e_fp) = &fp_norms[si];
                let e_a = l2_norm_with(space, &[&qa], &|x, u| f(x) - u[0]);
                let e_pa = l2_norm_with(space, &[fp, &qa], &|_, u| u[0] - u[1]);
                let row = SweepRow {
                    h_a,
                    h_f: h_a / m as f64,
                    r: space.degree(),
                    method: targets[ti].1,
                    norms: ErrorNorms { e_a, e_fp: *e_fp, e_pa },
                };
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// CSV with header `h_a,h_f,r,E_a,E_fp,E_pa,method`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("h_a,h_f,r,E_a,E_fp,E_pa,method\n");
    for r in rows {
        s.push_str(&format!(
            "{:?},{:?},{},{:e},{:e},{:e},{}\n",
            r.h_a,
            r.h_f,
            r.r,
            r.norms.e_a,
            r.norms.e_fp,
            r.norms.e_pa,
            r.method.tag()
        ));
    }
    s
}
