//! End-to-end studies shared by the command-line driver and the acceptance suite.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::intersect::{self, CutMesh};
use crate::linalg::Csr;
use crate::mesh::{generate_cartesian, generate_distorted, generate_tensor, graded_coordinates, Aabb, OGridSpec, PolyMesh, Vec3};
use crate::projection::{assemble_coupling, CouplingMethod, SweepRow};
use crate::quadfree::{integrate_monomial, Monomial};
use crate::sem::{
    apply_source_ramp, snapshot_weights, BoundaryKind, Material, Newmark, ProbeSet, SemSpace, SnapshotSampling, WaveOperators,
    WaveState,
};
use crate::sources::{farfield_pressure, lighthill_divergence, sample_snapshot, smoothing_factor, PhaseConvention, VortexPairConfig};

/// ∫_B x^a y^b z^c over an axis-aligned box.
pub fn box_integral(b: &Aabb, m: Monomial) -> f64 {
    (0..3)
        .map(|d| {
            let p = m.exps[d] as i32 + 1;
            (b.max[d].powi(p) - b.min[d].powi(p)) / p as f64
        })
        .product()
}

/// Σ over cells of the exact cell integral.
pub fn mesh_integral(mesh: &PolyMesh, m: Monomial) -> Result<f64> {
    let mut s = 0.0;
    for c in 0..mesh.num_cells() {
        s += integrate_monomial(&mesh.cell_polytope(c)?, m);
    }
    Ok(s)
}

pub fn relative_error(exact: f64, computed: f64) -> f64 {
    if exact == 0.0 {
        (computed - exact).abs()
    } else {
        ((computed - exact) / exact).abs()
    }
}

/// One integration-check configuration: two meshes of the same box.
#[derive(Debug, Clone)]
pub struct IntegrationSetup {
    pub label: String,
    pub acoustic: PolyMesh,
    pub fluid: PolyMesh,
    pub domain: Aabb,
    pub monomials: Vec<Monomial>,
}

/// Distorted extruded hexes on (−2,2)²×(−0.05,0.05) against the given polygonal fluid grid.
pub fn table1_setup(fluid: PolyMesh, seed: u64) -> Result<IntegrationSetup> {
    let domain = Aabb::new(Vec3::new(-2.0, -2.0, -0.05), Vec3::new(2.0, 2.0, 0.05));
    let base = generate_cartesian(domain, [8, 8, 1])?;
    let acoustic = generate_distorted(&base, 0.2, seed)?;
    check_domain(&fluid, &domain)?;
    Ok(IntegrationSetup {
        label: "1".into(),
        acoustic,
        fluid,
        domain,
        monomials: vec![Monomial::ONE, Monomial::new(2, 2, 0), Monomial::new(4, 4, 0)],
    })
}

/// 4³ Cartesian hexes on (−0.5,0.5)³ against the given polyhedral fluid grid.
pub fn table2_setup(fluid: PolyMesh) -> Result<IntegrationSetup> {
    let domain = Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5));
    let acoustic = generate_cartesian(domain, [4, 4, 4])?;
    check_domain(&fluid, &domain)?;
    Ok(IntegrationSetup {
        label: "2".into(),
        acoustic,
        fluid,
        domain,
        monomials: vec![Monomial::ONE, Monomial::new(2, 2, 2), Monomial::new(4, 4, 4)],
    })
}

fn check_domain(mesh: &PolyMesh, domain: &Aabb) -> Result<()> {
    let b = mesh.bounds();
    let tol = 1e-12 * domain.extent().norm();
    if (b.min - domain.min).amax() > tol || (b.max - domain.max).amax() > tol {
        return Err(Error::invalid(format!(
            "mesh bounds {:?}..{:?} do not match the domain {:?}..{:?}",
            b.min, b.max, domain.min, domain.max
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationRow {
    pub table: String,
    pub mesh: &'static str,
    pub monomial: Monomial,
    pub exact: f64,
    pub computed: f64,
    pub e_rel: f64,
}

/// E_rel for every monomial on the acoustic mesh, the fluid mesh and their cut mesh.
pub fn integrate_check(setup: &IntegrationSetup, workers: usize) -> Result<(Vec<IntegrationRow>, CutMesh)> {
    let cut = intersect::compute_intersection(&setup.acoustic, &setup.fluid, workers)?;
    let mut rows = Vec::new();
    for &m in &setup.monomials {
        let exact = box_integral(&setup.domain, m);
        let values = [
            ("acoustic", mesh_integral(&setup.acoustic, m)?),
            ("fluid", mesh_integral(&setup.fluid, m)?),
            ("intersection", intersect::integrate_over_cutmesh(&cut, &setup.fluid, m)?),
        ];
        for (mesh, computed) in values {
            rows.push(IntegrationRow {
                table: setup.label.clone(),
                mesh,
                monomial: m,
                exact,
                computed,
                e_rel: relative_error(exact, computed),
            });
        }
    }
    Ok((rows, cut))
}

pub fn monomial_label(m: Monomial) -> String {
    let names = ["x", "y", "z"];
    let parts: Vec<String> = (0..3)
        .filter(|&d| m.exps[d] > 0)
        .map(|d| if m.exps[d] == 1 { names[d].to_string() } else { format!("{}^{}", names[d], m.exps[d]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

pub fn integration_csv(rows: &[IntegrationRow]) -> String {
    let mut s = String::from("table,mesh,monomial,exact,computed,E_rel\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:?},{:?},{:e}\n",
            r.table,
            r.mesh,
            monomial_label(r.monomial),
            r.exact,
            r.computed,
            r.e_rel
        ));
    }
    s
}

/// Largest relative mismatch between Σ record volumes and the parent cell
/// volumes, on the acoustic and the fluid side.
pub fn partition_errors(cut: &CutMesh, acoustic: &PolyMesh, fluid: &PolyMesh) -> (f64, f64) {
    let side = |v: Vec<f64>, mesh: &PolyMesh| {
        v.iter()
            .enumerate()
            .map(|(c, s)| relative_error(mesh.cell_volume(c), *s))
            .fold(0.0, f64::max)
    };
    (side(cut.volume_by_acoustic(), acoustic), side(cut.volume_by_fluid(), fluid))
}

/// h_a^{min(r+1,s)} r^{−s} + h_f² r² / h_a
pub fn theorem_bound_shape(h_a: f64, h_f: f64, r: usize, s: f64) -> f64 {
    let r_f = r as f64;
    h_a.powf((r_f + 1.0).min(s)) * r_f.powf(-s) + h_f * h_f * r_f * r_f / h_a
}

#[derive(Debug, Clone)]
pub struct BoundFit {
    pub c: f64,
    pub fit_rows: usize,
    pub checked_rows: usize,
    /// largest E_a / (C·shape) over the checked rows
    pub worst_ratio: f64,
}

impl BoundFit {
    pub fn holds(&self) -> bool {
        self.checked_rows > 0 && self.worst_ratio <= 1.0
    }
}

/// Fits C = max E_a/shape over the QF rows with h_a = `fit_h_a`, then checks
/// E_a ≤ C·shape on the remaining QF rows. The smoothness index is s = r + 1.
pub fn fit_theorem_bound(rows: &[SweepRow], fit_h_a: f64) -> BoundFit {
    let qf = rows.iter().filter(|r| r.method == CouplingMethod::QuadratureFree);
    let shape = |r: &SweepRow| theorem_bound_shape(r.h_a, r.h_f, r.r, r.r as f64 + 1.0);
    let on_fit = |r: &SweepRow| (r.h_a - fit_h_a).abs() <= 1e-12 * fit_h_a;
    let (mut c, mut fit_rows) = (0.0f64, 0);
    for r in qf.clone().filter(|r| on_fit(r)) {
        c = c.max(r.norms.e_a / shape(r));
        fit_rows += 1;
    }
    let (mut worst, mut checked) = (0.0f64, 0);
    for r in qf.filter(|r| !on_fit(r)) {
        worst = worst.max(r.norms.e_a / (c * shape(r)));
        checked += 1;
    }
    BoundFit { c, fit_rows, checked_rows: checked, worst_ratio: worst }
}

/// Max nodal error of the manufactured solution sin(ωt)(a·x + b) on a
/// Neumann box, integrated to `t_end`.
pub fn manufactured_error(r: usize, n: [usize; 3], dt: f64, t_end: f64) -> Result<f64> {
    let mesh = generate_cartesian(Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5)), n)?;
    let space = SemSpace::new(&mesh, r)?;
    let material = Material { c0: 1.3, rho0: 1.0 };
    let ops = space.assemble_operators(material)?;
    let (a, b) = (Vec3::new(0.7, -0.4, 0.25), 0.3);
    let w = 1.0;
    let u = space.interpolate(|x| a.dot(x) + b);
    let c2 = material.c0 * material.c0;
    let flux = space.assemble_boundary_flux(BoundaryKind::Neumann, |_, nrm| c2 * a.dot(nrm));
    let base: Vec<f64> = (0..u.len()).map(|i| -w * w * ops.m[i] * u[i] + flux[i]).collect();
    let load = |t: f64| -> Vec<f64> { base.iter().map(|v| v * (w * t).sin()).collect() };
    let stepper = Newmark::new(&ops, dt)?;
    let mut s = WaveState::with_consistent_acceleration(&ops, vec![0.0; u.len()], u.iter().map(|v| v * w).collect(), &load(0.0), 0.0);
    let steps = (t_end / dt).round() as usize;
    for k in 1..=steps {
        s = stepper.step(&ops, &s, &load(k as f64 * dt))?;
    }
    let exact = (w * s.t).sin();
    Ok(s.rho.iter().zip(&u).map(|(r, u)| (r - exact * u).abs()).fold(0.0, f64::max))
}

/// Relative energy drift of an undamped scalar oscillator over `steps` steps.
pub fn oscillator_energy_drift(omega: f64, dt: f64, steps: usize) -> Result<f64> {
    let ops = WaveOperators {
        m: vec![1.0],
        k: Csr::from_triplets(1, 1, vec![(0, 0, omega * omega)]),
        c: vec![0.0],
        material: Material::default(),
    };
    let stepper = Newmark::new(&ops, dt)?;
    let mut s = WaveState::with_consistent_acceleration(&ops, vec![1.0], vec![0.3], &[0.0], 0.0);
    let e0 = ops.energy(&s);
    let mut drift = 0.0f64;
    for _ in 0..steps {
        s = stepper.step(&ops, &s, &[0.0])?;
        drift = drift.max(((ops.energy(&s) - e0) / e0).abs());
    }
    Ok(drift)
}

/// Measured phase speed of a standing cos(kx) wave in a Neumann channel one
/// wavelength long with `elements` elements of degree `r` along x.
pub fn standing_wave_speed(r: usize, elements: usize, c0: f64, periods: usize) -> Result<f64> {
    let lambda = 1.0;
    let h = lambda / elements as f64;
    let mesh = generate_cartesian(Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(lambda, h, h)), [elements, 1, 1])?;
    let space = SemSpace::new(&mesh, r)?;
    let ops = space.assemble_operators(Material { c0, rho0: 1.0 })?;
    let k = 2.0 * std::f64::consts::PI / lambda;
    let rho0 = space.interpolate(|x| (k * x.x).cos());
    let period = lambda / c0;
    let dt = period / 400.0;
    let zero = vec![0.0; rho0.len()];
    let probe = space
        .coords
        .iter()
        .position(|x| x.norm() == 0.0)
        .ok_or_else(|| Error::invalid("no node at the origin"))?;
    let stepper = Newmark::new(&ops, dt)?;
    let mut s = WaveState::with_consistent_acceleration(&ops, rho0, zero.clone(), &zero, 0.0);
    let mut crossings = Vec::new();
    let mut prev = (s.t, s.rho[probe]);
    while crossings.len() < 2 * periods + 1 {
        s = stepper.step(&ops, &s, &zero)?;
        let cur = (s.t, s.rho[probe]);
        if prev.1 * cur.1 < 0.0 {
            crossings.push(prev.0 + (cur.0 - prev.0) * prev.1 / (prev.1 - cur.1));
        }
        prev = cur;
        if s.t > 10.0 * (periods as f64 + 1.0) * period {
            return Err(Error::invalid("standing wave never crossed zero"));
        }
    }
    let measured = 2.0 * (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(lambda / measured)
}

/// Desk-scale vortex-pair run.
#[derive(Debug, Clone)]
pub struct VortexRunConfig {
    pub pair: VortexPairConfig,
    pub grid: OGridSpec,
    pub degree: usize,
    pub dt: f64,
    pub t_final: f64,
    /// end of the source ramp
    pub ramp_end: f64,
    /// square fluid grid: half width, uniform core half width, core spacing, growth
    pub fluid_half: f64,
    pub fluid_core_half: f64,
    pub fluid_core_h: f64,
    pub fluid_growth: f64,
    /// fluid snapshot spacing; one acoustic period is stored and replayed
    pub snapshot_dt: f64,
    pub sampling: SnapshotSampling,
    /// optional radial source taper (r_i, r_o)
    pub smoothing: Option<(f64, f64)>,
    pub probe_range: (f64, f64),
    pub probe_count: usize,
    pub workers: usize,
}

impl Default for VortexRunConfig {
    fn default() -> Self {
        let pair = VortexPairConfig::default();
        let ta = pair.acoustic_period();
        VortexRunConfig {
            pair,
            grid: OGridSpec {
                block_half: 16.0,
                core_half: 1.5,
                core_h: 0.25,
                growth: 1.2,
                radius: 50.0,
                ring_layers: 16,
                thickness: 1.0,
            },
            degree: 2,
            dt: 0.02,
            t_final: 6.0 * ta,
            ramp_end: ta,
            fluid_half: 15.0,
            fluid_core_half: 1.5,
            fluid_core_h: 0.05,
            fluid_growth: 1.1,
            snapshot_dt: 0.02,
            sampling: SnapshotSampling::Linear,
            smoothing: None,
            probe_range: (20.0, 40.0),
            probe_count: 81,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VortexRunResult {
    pub acoustic_elements: usize,
    pub acoustic_nodes: usize,
    pub fluid_cells: usize,
    pub records: usize,
    pub snapshots: usize,
    pub steps: usize,
    /// probe abscissae along y = 0, x > 0
    pub probe_x: Vec<f64>,
    /// normalized p′ at t_final, computed and analytical
    pub numeric: Vec<f64>,
    pub analytic: Vec<f64>,
    pub waveform_rms: f64,
    pub symmetry_rms: f64,
    pub period: f64,
    /// p′ time series over the recording window at the probe nearest the line centre
    pub mid_x: f64,
    pub times: Vec<f64>,
    pub mid_series: Vec<f64>,
    pub final_time: f64,
    pub final_field: Vec<f64>,
    pub space: SemSpace,
    pub elapsed: Duration,
    pub setup_time: Duration,
}

/// Fluid grid, acoustic O-grid, source snapshots and the implicit time loop.
/// Probes on y = 0 at ±x record p′ = c₀²ρ′ over the last two acoustic periods.
pub fn run_vortex_pair(cfg: &VortexRunConfig, mut progress: impl FnMut(&str)) -> Result<VortexRunResult> {
    let start = Instant::now();
    let pair = &cfg.pair;
    let ta_period = pair.acoustic_period();
    if !(cfg.dt > 0.0 && cfg.snapshot_dt > 0.0 && cfg.t_final > 2.0 * ta_period) {
        return Err(Error::invalid("need dt > 0, snapshot_dt > 0 and t_final > 2 acoustic periods"));
    }
    if cfg.fluid_half >= cfg.grid.block_half {
        return Err(Error::invalid("fluid grid must lie inside the Cartesian block of the acoustic grid"));
    }
    let acoustic = cfg.grid.build()?;
    let radius = cfg.grid.radius;
    let space = SemSpace::with_boundary(&acoustic, cfg.degree, |c, _| {
        if c.x.hypot(c.y) > 0.99 * radius {
            BoundaryKind::Absorbing
        } else {
            BoundaryKind::Neumann
        }
    })?;
    let ops = space.assemble_operators(Material { c0: pair.c0, rho0: pair.rho0 })?;
    progress(&format!("acoustic grid: {} elements, {} nodes", space.num_elements(), space.num_nodes()));

    let xs = graded_coordinates(cfg.fluid_core_half, cfg.fluid_core_h, cfg.fluid_growth, cfg.fluid_half)?;
    let hz = 0.5 * cfg.grid.thickness;
    let fluid = generate_tensor(&xs, &xs, &[-hz, hz])?;
    let cut = intersect::compute_intersection(&acoustic, &fluid, cfg.workers)?;
    let coupling = assemble_coupling(&space, &cut, &fluid, CouplingMethod::QuadratureFree)?;
    let records = cut.len();
    drop(cut);
    progress(&format!("fluid grid: {} cells, {} cut records", fluid.num_cells(), records));

    let taper: Option<Vec<f64>> = match cfg.smoothing {
        Some((ri, ro)) => Some(
            (0..fluid.num_cells())
                .map(|c| {
                    let x = fluid.cell_centroid(c);
                    smoothing_factor(x.x.hypot(x.y), ri, ro)
                })
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let count = ((ta_period / cfg.snapshot_dt).round() as usize).max(1);
    let zeros = vec![0.0; space.num_nodes()];
    let mut guess = [zeros.clone(), zeros.clone()];
    let mut loads: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let snap = sample_snapshot(pair, &fluid, k as f64 * cfg.snapshot_dt);
        let div = lighthill_divergence(&fluid, &snap.velocity, pair.rho0)?;
        let mut q = [Vec::new(), Vec::new()];
        for d in 0..2 {
            let comp: Vec<f64> = div
                .values
                .iter()
                .enumerate()
                .map(|(c, v)| v[d] * taper.as_ref().map_or(1.0, |t| t[c]))
                .collect();
            let (qa, _) = coupling.project_from(&comp, &guess[d])?;
            q[d] = qa;
        }
        loads.push(space.assemble_wave_rhs([&q[0], &q[1], &zeros])?);
        guess = q;
        if (k + 1) % 200 == 0 {
            progress(&format!("snapshots {}/{}", k + 1, count));
        }
    }
    drop(coupling);
    let setup_time = start.elapsed();

    let positive: Vec<f64> = (0..cfg.probe_count)
        .map(|i| cfg.probe_range.0 + (cfg.probe_range.1 - cfg.probe_range.0) * i as f64 / (cfg.probe_count - 1).max(1) as f64)
        .collect();
    let mut pts: Vec<Vec3> = positive.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
    pts.extend(positive.iter().map(|&x| Vec3::new(-x, 0.0, 0.0)));
    let probes = ProbeSet::new(&space, pts)?;
    let np = positive.len();

    let stepper = Newmark::new(&ops, cfg.dt)?;
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let record_from = cfg.t_final - 2.0 * ta_period;
    let mut state = WaveState::zeros(space.num_nodes());
    let mut times = Vec::new();
    let mut series: Vec<Vec<f64>> = Vec::new();
    let c2 = pair.c0 * pair.c0;
    let mut rhs = vec![0.0; space.num_nodes()];
    for n in 1..=steps {
        let t = n as f64 * cfg.dt;
        let ramp = apply_source_ramp(t, cfg.ramp_end)?;
        let [(i0, w0), (i1, w1)] = snapshot_weights(t, cfg.snapshot_dt, count, cfg.sampling);
        for ((r, a), b) in rhs.iter_mut().zip(&loads[i0]).zip(&loads[i1]) {
            *r = ramp * (w0 * a + w1 * b);
        }
        state = stepper.step(&ops, &state, &rhs)?;
        if t >= record_from - 1e-9 {
            times.push(t);
            series.push(probes.sample(&state.rho).iter().map(|v| c2 * v).collect());
        }
        if n % 1000 == 0 {
            progress(&format!("step {n}/{steps}, t = {t:.2}"));
        }
    }

    // p′ = p minus its mean over the last acoustic period
    let last_start = times.partition_point(|&t| t < cfg.t_final - ta_period + 1e-9);
    let mut mean = vec![0.0; 2 * np];
    for row in &series[last_start..] {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let cnt = (series.len() - last_start) as f64;
    mean.iter_mut().for_each(|m| *m /= cnt);
    let fluct: Vec<Vec<f64>> = series.iter().map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();

    // both waveforms are scaled by their largest p′ over the last period on x > 0
    let t_end = *times.last().unwrap_or(&cfg.t_final);
    let p_ref = fluct[last_start..].iter().flat_map(|row| row[..np].iter().cloned()).fold(0.0, f64::max);
    let mut a_ref = 0.0f64;
    for &t in &times[last_start..] {
        for &x in &positive {
            a_ref = a_ref.max(farfield_pressure(pair, x, 0.0, t, PhaseConvention::Quadrupole)?);
        }
    }
    let last = fluct.last().cloned().unwrap_or_default();
    let numeric = scale_by(&last[..np], p_ref);
    let analytic_raw: Vec<f64> = positive
        .iter()
        .map(|&x| farfield_pressure(pair, x, 0.0, t_end, PhaseConvention::Quadrupole))
        .collect::<Result<_>>()?;
    let analytic = scale_by(&analytic_raw, a_ref);
    let waveform_rms = match (&numeric, &analytic) {
        (Some(n), Some(a)) => rms(&n.iter().zip(a).map(|(x, y)| x - y).collect::<Vec<_>>()),
        _ => f64::NAN,
    };

    let mut diff = Vec::new();
    let mut base = Vec::new();
    for row in &fluct[last_start..] {
        for i in 0..np {
            diff.push(row[i] - row[np + i]);
            base.push(row[i]);
        }
    }
    let symmetry_rms = rms(&diff) / rms(&base);

    let mid = positive
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.5 * (cfg.probe_range.0 + cfg.probe_range.1)).abs().total_cmp(&(b.1 - 0.5 * (cfg.probe_range.0 + cfg.probe_range.1)).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mid_series: Vec<f64> = fluct.iter().map(|r| r[mid]).collect();
    let period = crossing_period(&times, &mid_series);

    Ok(VortexRunResult {
        acoustic_elements: space.num_elements(),
        acoustic_nodes: space.num_nodes(),
        fluid_cells: fluid.num_cells(),
        records,
        snapshots: count,
        steps,
        probe_x: positive.clone(),
        numeric: numeric.unwrap_or_else(|| vec![0.0; np]),
        analytic: analytic.unwrap_or_else(|| vec![0.0; np]),
        waveform_rms,
        symmetry_rms,
        period,
        mid_x: positive[mid],
        times,
        mid_series,
        final_time: state.t,
        final_field: state.rho.iter().map(|v| c2 * v).collect(),
        space,
        elapsed: start.elapsed(),
        setup_time,
    })
}

fn scale_by(v: &[f64], p_ref: f64) -> Option<Vec<f64>> {
    (p_ref > 0.0).then(|| v.iter().map(|x| x / p_ref).collect())
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Twice the mean spacing between successive zero crossings.
pub fn crossing_period(t: &[f64], v: &[f64]) -> f64 {
    let mut c = Vec::new();
    for i in 1..v.len().min(t.len()) {
        if v[i - 1] * v[i] < 0.0 {
            c.push(t[i - 1] + (t[i] - t[i - 1]) * v[i - 1] / (v[i - 1] - v[i]));
        }
    }
    if c.len() < 2 {
        return f64::NAN;
    }
    2.0 * (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64
}

/// CSV of the recorded p′ time series at the centre probe: `t,p`.
pub fn series_csv(res: &VortexRunResult) -> String {
    let mut s = format!("t,p_at_x{:?}\n", res.mid_x);
    for (t, p) in res.times.iter().zip(&res.mid_series) {
        s.push_str(&format!("{t:?},{p:?}\n"));
    }
    s
}

/// CSV of the final probe line: `x,p_numeric,p_analytic`.
pub fn probe_csv(res: &VortexRunResult) -> String {
    let mut s = String::from("x,p_numeric,p_analytic\n");
    for ((x, n), a) in res.probe_x.iter().zip(&res.numeric).zip(&res.analytic) {
        s.push_str(&format!("{x:?},{n:?},{a:?}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::ErrorNorms;

    #[test]
    fn box_integral_closed_form() {
        let b = Aabb::new(Vec3::new(-2.0, -2.0, -0.05), Vec3::new(2.0, 2.0, 0.05));
        assert!((box_integral(&b, Monomial::new(4, 4, 0)) - 16.384).abs() < 1e-12);
        assert!((box_integral(&b, Monomial::ONE) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn single_cube_is_exact() {
        let b = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let m = generate_cartesian(b, [1, 1, 1]).unwrap();
        assert_eq!(relative_error(1.0, mesh_integral(&m, Monomial::ONE).unwrap()), 0.0);
    }

    #[test]
    fn labels() {
        assert_eq!(monomial_label(Monomial::ONE), "1");
        assert_eq!(monomial_label(Monomial::new(2, 2, 0)), "x^2*y^2");
        assert_eq!(monomial_label(Monomial::new(1, 0, 4)), "x*z^4");
    }

    #[test]
    fn crossing_period_of_sine() {
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.02).collect();
        let v: Vec<f64> = t.iter().map(|t| (2.0 * std::f64::consts::PI * t / 40.0 + 0.3).sin()).collect();
        assert!((crossing_period(&t, &v) - 40.0).abs() < 1e-3);
        assert!(crossing_period(&t[..10], &v[..10]).is_nan());
    }

    #[test]
    fn bound_fit_checks_other_rows() {
        let row = |h_a: f64, e_a: f64| SweepRow {
            h_a,
            h_f: h_a / 2.0,
            r: 1,
            method: CouplingMethod::QuadratureFree,
            norms: ErrorNorms { e_a, e_fp: 0.0, e_pa: 0.0 },
        };
        let s = |h: f64| theorem_bound_shape(h, h / 2.0, 1, 2.0);
        let rows = vec![row(0.25, 2.0 * s(0.25)), row(0.125, 1.5 * s(0.125))];
        let fit = fit_theorem_bound(&rows, 0.25);
        assert!((fit.c - 2.0).abs() < 1e-12);
        assert!(fit.holds());
        let rows = vec![row(0.25, 2.0 * s(0.25)), row(0.125, 3.0 * s(0.125))];
        assert!(!fit_theorem_bound(&rows, 0.25).holds());
    }

    #[test]
    fn oscillator_drift_small() {
        assert!(oscillator_energy_drift(2.0, 0.01, 200).unwrap() < 1e-12);
    }

    #[test]
    fn manufactured_linear_degree_one() {
        let e = manufactured_error(1, [2, 2, 2], 1e-3, 0.1).unwrap();
        assert!(e < 1e-7, "{e}");
    }
}
