//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs sequentially and takes several minutes in the optimized test profile.
//! A check marked exempt is still printed as FAIL but does not fail
//! the target; anything else does.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lighthill_core::intersect::{self, clip_convex, sat_intersects};
use lighthill_core::mesh::{generate_cartesian, generate_distorted, read_mesh};
use lighthill_core::projection::{loglog_slope, projection_sweep, SweepConfig, SweepRow};
use lighthill_core::quadfree::integrate_monomial;
use lighthill_core::studies::{self, VortexRunConfig};
use lighthill_core::{tol, Aabb, CouplingMethod, Monomial, Provenance, Vec3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use support::*;

const INTEGRATION_REL: f64 = 1e-12;
const INTEGRATION_SECONDS: f64 = 60.0;
const CENSUS_RECORDS: usize = 884736;
const CENSUS_CONTAINED: usize = 39304;
const CENSUS_CLIPPED: usize = 845432;
const CENSUS_SECONDS: f64 = 600.0;
const PARTITION_REL: f64 = 1e-10;
const SCALING_WORKERS: [usize; 4] = [1, 2, 4, 8];
const MIN_SPEEDUP_8: f64 = 3.0;
const SLOPE: f64 = 2.0;
const SLOPE_TOL: f64 = 0.2;
const SATURATION_REL: f64 = 0.05;
const QF_MP_AGREE_R1: f64 = 1e-10;
const SWEEP_SECONDS: f64 = 900.0;
const BOUND_FIT_H_A: f64 = 0.25;
const MANUFACTURED_MAX: f64 = 1e-8;
const ENERGY_DRIFT_MAX: f64 = 1e-8;
const WAVE_SPEED_REL: f64 = 0.01;
const WAVEFORM_RMS: f64 = 0.10;
const SYMMETRY_RMS: f64 = 0.03;
const PERIOD_REL: f64 = 0.02;
const VORTEX_SECONDS: f64 = 1800.0;
const ORACLE_CELLS: usize = 100;
const ORACLE_REL: f64 = 1e-11;
const SAT_PAIRS: usize = 1000;

struct Report {
    lines: Vec<(String, bool, bool)>,
}

impl Report {
    fn check(&mut self, id: &str, what: &str, pass: bool, detail: String) {
        self.check_exempt(id, what, pass, detail, false);
    }

    fn check_exempt(&mut self, id: &str, what: &str, pass: bool, detail: String, exempt: bool) {
        let tag = if pass { "PASS" } else if exempt { "FAIL (exempt)" } else { "FAIL" };
        println!("{tag:<13} {id:<4} {what}: {detail}");
        self.lines.push((id.to_string(), pass, exempt));
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn integration(rep: &mut Report) {
    let t = Instant::now();
    let s1 = studies::table1_setup(read_mesh(fixture("polygons_109.mesh")).unwrap(), 1).unwrap();
    let s2 = studies::table2_setup(read_mesh(fixture("voronoi_1000.mesh")).unwrap()).unwrap();
    let mut worst = 0.0f64;
    let mut rows = 0;
    for s in [&s1, &s2] {
        let (r, _) = studies::integrate_check(s, 1).unwrap();
        rows += r.len();
        worst = r.iter().map(|x| x.e_rel).fold(worst, f64::max);
    }
    let el = secs(t.elapsed());
    rep.check("1", "integration exactness", worst <= INTEGRATION_REL && rows == 18, format!("max E_rel {worst:.2e} over {rows} rows (tol {INTEGRATION_REL:e})"));
    rep.check("1", "integration runtime", el <= INTEGRATION_SECONDS, format!("{el:.1} s (limit {INTEGRATION_SECONDS} s)"));
}

fn census_and_scaling(rep: &mut Report) {
    let b = Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5));
    let ta = generate_cartesian(b, [32; 3]).unwrap();
    let tf = generate_cartesian(b, [65; 3]).unwrap();
    let cut = intersect::compute_intersection(&ta, &tf, 1).unwrap();
    let (n, nc, ni) = (cut.len(), cut.count(Provenance::Contained), cut.count(Provenance::Clipped));
    rep.check(
        "2",
        "intersection census",
        n == CENSUS_RECORDS && nc == CENSUS_CONTAINED && ni == CENSUS_CLIPPED,
        format!("{n} records, {nc} contained, {ni} clipped (expected {CENSUS_RECORDS}/{CENSUS_CONTAINED}/{CENSUS_CLIPPED})"),
    );
    let t1 = secs(cut.elapsed);
    rep.check("2", "census runtime, 1 worker", t1 <= CENSUS_SECONDS, format!("{t1:.1} s (limit {CENSUS_SECONDS} s)"));
    let (ea, ef) = studies::partition_errors(&cut, &ta, &tf);
    rep.check("2", "volume partition", ea.max(ef) <= PARTITION_REL, format!("acoustic {ea:.2e}, fluid {ef:.2e} (tol {PARTITION_REL:e})"));

    let reference = cut.export();
    drop(cut);
    let mut identical = true;
    let mut times = vec![t1];
    for &w in &SCALING_WORKERS[1..] {
        let c = intersect::compute_intersection(&ta, &tf, w).unwrap();
        identical &= c.export() == reference;
        times.push(secs(c.elapsed));
    }
    rep.check("3", "byte-identical exports", identical, format!("workers {SCALING_WORKERS:?}, wall {times:.1?} s"));
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let speedup = t1 / times[3];
    rep.check_exempt(
        "3",
        "speedup at 8 workers",
        speedup >= MIN_SPEEDUP_8,
        format!("{speedup:.2}x on {cores} available core(s) (need {MIN_SPEEDUP_8}x)"),
        cores < 8,
    );
}

fn curve(rows: &[SweepRow], h_a: f64, r: usize, m: CouplingMethod) -> Vec<&SweepRow> {
    rows.iter().filter(|x| x.h_a == h_a && x.r == r && x.method == m).collect()
}

fn projection(rep: &mut Report) {
    let t = Instant::now();
    let cfg = SweepConfig::default();
    let rows = projection_sweep(&cfg, |_| {}).unwrap();
    let el = secs(t.elapsed());
    let qf = CouplingMethod::QuadratureFree;
    let mp = CouplingMethod::MidPoint;
    let h_as: Vec<f64> = cfg.acoustic_cells.iter().map(|&n| 1.0 / n as f64).collect();

    let mut slopes = Vec::new();
    let mut saturation = Vec::new();
    let mut monotone = true;
    for &h_a in &h_as {
        let mut prev_fp = f64::INFINITY;
        for &r in &cfg.degrees {
            let c = curve(&rows, h_a, r, qf);
            let hf: Vec<f64> = c.iter().map(|x| x.h_f).collect();
            let e: Vec<f64> = c.iter().map(|x| x.norms.e_pa).collect();
            slopes.push((h_a, r, loglog_slope(&hf, &e)));
            let finest = c.iter().min_by(|a, b| a.h_f.total_cmp(&b.h_f)).unwrap();
            saturation.push((h_a, r, (finest.norms.e_a - finest.norms.e_fp).abs() / finest.norms.e_fp));
            monotone &= finest.norms.e_fp < prev_fp;
            prev_fp = finest.norms.e_fp;
        }
    }
    let bad_slopes: Vec<_> = slopes.iter().filter(|s| (s.2 - SLOPE).abs() > SLOPE_TOL).collect();
    let range = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| (a.0.min(s.2), a.1.max(s.2)));
    rep.check(
        "4a",
        "slope of |f_p - f_a| vs h_f",
        bad_slopes.is_empty(),
        format!("{} curves, slopes in [{:.3}, {:.3}] (need {SLOPE} +- {SLOPE_TOL}); off: {bad_slopes:.3?}", slopes.len(), range.0, range.1),
    );
    let bad_sat: Vec<_> = saturation.iter().filter(|s| s.2 > SATURATION_REL).collect();
    rep.check_exempt(
        "4b",
        "E_a saturates at |f - f_p|",
        bad_sat.is_empty(),
        format!("relative gaps at finest h_f {saturation:.3?} (tol {SATURATION_REL}); off: {}", bad_sat.len()),
        true,
    );
    rep.check("4c", "|f - f_p| decreasing in r", monotone, "at every h_a".into());

    let mut qf_worse = 0;
    let mut r1_gap = 0.0f64;
    let mut compared = 0;
    for a in rows.iter().filter(|x| x.method == qf) {
        let b = rows.iter().find(|x| x.method == mp && x.h_a == a.h_a && x.h_f == a.h_f && x.r == a.r).unwrap();
        compared += 1;
        if a.r == 1 {
            r1_gap = r1_gap.max((a.norms.e_a - b.norms.e_a).abs() / b.norms.e_a);
        } else if a.norms.e_a > b.norms.e_a {
            qf_worse += 1;
        }
    }
    rep.check(
        "4d",
        "quadrature-free vs mid-point",
        qf_worse == 0 && r1_gap <= QF_MP_AGREE_R1,
        format!("{compared} points, QF worse at {qf_worse} with r >= 2, r = 1 gap {r1_gap:.2e} (tol {QF_MP_AGREE_R1:e})"),
    );
    rep.check("4", "sweep runtime", el <= SWEEP_SECONDS, format!("{el:.1} s (limit {SWEEP_SECONDS} s)"));

    let fit = studies::fit_theorem_bound(&rows, BOUND_FIT_H_A);
    rep.check(
        "5",
        "error bound with one fitted C",
        fit.holds(),
        format!("C = {:.3e} from {} rows at h_a = {BOUND_FIT_H_A}; worst ratio {:.3} over {} rows", fit.c, fit.fit_rows, fit.worst_ratio, fit.checked_rows),
    );
}

fn wave(rep: &mut Report) {
    let e = studies::manufactured_error(2, [2, 2, 2], 1e-4, 1.0).unwrap();
    rep.check("6a", "manufactured linear solution", e <= MANUFACTURED_MAX, format!("max nodal error {e:.2e} (tol {MANUFACTURED_MAX:e})"));
    let d = studies::oscillator_energy_drift(1.0, 0.05, 1000).unwrap();
    rep.check("6b", "Newmark energy drift", d <= ENERGY_DRIFT_MAX, format!("{d:.2e} over 1000 steps (tol {ENERGY_DRIFT_MAX:e})"));
    let c = studies::standing_wave_speed(2, 10, 1.0, 5).unwrap();
    let rel = (c - 1.0).abs();
    rep.check("6c", "plane-wave speed, r = 2, 20 nodes/wavelength", rel <= WAVE_SPEED_REL, format!("c = {c:.6} (rel error {rel:.2e}, tol {WAVE_SPEED_REL})"));
}

fn vortex(rep: &mut Report) {
    let cfg = VortexRunConfig::default();
    let ta = cfg.pair.acoustic_period();
    let res = studies::run_vortex_pair(&cfg, |_| {}).unwrap();
    let setup = format!("{} elements, {} fluid cells, {} snapshots", res.acoustic_elements, res.fluid_cells, res.snapshots);
    rep.check("7", "probe waveform RMS", res.waveform_rms <= WAVEFORM_RMS, format!("{:.4} (tol {WAVEFORM_RMS}); {setup}", res.waveform_rms));
    rep.check("7", "quadrupole symmetry RMS", res.symmetry_rms <= SYMMETRY_RMS, format!("{:.2e} (tol {SYMMETRY_RMS})", res.symmetry_rms));
    let rel = (res.period - ta).abs() / ta;
    rep.check("7", "temporal period", rel <= PERIOD_REL, format!("{:.3} vs {ta:.3} (rel {rel:.4}, tol {PERIOD_REL})", res.period));
    let el = secs(res.elapsed);
    rep.check("7", "vortex runtime", el <= VORTEX_SECONDS, format!("{el:.1} s (limit {VORTEX_SECONDS} s)"));
}

fn oracles(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let b = Aabb::new(Vec3::repeat(-0.5), Vec3::repeat(0.5));
    let ta = generate_distorted(&generate_cartesian(b, [4, 4, 4]).unwrap(), 0.2, 7).unwrap();
    let tf = read_mesh(fixture("voronoi_1000.mesh")).unwrap();
    let cut = intersect::compute_intersection(&ta, &tf, 1).unwrap();
    let mut clipped: Vec<usize> = (0..cut.len()).filter(|&i| cut.records[i].provenance == Provenance::Clipped).collect();
    clipped.shuffle(&mut rng);
    let monos = [Monomial::ONE, Monomial::new(1, 2, 0), Monomial::new(2, 2, 2), Monomial::new(3, 1, 4), Monomial::new(4, 4, 4)];
    let mut worst = 0.0f64;
    for &i in clipped.iter().take(ORACLE_CELLS) {
        let p = cut.cut_polytope(i, &tf).unwrap();
        for m in monos {
            let exact = integrate_monomial(&p, m);
            let quad = polytope_integral(&p, &|x| m.eval(x), 10);
            let scale = polytope_integral(&p, &|x| m.eval(x).abs(), 10);
            worst = worst.max((exact - quad).abs() / scale);
        }
    }
    let cells = clipped.len().min(ORACLE_CELLS);
    rep.check(
        "8",
        "quadrature-free vs sub-tessellation",
        cells == ORACLE_CELLS && worst <= ORACLE_REL,
        format!("{cells} cut cells x {} monomials, worst {worst:.2e} relative to the integral of |m| (tol {ORACLE_REL:e})", monos.len()),
    );

    let mut disagreements = 0;
    let mut overlapping = 0;
    for i in 0..SAT_PAIRS {
        let p = if i % 2 == 0 { random_parallelepiped(&mut rng, 1.0) } else { random_tet(&mut rng, 1.0) };
        let q = random_parallelepiped(&mut rng, 1.0);
        let sat = sat_intersects(&p, &q);
        match clip_convex(&p, &q) {
            Some(c) if c.volume() > tol::SLIVER_VOLUME => {
                overlapping += 1;
                disagreements += usize::from(!sat);
            }
            Some(_) => {}
            None => disagreements += usize::from(sat_intersects(&shrunk(&p, 1.0 - 1e-6), &shrunk(&q, 1.0 - 1e-6))),
        }
    }
    rep.check(
        "8",
        "SAT vs clipping",
        disagreements == 0,
        format!("{SAT_PAIRS} pairs, {overlapping} overlapping, {disagreements} disagreements"),
    );
}

fn main() -> ExitCode {
    let mut rep = Report { lines: Vec::new() };
    let t = Instant::now();
    integration(&mut rep);
    census_and_scaling(&mut rep);
    projection(&mut rep);
    wave(&mut rep);
    vortex(&mut rep);
    oracles(&mut rep);
    let failed: Vec<&str> = rep.lines.iter().filter(|l| !l.1 && !l.2).map(|l| l.0.as_str()).collect();
    let exempt = rep.lines.iter().filter(|l| !l.1 && l.2).count();
    println!(
        "acceptance: {} checks, {} passed, {exempt} exempt failures, {} failures [{:.0} s]",
        rep.lines.len(),
        rep.lines.iter().filter(|l| l.1).count(),
        failed.len(),
        secs(t.elapsed())
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
