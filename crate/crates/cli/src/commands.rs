use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lighthill_core::intersect::{self, BroadPhase, IntersectOptions};
use lighthill_core::mesh::{
    generate_cartesian, generate_distorted, generate_tensor, graded_coordinates, read_mesh, write_mesh, OGridSpec,
};
use lighthill_core::projection::{loglog_slope, projection_sweep, sweep_csv, SweepConfig, SweepRow, TrigProduct};
use lighthill_core::sem::SnapshotSampling;
use lighthill_core::studies::{self, IntegrationSetup, VortexRunConfig};
use lighthill_core::{Aabb, CellKind, CouplingMethod, Error, PolyMesh, Result, Vec3, VortexPairConfig};

use crate::config::{RunConfig, GENERAL};

/// Settings shared by every command.
pub struct Common {
    pub workers: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

pub fn common(cfg: &mut RunConfig, workers_flag: Option<usize>) -> Result<Common> {
    let workers = cfg.get(GENERAL, "workers", 1usize)?;
    let seed = cfg.get(GENERAL, "seed", 1u64)?;
    let output_dir = cfg.path(GENERAL, "output_dir", "out")?;
    let workers = workers_flag.unwrap_or(workers).max(1);
    // fails only if the pool already exists, which is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(Common { workers, seed, output_dir })
}

/// Checks keys, creates the output directory and writes `config.echo`.
pub fn finish_config(cfg: &RunConfig, command: &str, c: &Common) -> Result<()> {
    cfg.reject_unknown(command)?;
    fs::create_dir_all(&c.output_dir)?;
    fs::write(c.output_dir.join("config.echo"), cfg.echo())?;
    Ok(())
}

fn parse_bounds(v: &[f64]) -> Result<Aabb> {
    if v.len() != 6 {
        return Err(Error::invalid("bounds needs six numbers: xmin ymin zmin xmax ymax zmax"));
    }
    Ok(Aabb::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])))
}

/// A mesh file path, or `cartesian:NXxNYxNZ` on the given bounds.
fn mesh_source(spec: &str, bounds: Aabb) -> Result<PolyMesh> {
    if let Some(dims) = spec.strip_prefix("cartesian:") {
        let n: Vec<usize> = dims
            .split('x')
            .map(|s| s.trim().parse().map_err(|_| Error::invalid(format!("bad cartesian spec '{spec}'"))))
            .collect::<Result<_>>()?;
        let n: [usize; 3] = n.try_into().map_err(|_| Error::invalid(format!("cartesian spec '{spec}' needs three counts")))?;
        generate_cartesian(bounds, n)
    } else {
        read_mesh(spec)
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn intersect(cfg: &mut RunConfig, workers: Option<usize>, brute_force: bool) -> Result<()> {
    const SEC: &str = "intersect";
    let c = common(cfg, workers)?;
    let bounds = parse_bounds(&cfg.get_list(SEC, "bounds", &[-0.5, -0.5, -0.5, 0.5, 0.5, 0.5])?)?;
    let acoustic = cfg.get::<String>(SEC, "acoustic", "cartesian:4x4x4".into())?;
    let fluid = cfg.get::<String>(SEC, "fluid", "cartesian:8x8x8".into())?;
    let brute = cfg.get(SEC, "brute_force", false)? || brute_force;
    let polytopes = cfg.get(SEC, "export_polytopes", false)?;
    finish_config(cfg, SEC, &c)?;

    let ta = mesh_source(&acoustic, bounds)?;
    let tf = mesh_source(&fluid, bounds)?;
    let opts = IntersectOptions {
        workers: c.workers,
        broad_phase: if brute { BroadPhase::BruteForce } else { BroadPhase::Grid },
    };
    let cut = intersect::compute_intersection_with(&ta, &tf, &opts)?;
    fs::write(c.output_dir.join("cutmesh.txt"), cut.export())?;
    if polytopes {
        fs::write(c.output_dir.join("cutmesh_polytopes.txt"), cut.export_polytopes(&tf)?)?;
    }
    let (ea, ef) = studies::partition_errors(&cut, &ta, &tf);
    let contained = cut.count(intersect::Provenance::Contained);
    write_csv(
        &c.output_dir.join("summary.csv"),
        &["acoustic_cells", "fluid_cells", "records", "contained", "clipped", "partition_err_acoustic", "partition_err_fluid"],
        [vec![
            ta.num_cells().to_string(),
            tf.num_cells().to_string(),
            cut.len().to_string(),
            contained.to_string(),
            (cut.len() - contained).to_string(),
            format!("{ea:e}"),
            format!("{ef:e}"),
        ]],
    )?;
    write_csv(
        &c.output_dir.join("workers.csv"),
        &["worker", "first_cell", "last_cell", "candidates", "contained", "clipped"],
        cut.workers.iter().enumerate().map(|(i, w)| {
            vec![
                i.to_string(),
                w.acoustic_cells.start.to_string(),
                w.acoustic_cells.end.to_string(),
                w.candidates.to_string(),
                w.contained.to_string(),
                w.clipped.to_string(),
            ]
        }),
    )?;
    let mut timing = fs::File::create(c.output_dir.join("timing.txt"))?;
    writeln!(timing, "workers {}\nwall_seconds {:.6}", c.workers, cut.elapsed.as_secs_f64())?;
    for (i, w) in cut.workers.iter().enumerate() {
        writeln!(timing, "worker {i} seconds {:.6}", w.elapsed.as_secs_f64())?;
    }
    println!(
        "{} records ({} contained, {} clipped) in {:.3} s; partition errors {:.2e} / {:.2e}",
        cut.len(),
        contained,
        cut.len() - contained,
        cut.elapsed.as_secs_f64(),
        ea,
        ef
    );
    Ok(())
}

pub fn integrate_check(cfg: &mut RunConfig, workers: Option<usize>) -> Result<bool> {
    const SEC: &str = "integrate-check";
    let c = common(cfg, workers)?;
    let tables = cfg.get_list(SEC, "tables", &[1u8, 2])?;
    let fluid1 = cfg.path(SEC, "fluid_mesh_1", "fixtures/polygons_109.mesh")?;
    let fluid2 = cfg.path(SEC, "fluid_mesh_2", "fixtures/voronoi_1000.mesh")?;
    let tol = cfg.get(SEC, "tolerance", 1e-12)?;
    finish_config(cfg, SEC, &c)?;

    let mut rows = Vec::new();
    for t in tables {
        let setup: IntegrationSetup = match t {
            1 => studies::table1_setup(read_mesh(&fluid1)?, c.seed)?,
            2 => studies::table2_setup(read_mesh(&fluid2)?)?,
            _ => return Err(Error::invalid(format!("unknown table {t}; expected 1 or 2"))),
        };
        rows.extend(studies::integrate_check(&setup, c.workers)?.0);
    }
    fs::write(c.output_dir.join("integration.csv"), studies::integration_csv(&rows))?;
    let worst = rows.iter().map(|r| r.e_rel).fold(0.0, f64::max);
    println!("{} integrals, largest E_rel {:.3e} (tolerance {:.1e})", rows.len(), worst, tol);
    Ok(worst <= tol)
}

pub fn project_sweep(cfg: &mut RunConfig, workers: Option<usize>) -> Result<()> {
    const SEC: &str = "project-sweep";
    let c = common(cfg, workers)?;
    let d = SweepConfig::default();
    let acoustic_cells = cfg.get_list(SEC, "acoustic_cells", &d.acoustic_cells)?;
    let degrees = cfg.get_list(SEC, "degrees", &d.degrees)?;
    let refinements = cfg.get_list(SEC, "refinements", &d.refinements)?;
    let methods: Vec<String> = cfg.get_list(SEC, "methods", &["QF".to_string(), "MP".to_string()])?;
    let k = cfg.get_list(SEC, "wavenumbers_over_pi", &[2.0, 2.0, 1.0])?;
    finish_config(cfg, SEC, &c)?;
    if k.len() != 3 {
        return Err(Error::invalid("wavenumbers_over_pi needs three values"));
    }
    let methods = methods
        .iter()
        .map(|m| match m.as_str() {
            "QF" => Ok(CouplingMethod::QuadratureFree),
            "MP" => Ok(CouplingMethod::MidPoint),
            _ => Err(Error::invalid(format!("unknown method '{m}'; expected QF or MP"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if refinements.contains(&0) || acoustic_cells.contains(&0) {
        return Err(Error::invalid("cell counts and refinement factors must be positive"));
    }
    let pi = std::f64::consts::PI;
    let sweep = SweepConfig {
        acoustic_cells,
        degrees,
        refinements,
        methods,
        f: TrigProduct { k: [k[0] * pi, k[1] * pi, k[2] * pi] },
        workers: c.workers,
        ..d
    };
    let rows = projection_sweep(&sweep, |r| {
        println!("h_a={} h_f={} r={} {}: E_a={:.3e} E_pa={:.3e}", r.h_a, r.h_f, r.r, r.method.tag(), r.norms.e_a, r.norms.e_pa)
    })?;
    fs::write(c.output_dir.join("sweep.csv"), sweep_csv(&rows))?;
    fs::write(c.output_dir.join("slopes.csv"), slope_csv(&rows))?;
    Ok(())
}

/// Fitted slope of ‖f_p − f_a‖ against h_f for every (h_a, r, method) curve.
pub fn slope_csv(rows: &[SweepRow]) -> String {
    let mut keys: Vec<(u64, usize, &'static str)> = rows.iter().map(|r| (r.h_a.to_bits(), r.r, r.method.tag())).collect();
    keys.sort_unstable_by(|a, b| f64::from_bits(b.0).total_cmp(&f64::from_bits(a.0)).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));
    keys.dedup();
    let mut s = String::from("h_a,r,method,points,slope_E_pa\n");
    for (h, r, m) in keys {
        let curve: Vec<&SweepRow> = rows.iter().filter(|x| x.h_a.to_bits() == h && x.r == r && x.method.tag() == m).collect();
        let slope = if curve.len() >= 2 {
            let hf: Vec<f64> = curve.iter().map(|x| x.h_f).collect();
            let e: Vec<f64> = curve.iter().map(|x| x.norms.e_pa).collect();
            format!("{:.6}", loglog_slope(&hf, &e))
        } else {
            "nan".into()
        };
        s.push_str(&format!("{:?},{},{},{},{}\n", f64::from_bits(h), r, m, curve.len(), slope));
    }
    s
}

pub fn vortex_pair(cfg: &mut RunConfig, workers: Option<usize>) -> Result<()> {
    const SEC: &str = "vortex-pair";
    let c = common(cfg, workers)?;
    let d = VortexRunConfig::default();
    let pair = VortexPairConfig {
        gamma: cfg.get(SEC, "gamma", d.pair.gamma)?,
        r0: cfg.get(SEC, "r0", d.pair.r0)?,
        rc: cfg.get(SEC, "rc", d.pair.rc)?,
        rho0: cfg.get(SEC, "rho0", d.pair.rho0)?,
        c0: cfg.get(SEC, "c0", d.pair.c0)?,
    };
    let ta = pair.acoustic_period();
    let grid = OGridSpec {
        block_half: cfg.get(SEC, "block_half", d.grid.block_half)?,
        core_half: cfg.get(SEC, "core_half", d.grid.core_half)?,
        core_h: cfg.get(SEC, "core_h", d.grid.core_h)?,
        growth: cfg.get(SEC, "growth", d.grid.growth)?,
        radius: cfg.get(SEC, "radius", d.grid.radius)?,
        ring_layers: cfg.get(SEC, "ring_layers", d.grid.ring_layers)?,
        thickness: cfg.get(SEC, "thickness", d.grid.thickness)?,
    };
    let periods = cfg.get(SEC, "t_final_periods", 6.0)?;
    let ramp_periods = cfg.get(SEC, "ramp_periods", 1.0)?;
    let sampling = match cfg.get::<String>(SEC, "sampling", "linear".into())?.as_str() {
        "linear" => SnapshotSampling::Linear,
        "nearest" => SnapshotSampling::Nearest,
        s => return Err(Error::invalid(format!("sampling '{s}': expected linear or nearest"))),
    };
    let smooth_ri = cfg.get_opt::<f64>(SEC, "smoothing_ri")?;
    let smooth_ro = cfg.get_opt::<f64>(SEC, "smoothing_ro")?;
    let run = VortexRunConfig {
        pair,
        grid,
        degree: cfg.get(SEC, "degree", d.degree)?,
        dt: cfg.get(SEC, "dt", d.dt)?,
        t_final: periods * ta,
        ramp_end: ramp_periods * ta,
        fluid_half: cfg.get(SEC, "fluid_half", d.fluid_half)?,
        fluid_core_half: cfg.get(SEC, "fluid_core_half", d.fluid_core_half)?,
        fluid_core_h: cfg.get(SEC, "fluid_core_h", d.fluid_core_h)?,
        fluid_growth: cfg.get(SEC, "fluid_growth", d.fluid_growth)?,
        snapshot_dt: cfg.get(SEC, "snapshot_dt", d.snapshot_dt)?,
        sampling,
        smoothing: match (smooth_ri, smooth_ro) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::invalid("smoothing needs both smoothing_ri and smoothing_ro")),
        },
        probe_range: (cfg.get(SEC, "probe_r_min", d.probe_range.0)?, cfg.get(SEC, "probe_r_max", d.probe_range.1)?),
        probe_count: cfg.get(SEC, "probe_count", d.probe_count)?,
        workers: c.workers,
    };
    finish_config(cfg, SEC, &c)?;

    let res = studies::run_vortex_pair(&run, |m| println!("{m}"))?;
    fs::write(c.output_dir.join("probe.csv"), studies::probe_csv(&res))?;
    fs::write(c.output_dir.join("series.csv"), studies::series_csv(&res))?;
    let mut field = std::io::BufWriter::new(fs::File::create(c.output_dir.join("field_final.txt"))?);
    res.space.write_field_table(&res.final_field, &mut field)?;
    field.flush()?;
    write_csv(
        &c.output_dir.join("report.csv"),
        &["metric", "value"],
        [
            ("acoustic_elements", res.acoustic_elements.to_string()),
            ("acoustic_nodes", res.acoustic_nodes.to_string()),
            ("fluid_cells", res.fluid_cells.to_string()),
            ("cut_records", res.records.to_string()),
            ("snapshots", res.snapshots.to_string()),
            ("steps", res.steps.to_string()),
            ("final_time", format!("{:?}", res.final_time)),
            ("waveform_rms", format!("{:?}", res.waveform_rms)),
            ("symmetry_rms", format!("{:?}", res.symmetry_rms)),
            ("period", format!("{:?}", res.period)),
            ("period_expected", format!("{ta:?}")),
        ]
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), v]),
    )?;
    println!(
        "waveform RMS {:.4}, symmetry RMS {:.4}, period {:.3} (expected {:.3}); {:.1} s",
        res.waveform_rms,
        res.symmetry_rms,
        res.period,
        ta,
        res.elapsed.as_secs_f64()
    );
    Ok(())
}

pub fn mesh_gen(cfg: &mut RunConfig, workers: Option<usize>, output: &Path) -> Result<()> {
    const SEC: &str = "mesh";
    let c = common(cfg, workers)?;
    let kind = cfg.get::<String>(SEC, "kind", "cartesian".into())?;
    let mesh = match kind.as_str() {
        "cartesian" | "distorted" => {
            let bounds = parse_bounds(&cfg.get_list(SEC, "bounds", &[-0.5, -0.5, -0.5, 0.5, 0.5, 0.5])?)?;
            let n = cfg.get_list(SEC, "cells", &[4usize, 4, 4])?;
            let n: [usize; 3] = n.try_into().map_err(|_| Error::invalid("cells needs three counts"))?;
            let base = generate_cartesian(bounds, n)?;
            if kind == "distorted" {
                generate_distorted(&base, cfg.get(SEC, "amplitude", 0.2)?, c.seed)?
            } else {
                base
            }
        }
        "graded" => {
            let xs = graded_coordinates(
                cfg.get(SEC, "core_half", 1.5)?,
                cfg.get(SEC, "core_h", 0.05)?,
                cfg.get(SEC, "growth", 1.1)?,
                cfg.get(SEC, "half", 15.0)?,
            )?;
            let hz = 0.5 * cfg.get(SEC, "thickness", 1.0)?;
            generate_tensor(&xs, &xs, &[-hz, hz])?
        }
        "ogrid" => {
            let d = VortexRunConfig::default().grid;
            OGridSpec {
                block_half: cfg.get(SEC, "block_half", d.block_half)?,
                core_half: cfg.get(SEC, "core_half", d.core_half)?,
                core_h: cfg.get(SEC, "core_h", d.core_h)?,
                growth: cfg.get(SEC, "growth", d.growth)?,
                radius: cfg.get(SEC, "radius", d.radius)?,
                ring_layers: cfg.get(SEC, "ring_layers", d.ring_layers)?,
                thickness: cfg.get(SEC, "thickness", d.thickness)?,
            }
            .build()?
        }
        k => return Err(Error::invalid(format!("unknown mesh kind '{k}'"))),
    };
    finish_config(cfg, SEC, &c)?;
    write_mesh(&mesh, output)?;
    println!("{} cells, {} faces, {} vertices", mesh.num_cells(), mesh.num_faces(), mesh.num_vertices());
    Ok(())
}

pub fn mesh_validate(path: &Path) -> Result<()> {
    let start = Instant::now();
    let mesh = read_mesh(path)?;
    let kind = match mesh.kind() {
        CellKind::Hexahedral => "hexahedral",
        CellKind::General => "polyhedral",
    };
    let b = mesh.bounds();
    println!(
        "valid {} mesh: {} cells, {} faces, {} vertices, volume {:.15e}, bounds [{:?} {:?} {:?}]..[{:?} {:?} {:?}] ({:.3} s)",
        kind,
        mesh.num_cells(),
        mesh.num_faces(),
        mesh.num_vertices(),
        mesh.total_volume(),
        b.min.x,
        b.min.y,
        b.min.z,
        b.max.x,
        b.max.y,
        b.max.z,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
