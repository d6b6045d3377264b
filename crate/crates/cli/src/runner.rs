//! Config-driven experiment execution: one mesh sequence per run, a CSV
//! convergence table, and a plain-text manifest with a content hash of the
//! inputs. Output files are byte-identical for a fixed config and rng_seed;
//! runtimes are recorded only in the manifest.

use crate::config::ExperimentConfig;
use crate::presets::{self, CdPreset, PmePreset, Preset};
use crate::tables::{EocTable, ErrorReport};
use crate::vtk;
use anyhow::{anyhow, Context, Result};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::time::Instant;
use vem::ale::{interpolate_composed, MapDofs};
use vem::analysis::{boundary_radius_error, l1_dof_error, l2_h1_errors, mesh_size};
use vem::mesh::{io::load_mesh, voronoi, PolygonalMesh};
use vem::pme::{self, PmeOptions, Similarity};
use vem::space::VemSpace;
use vem::time::{run_convection_diffusion_observed, TimeGrid};

const LLOYD_ITERATIONS: usize = 100;

pub struct RunArtifacts {
    pub table: EocTable,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    /// One status line per level, mirrored in the manifest.
    pub level_lines: Vec<String>,
}

struct Resolved {
    levels: usize,
    dt0: f64,
    base_cells: usize,
}

fn resolve(cfg: &ExperimentConfig, preset: &Preset) -> Resolved {
    let (default_levels, default_dt0, base_cells) = match preset {
        Preset::Cd(p) => (p.default_levels, p.default_dt0, p.base_cells),
        Preset::Pme(p) => (p.default_levels, p.default_dt0, p.base_cells),
    };
    let levels = if cfg.mesh_files.is_empty() {
        cfg.mesh_levels.unwrap_or(default_levels)
    } else {
        cfg.mesh_files.len()
    };
    Resolved {
        levels,
        dt0: cfg.dt0.unwrap_or(default_dt0),
        base_cells,
    }
}

/// The part of the configuration that determines the numbers; this plus the
/// mesh coordinate data is what the content hash covers. Output locations
/// and snapshot settings stay out so relocated reruns hash identically.
fn science_echo(cfg: &ExperimentConfig, r: &Resolved) -> String {
    format!(
        "experiment = {}\nk = {}\ntheta = {}\nT = {}\ndt0 = {}\nmesh_levels = {}\nrng_seed = {}\n",
        cfg.experiment, cfg.k, cfg.theta, cfg.t_final, r.dt0, r.levels, cfg.rng_seed,
    )
}

fn config_echo(cfg: &ExperimentConfig, r: &Resolved) -> String {
    let files = cfg
        .mesh_files
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let times = cfg
        .snapshot_times
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "{}mesh_files = {files}\noutput_dir = {}\nexport_snapshots = {}\nsnapshot_times = {times}\n",
        science_echo(cfg, r),
        cfg.output_dir.display(),
        cfg.export_snapshots,
    )
}

fn hash_mesh(hasher: &mut Sha256, mesh: &PolygonalMesh) {
    hasher.update((mesh.n_vertices() as u64).to_le_bytes());
    hasher.update((mesh.n_elements() as u64).to_le_bytes());
    for v in &mesh.vertices {
        hasher.update(v.x.to_le_bytes());
        hasher.update(v.y.to_le_bytes());
    }
    for cycle in &mesh.elements {
        for &v in cycle {
            hasher.update((v as u64).to_le_bytes());
        }
    }
}

fn build_level_mesh(
    cfg: &ExperimentConfig,
    preset: &Preset,
    r: &Resolved,
    level: usize,
) -> Result<(PolygonalMesh, usize)> {
    if let Some(path) = cfg.mesh_files.get(level) {
        let mesh = load_mesh(path).with_context(|| format!("loading {}", path.display()))?;
        let cells = mesh.n_elements();
        return Ok((mesh, cells));
    }
    let cells = r.base_cells * 4usize.pow(level as u32);
    let seed = cfg.rng_seed + level as u64;
    let mesh = match preset {
        Preset::Cd(_) => voronoi::generate_cvt(cells, LLOYD_ITERATIONS, seed)?,
        Preset::Pme(p) => voronoi::generate_cvt_disk(cells, LLOYD_ITERATIONS, seed, p.r0)?,
    };
    Ok((mesh, cells))
}

/// Snapshot times resolved to the run's span and deduplicated.
fn snapshot_schedule(cfg: &ExperimentConfig, t0: f64, t_final: f64) -> Vec<f64> {
    if !cfg.export_snapshots {
        return Vec::new();
    }
    let mut times: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .map(|&s| s.clamp(t0, t_final))
        .collect();
    if times.is_empty() {
        times = vec![t0, t_final];
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn snapshot_path(cfg: &ExperimentConfig, level: usize, idx: usize) -> PathBuf {
    cfg.output_dir.join(format!(
        "{}_k{}_L{level}_s{idx}.vtk",
        cfg.experiment, cfg.k
    ))
}

fn run_cd_level(
    cfg: &ExperimentConfig,
    p: &CdPreset,
    space: &VemSpace,
    h: f64,
    h0: f64,
    dt0: f64,
    level: usize,
) -> Result<(ErrorReport, String)> {
    let motion = (p.motion)(cfg.t_final);
    let data = p.problem_data();
    let exact = p.exact;
    let dt = dt0 * (h / h0).powf((cfg.k as f64 + 1.0) / 2.0);
    let grid = TimeGrid {
        theta: cfg.theta,
        t0: 0.0,
        t_final: cfg.t_final,
        dt,
    };

    let schedule = snapshot_schedule(cfg, grid.t0, grid.t_final);
    let mut next_snap = 0usize;
    let mut snap_err: Option<anyhow::Error> = None;
    let dt_eff = grid.dt_eff();
    let res = {
        let mut observe = |t: f64, rho: &[f64], map: &MapDofs| {
            while next_snap < schedule.len() && t >= schedule[next_snap] - 0.5 * dt_eff {
                let path = snapshot_path(cfg, level, next_snap);
                if let Err(e) = vtk::export_snapshot(space, map, rho, &path) {
                    snap_err.get_or_insert(e);
                }
                next_snap += 1;
            }
        };
        run_convection_diffusion_observed(
            space,
            &motion,
            &data,
            &|x, t| exact(x, t),
            &|x| exact(x, 0.0),
            &grid,
            &mut observe,
        )?
    };
    if let Some(e) = snap_err {
        return Err(e);
    }

    let exact_dofs = interpolate_composed(space, &res.map, |x| exact(x, res.t));
    let norms = l2_h1_errors(space, &res.map, &res.rho, &exact_dofs)?;
    let report = ErrorReport {
        h,
        dofs: space.n_dofs(),
        errors: vec![norms.l2, norms.h1],
    };
    let detail = format!("dt={:.3e} steps={}", res.dt, res.steps);
    Ok((report, detail))
}

fn run_pme_level(
    cfg: &ExperimentConfig,
    p: &PmePreset,
    space: &VemSpace,
    h: f64,
    h0: f64,
    dt0: f64,
    level: usize,
) -> Result<(ErrorReport, String)> {
    let sim = Similarity::new(p.r0);
    let dt = dt0 * (h / h0).powi(cfg.k as i32 + 1);
    let opts = PmeOptions {
        strong_bc: p.strong_bc,
        t0: sim.t0,
        t_final: sim.t0 + cfg.t_final,
        dt,
        rho_floor: 1e-12,
    };
    let map0 = pme::initial_map(space, p.strong_bc, p.r0)?;
    let rho0 = interpolate_composed(space, &map0, |x| sim.eval(x, sim.t0));

    let snapshots = cfg.export_snapshots;
    if snapshots {
        vtk::export_snapshot(space, &map0, &rho0, &snapshot_path(cfg, level, 0))?;
    }
    let res = pme::run_pme(space, map0, rho0, &opts)?;
    if snapshots {
        vtk::export_snapshot(space, &res.map, &res.rho, &snapshot_path(cfg, level, 1))?;
    }

    let exact_dofs = interpolate_composed(space, &res.map, |x| sim.eval(x, res.t));
    let l1_sol = l1_dof_error(&res.rho, &exact_dofs);
    let l1_mesh = boundary_radius_error(space, &res.map, sim.front_radius(res.t));
    let report = ErrorReport {
        h,
        dofs: space.n_dofs(),
        errors: vec![l1_sol, l1_mesh],
    };
    let detail = format!(
        "dt={:.3e} steps={} mass_drift={:.2e}",
        dt,
        res.steps,
        res.max_mass_drift / res.mass_initial.abs().max(f64::MIN_POSITIVE)
    );
    Ok((report, detail))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let preset = presets::lookup(&cfg.experiment)
        .ok_or_else(|| anyhow!("no preset named `{}`", cfg.experiment))?;
    let r = resolve(cfg, &preset);
    if let Preset::Cd(p) = &preset {
        presets::validate_forcing(p, cfg.t_final)?;
    }

    let mut hasher = Sha256::new();
    hasher.update(science_echo(cfg, &r).as_bytes());
    let echo = config_echo(cfg, &r);

    // pass 1: meshes and spaces, so the coarsest h fixes the dt scaling
    let mut spaces: Vec<Result<(VemSpace, usize)>> = Vec::new();
    for level in 0..r.levels {
        let built = build_level_mesh(cfg, &preset, &r, level).and_then(|(mesh, cells)| {
            hash_mesh(&mut hasher, &mesh);
            let space = VemSpace::new(mesh, cfg.k)?;
            Ok((space, cells))
        });
        spaces.push(built);
    }
    let digest = hasher.finalize();
    let content_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();

    let h0 = match spaces
        .iter()
        .find_map(|s| s.as_ref().ok().map(|(sp, _)| mesh_size(sp)))
    {
        Some(h) => h,
        None => {
            let e = spaces
                .into_iter()
                .find_map(Result::err)
                .unwrap_or_else(|| anyhow!("no mesh levels requested"));
            return Err(e.context("every mesh level failed to build"));
        }
    };

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;

    // pass 2: the actual runs
    println!(
        "{} k={} theta={} T={} ({} levels)",
        cfg.experiment, cfg.k, cfg.theta, cfg.t_final, r.levels
    );
    let mut reports = Vec::new();
    let mut level_lines = Vec::new();
    let mut first_err: Option<anyhow::Error> = None;
    for (level, built) in spaces.into_iter().enumerate() {
        match built {
            Err(e) => {
                level_lines.push(format!("level {level}: status=error: {e:#}"));
                println!("{}", level_lines.last().unwrap());
                if first_err.is_none() {
                    first_err = Some(e.context(format!("level {level}")));
                }
            }
            Ok((space, cells)) => {
                let h = mesh_size(&space);
                let start = Instant::now();
                let outcome = match &preset {
                    Preset::Cd(p) => run_cd_level(cfg, p, &space, h, h0, r.dt0, level),
                    Preset::Pme(p) => run_pme_level(cfg, p, &space, h, h0, r.dt0, level),
                };
                let secs = start.elapsed().as_secs_f64();
                match outcome {
                    Ok((report, detail)) => {
                        let errs = report
                            .errors
                            .iter()
                            .map(|e| format!("{e:.3e}"))
                            .collect::<Vec<_>>()
                            .join(" ");
                        level_lines.push(format!(
                            "level {level}: cells={cells} h={:.3e} dofs={} {detail} err=[{errs}] time={secs:.2}s status=ok",
                            report.h, report.dofs
                        ));
                        reports.push(report);
                    }
                    Err(e) => {
                        level_lines.push(format!(
                            "level {level}: cells={cells} h={h:.3e} time={secs:.2}s status=error: {e:#}"
                        ));
                        if first_err.is_none() {
                            first_err = Some(e.context(format!("level {level}")));
                        }
                    }
                }
                println!("{}", level_lines.last().unwrap());
            }
        }
    }

    if reports.is_empty() {
        return Err(first_err.unwrap_or_else(|| anyhow!("no level produced a result")));
    }
    let norms: &[&str] = match &preset {
        Preset::Cd(_) => &["L2", "H1"],
        Preset::Pme(_) => &["l1_sol", "l1_mesh"],
    };
    let table = EocTable::new(norms, reports)?;
    let stem = format!("{}_k{}", cfg.experiment, cfg.k);
    let csv_path = cfg.output_dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, table.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;

    let manifest_path = cfg.output_dir.join(format!("{stem}_manifest.txt"));
    let mut manifest = String::from("# vem run manifest\n");
    manifest.push_str(&echo);
    manifest.push_str(&format!("content_sha256 = {content_hash}\n"));
    manifest.push_str(&format!("table = {}\n", csv_path.display()));
    for line in &level_lines {
        manifest.push_str(line);
        manifest.push('\n');
    }
    std::fs::write(&manifest_path, &manifest)
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    Ok(RunArtifacts {
        table,
        csv_path,
        manifest_path,
        level_lines,
    })
}
