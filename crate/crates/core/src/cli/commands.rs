//! The `run`, `sweep` and `analyze` subcommands and the files they write.
//!
//! A run directory holds `config.toml` (the resolved configuration),
//! `ledger.csv` (per-step energy bookkeeping from the stepper),
//! `diagnostics.csv` (per-snapshot norms, recomputable by `analyze`) and
//! `snapshots/step-NNNNNNNN.bin`. A run stopped by blowup also holds
//! `last-good.bin`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ConfigFile;
use super::snapshot::{read_snapshot, write_state};
use crate::ac_solver::{initialize_on, run_partial_on, RunOutput, SimConfig};
use crate::diagnostics::{energy_ledger, leray_parts, EnergyLedger};
use crate::elliptic::{cache_dir_from_env, load_or_build_basis, SpectralBasis};
use crate::error::{AcnsError, Result};
use crate::fields::{divergence, lp_norm, negative_sobolev_lp_norm, staggered_lp_norm};
use crate::geometry::DomainGeometry;
use crate::sweep::run_sweep;
use crate::trajectory::Trajectory;

pub const LEDGER_SCHEMA: &str = "acns-ledger/1";
pub const DIAGNOSTICS_SCHEMA: &str = "acns-diagnostics/1";

/// Diagnostics columns that depend on the eigenbasis rank.
pub const FRACTIONAL_COLUMNS: [&str; 2] = ["p_w_minus2_4", "p_basis_capture"];

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub dry_run: bool,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

pub fn exit_code(err: &AcnsError) -> i32 {
    match err {
        AcnsError::Blowup { .. } => EXIT_BLOWUP,
        _ => EXIT_ERROR,
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn ledger_csv(ledger: &EnergyLedger) -> String {
    let mut s = String::new();
    writeln!(s, "# schema {LEDGER_SCHEMA}").unwrap();
    writeln!(s, "time,energy,dissipation_rate,dissipation,residual").unwrap();
    for i in 0..ledger.times.len() {
        writeln!(
            s,
            "{},{},{},{},{}",
            num(ledger.times[i]),
            num(ledger.energy[i]),
            num(ledger.dissipation_rate[i]),
            num(ledger.dissipation[i]),
            num(ledger.residual[i])
        )
        .unwrap();
    }
    s
}

/// Per-snapshot diagnostics; a pure function of the stored snapshots.
pub fn diagnostics_csv(traj: &Trajectory, basis: &SpectralBasis) -> Result<String> {
    let ledger = energy_ledger(traj);
    let parts = leray_parts(traj)?;
    let eps = traj.epsilon.unwrap_or(0.0);
    let rows: Vec<String> = traj
        .snapshots
        .par_iter()
        .zip(&parts)
        .enumerate()
        .map(|(i, (s, (_, q)))| {
            let p_l2 = lp_norm(&s.pressure, 2.0)?;
            Ok([
                s.step.to_string(),
                num(s.time),
                num(s.velocity.kinetic_energy()),
                num(0.5 * eps * p_l2 * p_l2),
                num(ledger.dissipation_rate[i]),
                num(ledger.dissipation[i]),
                num(ledger.residual[i]),
                num(lp_norm(&divergence(&s.velocity), 2.0)?),
                num(staggered_lp_norm(q, 2.0)?),
                num(staggered_lp_norm(q, 4.0)?),
                num(p_l2),
                num(negative_sobolev_lp_norm(&s.pressure, 2, 4.0, basis)?),
                num(basis.capture(&s.pressure)?),
            ]
            .join(","))
        })
        .collect::<Result<_>>()?;
    let mut s = String::new();
    writeln!(s, "# schema {DIAGNOSTICS_SCHEMA}; basis rank {}", basis.rank()).unwrap();
    writeln!(
        s,
        "step,time,kinetic_energy,pressure_energy,dissipation_rate,dissipation,residual,div_l2,q_l2,q_l4,p_l2,{}",
        FRACTIONAL_COLUMNS.join(",")
    )
    .unwrap();
    for r in rows {
        writeln!(s, "{r}").unwrap();
    }
    Ok(s)
}

fn snapshot_name(step: usize) -> String {
    format!("step-{step:08}.bin")
}

/// Writes a complete run directory, replacing any snapshots already there.
pub fn write_run_dir(
    dir: &Path,
    config: &ConfigFile,
    out: &RunOutput,
    basis: Option<&SpectralBasis>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let snaps = dir.join("snapshots");
    if snaps.exists() {
        fs::remove_dir_all(&snaps)?;
    }
    fs::create_dir_all(&snaps)?;
    let eps = out.trajectory.epsilon;
    fs::write(dir.join("config.toml"), config.echo())?;
    fs::write(dir.join("ledger.csv"), ledger_csv(&out.ledger))?;
    for s in &out.trajectory.snapshots {
        write_state(&snaps.join(snapshot_name(s.step)), s, eps)?;
    }
    let last = dir.join("last-good.bin");
    match &out.last_good {
        Some(s) => write_state(&last, s, eps)?,
        None if last.exists() => fs::remove_file(&last)?,
        None => {}
    }
    if let (Some(b), false) = (basis, out.trajectory.is_empty()) {
        fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&out.trajectory, b)?)?;
    }
    Ok(())
}

/// Reads the snapshots of a run directory back into a trajectory.
pub fn read_run_dir(dir: &Path) -> Result<(ConfigFile, Trajectory)> {
    let config = ConfigFile::load(&dir.join("config.toml"))?;
    let geo = Arc::new(DomainGeometry::new(config.geometry.clone())?);
    let snaps = dir.join("snapshots");
    let mut files: Vec<PathBuf> = fs::read_dir(&snaps)
        .map_err(|e| AcnsError::Unreadable {
            path: snaps.clone(),
            reason: e.to_string(),
        })?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "bin"));
    files.sort();
    if files.is_empty() {
        return Err(AcnsError::EmptySeries);
    }
    let read: Vec<_> = files
        .par_iter()
        .map(|p| read_snapshot(p, &geo))
        .collect::<Result<_>>()?;
    let epsilon = read[0].0.epsilon;
    let mut traj = Trajectory::new(epsilon, config.solver.mu, config.solver.dt);
    traj.snapshots = read.into_iter().map(|(_, s)| s).collect();
    Ok((config, traj))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| AcnsError::Precondition(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn basis_for(geo: &Arc<DomainGeometry>, rank: usize) -> Result<SpectralBasis> {
    load_or_build_basis(geo, rank, cache_dir_from_env().as_deref())
}

fn load_config(path: &Path, opts: &GlobalOptions) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

/// Stability check against the initial field, shared by `run`, `sweep` and
/// their dry runs.
fn check_plan(geo: &Arc<DomainGeometry>, sims: &[SimConfig]) -> Result<()> {
    let init = initialize_on(geo, &sims[0])?;
    let umax = init.velocity.max_abs();
    for s in sims {
        s.check_stability(geo, umax)?;
    }
    Ok(())
}

pub fn cmd_run(path: &Path, opts: &GlobalOptions) -> Result<i32> {
    let cfg = load_config(path, opts)?;
    let sim = cfg.sim_config(None)?;
    let geo = Arc::new(DomainGeometry::new(cfg.geometry.clone())?);
    check_plan(&geo, std::slice::from_ref(&sim))?;
    let dir = cfg.output.directory.clone();
    if opts.dry_run {
        println!(
            "plan: run epsilon {:e}, {} steps of {:e}, {} snapshots, basis rank {}, output {}",
            sim.epsilon,
            sim.num_steps(),
            sim.dt,
            sim.num_steps() / sim.snapshot_every + 1,
            cfg.basis_rank(),
            dir.display()
        );
        return Ok(EXIT_OK);
    }
    with_workers(opts.workers, || -> Result<i32> {
        let init = initialize_on(&geo, &sim)?;
        let (out, err) = run_partial_on(&geo, &sim, init);
        let basis = basis_for(&geo, cfg.basis_rank())?;
        write_run_dir(&dir, &cfg, &out, Some(&basis))?;
        match err {
            None => {
                println!(
                    "run complete: {} steps, E(0) {:.6e}, relative energy residual {:.4e}, output {}",
                    sim.num_steps(),
                    out.ledger.initial_energy(),
                    out.ledger.relative_final_residual(),
                    dir.display()
                );
                Ok(EXIT_OK)
            }
            Some(e) => {
                eprintln!("acns: run stopped: {e}; last good state in {}", dir.display());
                Ok(exit_code(&e))
            }
        }
    })?
}

pub fn cmd_sweep(path: &Path, opts: &GlobalOptions) -> Result<i32> {
    let cfg = load_config(path, opts)?;
    let sweep = cfg.sweep.clone().ok_or_else(|| AcnsError::Config {
        line: 0,
        message: "a [sweep] section is required".into(),
    })?;
    let sims: Vec<SimConfig> = sweep
        .epsilons
        .iter()
        .map(|e| cfg.sim_config(Some(*e)))
        .collect::<Result<_>>()?;
    if sims.len() < 4 {
        return Err(AcnsError::Precondition(format!(
            "a sweep needs at least 4 values of epsilon, got {}",
            sims.len()
        )));
    }
    let geo = Arc::new(DomainGeometry::new(cfg.geometry.clone())?);
    check_plan(&geo, &sims)?;
    let dir = cfg.output.directory.clone();
    let workers = opts.workers.or(sweep.workers);
    if opts.dry_run {
        println!(
            "plan: sweep '{}' over {} values of epsilon {:?}, {} steps of {:e} each, plus one incompressible reference; basis rank {}; workers {}; output {}",
            sweep.scenario,
            sims.len(),
            sweep.epsilons,
            sims[0].num_steps(),
            sims[0].dt,
            cfg.basis_rank(),
            workers.map_or("auto".to_string(), |w| w.to_string()),
            dir.display()
        );
        return Ok(EXIT_OK);
    }
    with_workers(workers, || -> Result<i32> {
        let basis = basis_for(&geo, cfg.basis_rank())?;
        let outcome = run_sweep(&sweep.scenario, &sims[0], &sweep.epsilons, &basis)?;
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("config.toml"), cfg.echo())?;
        let report = &outcome.report;
        fs::write(dir.join("report.csv"), report.to_csv())?;
        fs::write(dir.join("fits.csv"), report.fits_csv())?;
        fs::write(dir.join("summary.txt"), report.summary())?;
        for (i, ((out, _), eps)) in outcome.runs.iter().zip(&sweep.epsilons).enumerate() {
            let mut run_cfg = cfg.clone();
            run_cfg.solver.epsilon = Some(*eps);
            run_cfg.sweep = None;
            let sub = dir.join("runs").join(format!("eps-{i}"));
            write_run_dir(&sub, &run_cfg, out, Some(&basis))?;
        }
        let mut ref_cfg = cfg.clone();
        ref_cfg.solver.epsilon = None;
        ref_cfg.sweep = None;
        write_run_dir(&dir.join("reference"), &ref_cfg, &outcome.reference, Some(&basis))?;
        print!("{}", report.summary());
        if report.complete_rows() >= 3 {
            Ok(EXIT_OK)
        } else {
            eprintln!(
                "acns: only {} of {} rows complete",
                report.complete_rows(),
                report.rows.len()
            );
            Ok(EXIT_BLOWUP)
        }
    })?
}

/// Recomputes the diagnostics of a run directory into
/// `analysis/diagnostics.csv` and compares them with the in-run file.
pub fn cmd_analyze(dir: &Path, rank: Option<usize>, opts: &GlobalOptions) -> Result<i32> {
    let (cfg, traj) = read_run_dir(dir)?;
    let rank = rank.unwrap_or(cfg.basis_rank());
    if opts.dry_run {
        println!(
            "plan: analyze {} snapshots in {} with basis rank {rank}",
            traj.len(),
            dir.display()
        );
        return Ok(EXIT_OK);
    }
    with_workers(opts.workers, || -> Result<i32> {
        let basis = basis_for(traj.geometry()?, rank)?;
        let csv = diagnostics_csv(&traj, &basis)?;
        let out_dir = dir.join("analysis");
        fs::create_dir_all(&out_dir)?;
        fs::write(out_dir.join("diagnostics.csv"), &csv)?;
        match fs::read_to_string(dir.join("diagnostics.csv")) {
            Ok(orig) if orig == csv => println!("diagnostics identical to the in-run file"),
            Ok(orig) => {
                let cols = differing_columns(&orig, &csv);
                let fractional = cols.iter().all(|c| FRACTIONAL_COLUMNS.contains(&c.as_str()));
                println!(
                    "diagnostics differ from the in-run file in columns: {}{}",
                    cols.join(", "),
                    if fractional && rank != cfg.basis_rank() {
                        " (fractional norms; basis rank changed)"
                    } else {
                        ""
                    }
                );
            }
            Err(_) => println!("no in-run diagnostics to compare against"),
        }
        println!("wrote {}", out_dir.join("diagnostics.csv").display());
        Ok(EXIT_OK)
    })?
}

/// Names of the columns whose values differ between two diagnostics files.
pub fn differing_columns(a: &str, b: &str) -> Vec<String> {
    let body = |s: &str| -> Vec<Vec<String>> {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split(',').map(String::from).collect())
            .collect()
    };
    let (ra, rb) = (body(a), body(b));
    let Some(header) = ra.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (j, name) in header.iter().enumerate() {
        let differs = ra.len() != rb.len()
            || ra
                .iter()
                .zip(&rb)
                .skip(1)
                .any(|(x, y)| x.get(j) != y.get(j));
        if differs {
            out.push(name.clone());
        }
    }
    out
}
