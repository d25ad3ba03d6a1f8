//! ε-sweep orchestration and report output.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, EquilibriumResiduals, SolveOptions};
use crate::error::{Result, SimError};
use crate::experiments::config::{ExperimentConfig, SystemKind};
use crate::experiments::functionals::{
    curl_g_integral, error_functionals, fit_rate, Functionals, RateFit,
};
use crate::experiments::traj::{run_dd, run_em, run_ep, snapshot_times, RunSetup, Trajectory};
use crate::grid::SobolevOrder;
use crate::relax::{well_prepared_em, well_prepared_ep};
use crate::snapshot::Snapshot;

/// One ε entry of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub e_t: f64,
    pub d_t: f64,
    pub sup_n: f64,
    pub sup_u: f64,
    pub sup_f: f64,
    pub sup_g: f64,
    pub drift_e: f64,
    pub drift_b: f64,
    pub wall_s: f64,
    /// Time-integral of `‖∇×𝒢‖²_{s−2}` (Euler-Maxwell only).
    pub curl_g_int: Option<f64>,
    /// Sup of the equilibrium-deviation norm over its initial value.
    pub boundedness_ratio: Option<f64>,
    /// Rows whose constraint drift exceeded the tolerance are excluded
    /// from the fits.
    pub valid: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub system: SystemKind,
    pub seed: u64,
    pub sobolev_order: usize,
    pub snapshots: usize,
    pub equilibrium_residuals: EquilibriumResiduals,
    pub equilibrium_iterations: usize,
    pub rows: Vec<SweepRow>,
    pub e_t_fit: Option<RateFit>,
    pub d_t_fit: Option<RateFit>,
    pub curl_g_fit: Option<RateFit>,
    pub fit_note: Option<String>,
}

fn annotate<T>(res: Result<T>, epsilon: f64) -> Result<T> {
    res.map_err(|e| match e {
        SimError::InvalidConfig(m) => {
            SimError::InvalidConfig(format!("epsilon {epsilon}: {m}"))
        }
        other => SimError::InvalidConfig(format!("epsilon {epsilon}: {other}")),
    })
}

fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("snapshot,t\n");
    for (i, snap) in traj.snaps.iter().enumerate() {
        index.push_str(&format!("{i:05},{:.17e}\n", snap.t));
        Snapshot::from_scalar(&snap.n).write(&dir.join(format!("snap_{i:05}_n.field")))?;
        if let Some(u) = &snap.u {
            Snapshot::from_vector(u).write(&dir.join(format!("snap_{i:05}_u.field")))?;
        }
        if let Some(e) = &snap.e {
            Snapshot::from_vector(e).write(&dir.join(format!("snap_{i:05}_e.field")))?;
        }
        if let Some(b) = &snap.b {
            let s = match b {
                crate::field::AxialField::Scalar(f) => Snapshot::from_scalar(f),
                crate::field::AxialField::Vector(v) => Snapshot::from_vector(v),
            };
            s.write(&dir.join(format!("snap_{i:05}_b.field")))?;
        }
    }
    std::fs::write(dir.join("index.csv"), index)?;
    Ok(())
}

/// Runs the configured experiment: builds the equilibrium, integrates the
/// limit system once, then integrates the relaxation system per ε
/// (concurrently, one worker per ε up to `workers`), computes the error
/// functionals and fits the rates. Deterministic for a fixed config and
/// seed, apart from wall times.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<ErrorReport> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let law = cfg.build_law()?;
    let doping = cfg.build_doping()?;
    let b_field = doping.realize(&grid)?;
    let eq = solve_equilibrium(
        &doping,
        &law,
        &grid,
        &SolveOptions {
            b_e: cfg.b_e.clone(),
            ..Default::default()
        },
    )?;
    let residuals = crate::equilibrium::equilibrium_residuals(&eq, &doping, &law)?;

    let mut report = ErrorReport {
        system: cfg.system,
        seed: cfg.seed,
        sobolev_order: cfg.sobolev_order,
        snapshots: cfg.snapshots,
        equilibrium_residuals: residuals,
        equilibrium_iterations: eq.stats.iterations,
        rows: Vec::new(),
        e_t_fit: None,
        d_t_fit: None,
        curl_g_fit: None,
        fit_note: None,
    };

    match cfg.system {
        SystemKind::EquilibriumOnly => return Ok(report),
        SystemKind::StructureAudit => {
            return Err(SimError::InvalidConfig(
                "structure_audit configs run through the structure command".into(),
            ))
        }
        _ => {}
    }

    let s = SobolevOrder::new(cfg.sobolev_order, &grid)?;
    let setup = RunSetup {
        eq: &eq,
        b: &doping,
        b_field: &b_field,
        law: &law,
        s,
        constraint_tol: cfg.constraint_tol,
        cfl: cfg.cfl,
        dt_target: cfg.dt,
    };
    let times = snapshot_times(cfg.t_end, cfg.snapshots);
    let n0 = cfg.initial_profile(&grid, &eq.n_e)?;

    let limit = run_dd(&setup, n0.clone(), &times)?;
    if let Some(dir) = out {
        if cfg.write_snapshots {
            write_trajectory(&dir.join("run_limit"), &limit)?;
        }
    }
    if cfg.system == SystemKind::DriftDiffusion {
        report.fit_note = Some("limit run only; no epsilon sweep".into());
        return Ok(report);
    }

    // the preparation budget bound is the perturbation size itself
    let delta_bound = crate::spectral::sobolev_norm(&n0.sub(&eq.n_e), s) * (1.0 + 1e-9) + 1e-30;

    let n_eps = cfg.epsilon_list.len();
    let workers = workers.max(1);
    let mut slots: Vec<Option<Result<SweepRow>>> = (0..n_eps).map(|_| None).collect();
    for chunk_start in (0..n_eps).step_by(workers) {
        let chunk_end = (chunk_start + workers).min(n_eps);
        let results: Vec<(usize, Result<SweepRow>)> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for i in chunk_start..chunk_end {
                let epsilon = cfg.epsilon_list[i];
                let setup = &setup;
                let limit = &limit;
                let n0 = &n0;
                let b_field = &b_field;
                let law = &law;
                let eq = &eq;
                let times = &times;
                handles.push((
                    i,
                    scope.spawn(move || {
                        sweep_entry(
                            cfg,
                            setup,
                            limit,
                            n0,
                            b_field,
                            law,
                            eq,
                            times,
                            epsilon,
                            delta_bound,
                            out,
                        )
                    }),
                ));
            }
            handles
                .into_iter()
                .map(|(i, h)| (i, h.join().expect("sweep worker panicked")))
                .collect()
        });
        for (i, r) in results {
            slots[i] = Some(r);
        }
    }
    for slot in slots {
        report.rows.push(slot.expect("all slots filled")?);
    }

    let valid_rows: Vec<&SweepRow> = report.rows.iter().filter(|r| r.valid).collect();
    let e_rows: Vec<(f64, f64)> = valid_rows.iter().map(|r| (r.epsilon, r.e_t)).collect();
    let d_rows: Vec<(f64, f64)> = valid_rows.iter().map(|r| (r.epsilon, r.d_t)).collect();
    match fit_rate(&e_rows, cfg.seed) {
        Ok(f) => report.e_t_fit = Some(f),
        Err(e) => report.fit_note = Some(format!("E_T fit: {e}")),
    }
    match fit_rate(&d_rows, cfg.seed) {
        Ok(f) => report.d_t_fit = Some(f),
        Err(e) => {
            let msg = format!("D_T fit: {e}");
            report.fit_note = Some(match report.fit_note.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
    }
    if cfg.system == SystemKind::EulerMaxwell {
        let c_rows: Vec<(f64, f64)> = valid_rows
            .iter()
            .filter_map(|r| r.curl_g_int.map(|c| (r.epsilon, c)))
            .collect();
        if let Ok(f) = fit_rate(&c_rows, cfg.seed) {
            report.curl_g_fit = Some(f);
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn sweep_entry(
    cfg: &ExperimentConfig,
    setup: &RunSetup,
    limit: &Trajectory,
    n0: &crate::field::ScalarField,
    b_field: &crate::field::ScalarField,
    law: &crate::pressure::PressureLaw,
    eq: &crate::equilibrium::EquilibriumState,
    times: &[f64],
    epsilon: f64,
    delta_bound: f64,
    out: Option<&Path>,
) -> Result<SweepRow> {
    let start = Instant::now();
    let run = match cfg.system {
        SystemKind::EulerMaxwell => {
            let state0 = annotate(
                well_prepared_em(eq, n0, setup.b, law, delta_bound, setup.s),
                epsilon,
            )?;
            run_em(setup, state0, epsilon, times)
        }
        SystemKind::EulerPoisson => {
            let state0 = annotate(
                well_prepared_ep(eq, n0, setup.b, law, delta_bound, setup.s),
                epsilon,
            )?;
            run_ep(setup, state0, epsilon, times)
        }
        _ => unreachable!("sweep entries exist only for relaxation systems"),
    };
    match run {
        Ok(traj) => {
            let f: Functionals =
                annotate(error_functionals(&traj, limit, b_field, law, &eq.b_e, cfg.sobolev_order), epsilon)?;
            let curl_g = if cfg.system == SystemKind::EulerMaxwell {
                Some(annotate(curl_g_integral(&traj, &eq.b_e, cfg.sobolev_order), epsilon)?)
            } else {
                None
            };
            if let Some(dir) = out {
                if cfg.write_snapshots {
                    write_trajectory(&dir.join(format!("run_eps_{epsilon}")), &traj)?;
                }
            }
            Ok(SweepRow {
                epsilon,
                e_t: f.e_t,
                d_t: f.d_t,
                sup_n: f.sup_n,
                sup_u: f.sup_u,
                sup_f: f.sup_f,
                sup_g: f.sup_g,
                drift_e: traj.max_gauss_drift(),
                drift_b: traj.max_divb_drift(),
                wall_s: start.elapsed().as_secs_f64(),
                curl_g_int: curl_g,
                boundedness_ratio: traj.boundedness_ratio(),
                valid: traj.max_gauss_drift() <= cfg.constraint_tol
                    && traj.max_divb_drift() <= cfg.constraint_tol,
                note: None,
            })
        }
        Err(SimError::ConstraintDrift {
            constraint,
            value,
            tol,
        }) => Ok(SweepRow {
            epsilon,
            e_t: f64::NAN,
            d_t: f64::NAN,
            sup_n: f64::NAN,
            sup_u: f64::NAN,
            sup_f: f64::NAN,
            sup_g: f64::NAN,
            drift_e: if constraint.starts_with("div E") { value } else { 0.0 },
            drift_b: if constraint == "div B" { value } else { 0.0 },
            wall_s: start.elapsed().as_secs_f64(),
            curl_g_int: None,
            boundedness_ratio: None,
            valid: false,
            note: Some(format!(
                "aborted: {constraint} drifted to {value:.3e} (tol {tol:.3e})"
            )),
        }),
        Err(e) => Err(SimError::InvalidConfig(format!("epsilon {epsilon}: {e}"))),
    }
}

/// Fixed, versioned CSV schema.
pub const CSV_HEADER: &str = "epsilon,E_T,D_T,sup_N,sup_U,sup_F,sup_G,drift_E,drift_B,wall_s";

pub fn report_csv(report: &ErrorReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.6}\n",
            r.epsilon,
            r.e_t,
            r.d_t,
            r.sup_n,
            r.sup_u,
            r.sup_f,
            r.sup_g,
            r.drift_e,
            r.drift_b,
            r.wall_s
        ));
    }
    out
}

pub fn rate_text(report: &ErrorReport) -> String {
    let mut out = String::new();
    match &report.e_t_fit {
        Some(f) => out.push_str(&format!(
            "E_T slope = {:.4}  (95% CI [{:.4}, {:.4}], intercept {:.4})\n",
            f.slope, f.ci_low, f.ci_high, f.intercept
        )),
        None => out.push_str("E_T slope = n/a\n"),
    }
    match &report.d_t_fit {
        Some(f) => out.push_str(&format!(
            "D_T slope = {:.4}  (95% CI [{:.4}, {:.4}], intercept {:.4})\n",
            f.slope, f.ci_low, f.ci_high, f.intercept
        )),
        None => out.push_str("D_T slope = n/a\n"),
    }
    if let Some(f) = &report.curl_g_fit {
        out.push_str(&format!(
            "curl_G slope = {:.4}  (95% CI [{:.4}, {:.4}])\n",
            f.slope, f.ci_low, f.ci_high
        ));
    }
    if let Some(note) = &report.fit_note {
        out.push_str(&format!("note: {note}\n"));
    }
    out
}

/// Writes `report.csv`, `report.json` and `rate.txt` into `dir`.
pub fn write_report(report: &ErrorReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), report_csv(report))?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    std::fs::write(dir.join("report.json"), json)?;
    std::fs::write(dir.join("rate.txt"), rate_text(report))?;
    Ok(())
}
