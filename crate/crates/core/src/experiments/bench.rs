//! Wall-clock benchmarks: relaxation-solver versus limit-solver cost per
//! simulated time unit, and the ε-spread of the relaxation cost at fixed
//! step (the stiff terms are integrated exactly, so the cost should be
//! ε-independent).

use std::time::Instant;

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, SolveOptions};
use crate::error::{Result, SimError};
use crate::experiments::config::{ExperimentConfig, SystemKind};
use crate::experiments::traj::{run_dd, run_em, run_ep, snapshot_times, RunSetup};
use crate::grid::SobolevOrder;
use crate::relax::{stable_dt, well_prepared_em, well_prepared_ep};

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub system: String,
    pub epsilon: Option<f64>,
    /// Median over repetitions of wall seconds per simulated time unit.
    pub wall_per_unit_time: f64,
    pub steps: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `(max − min)/min` of the relaxation cost across the ε list at the
    /// shared fixed step.
    pub relax_cost_spread: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

pub fn benchmark(cfg: &ExperimentConfig) -> Result<BenchReport> {
    cfg.validate()?;
    if matches!(
        cfg.system,
        SystemKind::EquilibriumOnly | SystemKind::StructureAudit
    ) {
        return Err(SimError::InvalidConfig(
            "benchmark needs a dynamical system config".into(),
        ));
    }
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
    let s = SobolevOrder::new(cfg.sobolev_order, &grid)?;
    let n0 = cfg.initial_profile(&grid, &eq.n_e)?;
    let delta_bound = crate::spectral::sobolev_norm(&n0.sub(&eq.n_e), s) * (1.0 + 1e-9) + 1e-30;

    let t_bench = cfg.t_end.min(0.1);
    let times = snapshot_times(t_bench, 2);
    let reps = 3;

    // fixed, ε-independent step shared by every relaxation run
    let dt = if cfg.dt > 0.0 {
        cfg.dt
    } else {
        stable_dt(&grid, &law, n0.max(), 1.0, cfg.cfl)
    };
    let setup = RunSetup {
        eq: &eq,
        b: &doping,
        b_field: &b_field,
        law: &law,
        s,
        constraint_tol: cfg.constraint_tol,
        cfl: cfg.cfl,
        dt_target: dt,
    };

    let mut rows = Vec::new();
    for &epsilon in &cfg.epsilon_list {
        let mut walls = Vec::with_capacity(reps);
        let mut steps = 0;
        for _ in 0..reps {
            let start = Instant::now();
            let traj = match cfg.system {
                SystemKind::EulerMaxwell => {
                    let st = well_prepared_em(&eq, &n0, &doping, &law, delta_bound, s)?;
                    run_em(&setup, st, epsilon, &times)?
                }
                _ => {
                    let st = well_prepared_ep(&eq, &n0, &doping, &law, delta_bound, s)?;
                    run_ep(&setup, st, epsilon, &times)?
                }
            };
            steps = traj.steps_taken;
            walls.push(start.elapsed().as_secs_f64() / t_bench);
        }
        rows.push(BenchRow {
            system: match cfg.system {
                SystemKind::EulerMaxwell => "euler_maxwell".into(),
                _ => "euler_poisson".into(),
            },
            epsilon: Some(epsilon),
            wall_per_unit_time: median(walls),
            steps,
            reps,
        });
    }

    // the limit solver has no ε: a single row
    let mut walls = Vec::with_capacity(reps);
    let mut steps = 0;
    for _ in 0..reps {
        let start = Instant::now();
        let traj = run_dd(&setup, n0.clone(), &times)?;
        steps = traj.steps_taken;
        walls.push(start.elapsed().as_secs_f64() / t_bench);
    }
    rows.push(BenchRow {
        system: "drift_diffusion".into(),
        epsilon: None,
        wall_per_unit_time: median(walls),
        steps,
        reps,
    });

    let relax_costs: Vec<f64> = rows
        .iter()
        .filter(|r| r.epsilon.is_some())
        .map(|r| r.wall_per_unit_time)
        .collect();
    let relax_cost_spread = if relax_costs.len() >= 2 {
        let max = relax_costs.iter().cloned().fold(f64::MIN, f64::max);
        let min = relax_costs.iter().cloned().fold(f64::MAX, f64::min);
        Some((max - min) / min)
    } else {
        None
    };

    Ok(BenchReport {
        rows,
        relax_cost_spread,
    })
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("system,epsilon,wall_s_per_unit_time,steps,reps\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{:.6},{},{}\n",
            r.system,
            r.epsilon.map(|e| e.to_string()).unwrap_or_default(),
            r.wall_per_unit_time,
            r.steps,
            r.reps
        ));
    }
    out
}
