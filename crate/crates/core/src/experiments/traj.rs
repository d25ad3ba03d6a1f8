//! Trajectory integration with snapshot logging.
//!
//! Runs land exactly on the requested snapshot times: each snapshot
//! interval is covered by `ceil(Δ/dt)` equal steps, so trajectories from
//! different systems can be zipped without time interpolation (which is
//! still available for mismatched strides).

use crate::doping::DopingProfile;
use crate::drift::{dd_stable_dt, dd_step, DDState};
use crate::em::{em_constraint_residuals, em_step, EMState};
use crate::ep::{ep_potential, ep_step, EPState};
use crate::equilibrium::EquilibriumState;
use crate::error::{Result, SimError};
use crate::experiments::config::SystemKind;
use crate::field::{AxialField, ScalarField, VectorField};
use crate::grid::SobolevOrder;
use crate::pressure::PressureLaw;
use crate::relax::{constant_axial, stable_dt, RelaxationConfig};
use crate::spectral::{gradient, sobolev_norm, sobolev_norm_axial, sobolev_norm_vector};

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotDiag {
    /// `‖div E − (b − n)‖` (0 where not applicable).
    pub gauss: f64,
    /// `‖div B‖` (0 where not applicable).
    pub div_b: f64,
    /// Deviation from equilibrium `‖(n−n_e, εu, E−E_e, B−B_e)‖_s`.
    pub dev_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrajSnapshot {
    pub t: f64,
    pub n: ScalarField,
    pub u: Option<VectorField>,
    pub e: Option<VectorField>,
    pub b: Option<AxialField>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: SystemKind,
    pub epsilon: Option<f64>,
    pub snaps: Vec<TrajSnapshot>,
    pub diags: Vec<SnapshotDiag>,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snaps.iter().map(|s| s.t).collect()
    }

    pub fn max_gauss_drift(&self) -> f64 {
        self.diags.iter().fold(0.0, |m, d| m.max(d.gauss))
    }

    pub fn max_divb_drift(&self) -> f64 {
        self.diags.iter().fold(0.0, |m, d| m.max(d.div_b))
    }

    /// Largest deviation-from-equilibrium norm over the run, relative to
    /// its initial value.
    pub fn boundedness_ratio(&self) -> Option<f64> {
        let init = self.diags.first()?.dev_s;
        if init == 0.0 {
            return None;
        }
        let sup = self.diags.iter().fold(0.0f64, |m, d| m.max(d.dev_s));
        Some(sup / init)
    }
}

/// Shared context for one run.
pub struct RunSetup<'a> {
    pub eq: &'a EquilibriumState,
    pub b: &'a DopingProfile,
    pub b_field: &'a ScalarField,
    pub law: &'a PressureLaw,
    pub s: SobolevOrder,
    pub constraint_tol: f64,
    pub cfl: f64,
    /// Target step; 0 selects the stability-guarded automatic step.
    pub dt_target: f64,
}

pub fn snapshot_times(t_end: f64, snapshots: usize) -> Vec<f64> {
    let n = snapshots.max(2);
    (0..n)
        .map(|i| t_end * i as f64 / (n - 1) as f64)
        .collect()
}

fn substeps(interval: f64, dt: f64) -> (usize, f64) {
    let m = (interval / dt).ceil().max(1.0) as usize;
    (m, interval / m as f64)
}

fn em_dev(setup: &RunSetup, state: &EMState, epsilon: f64) -> f64 {
    let b_e = constant_axial(state.n.grid(), &setup.eq.b_e);
    let n_dev = sobolev_norm(&state.n.sub(&setup.eq.n_e), setup.s);
    let u_dev = sobolev_norm_vector(&state.u, setup.s) * epsilon;
    let e_dev = sobolev_norm_vector(&state.e.sub(&setup.eq.e_e), setup.s);
    let b_dev = sobolev_norm_axial(&state.b.sub(&b_e), setup.s);
    (n_dev * n_dev + u_dev * u_dev + e_dev * e_dev + b_dev * b_dev).sqrt()
}

fn ep_dev(setup: &RunSetup, state: &EPState, epsilon: f64) -> Result<f64> {
    let phi = ep_potential(&state.n, setup.b_field)?;
    let n_dev = sobolev_norm(&state.n.sub(&setup.eq.n_e), setup.s);
    let u_dev = sobolev_norm_vector(&state.u, setup.s) * epsilon;
    let f_dev = sobolev_norm_vector(&gradient(&phi).sub(&setup.eq.e_e), setup.s);
    Ok((n_dev * n_dev + u_dev * u_dev + f_dev * f_dev).sqrt())
}

pub fn run_em(
    setup: &RunSetup,
    state0: EMState,
    epsilon: f64,
    snap_times: &[f64],
) -> Result<Trajectory> {
    let grid = state0.n.grid().clone();
    let dt = if setup.dt_target > 0.0 {
        setup.dt_target
    } else {
        stable_dt(
            &grid,
            setup.law,
            state0.n.max(),
            state0.u.max_magnitude(),
            setup.cfl,
        )
    };
    let mut state = state0;
    let mut snaps = Vec::with_capacity(snap_times.len());
    let mut diags = Vec::with_capacity(snap_times.len());
    let mut steps = 0usize;
    let record =
        |state: &EMState, snaps: &mut Vec<TrajSnapshot>, diags: &mut Vec<SnapshotDiag>| {
            let (gauss, div_b) = em_constraint_residuals(state, setup.b_field);
            diags.push(SnapshotDiag {
                gauss,
                div_b,
                dev_s: em_dev(setup, state, epsilon),
            });
            snaps.push(TrajSnapshot {
                t: state.t,
                n: state.n.clone(),
                u: Some(state.u.clone()),
                e: Some(state.e.clone()),
                b: Some(state.b.clone()),
            });
        };
    record(&state, &mut snaps, &mut diags);
    for w in snap_times.windows(2) {
        let (m, dt_i) = substeps(w[1] - w[0], dt);
        let cfg = RelaxationConfig {
            epsilon,
            dt: dt_i,
            t_end: *snap_times.last().unwrap(),
            constraint_tol: setup.constraint_tol,
            cfl: setup.cfl,
        };
        for _ in 0..m {
            state = em_step(&state, &cfg, setup.b_field, setup.law)?;
            steps += 1;
        }
        record(&state, &mut snaps, &mut diags);
    }
    Ok(Trajectory {
        system: SystemKind::EulerMaxwell,
        epsilon: Some(epsilon),
        snaps,
        diags,
        steps_taken: steps,
    })
}

pub fn run_ep(
    setup: &RunSetup,
    state0: EPState,
    epsilon: f64,
    snap_times: &[f64],
) -> Result<Trajectory> {
    let grid = state0.n.grid().clone();
    let dt = if setup.dt_target > 0.0 {
        setup.dt_target
    } else {
        stable_dt(
            &grid,
            setup.law,
            state0.n.max(),
            state0.u.max_magnitude(),
            setup.cfl,
        )
    };
    let mut state = state0;
    let mut snaps = Vec::with_capacity(snap_times.len());
    let mut diags = Vec::with_capacity(snap_times.len());
    let mut steps = 0usize;
    let record = |state: &EPState,
                      snaps: &mut Vec<TrajSnapshot>,
                      diags: &mut Vec<SnapshotDiag>|
     -> Result<()> {
        // mass-consistency of the Poisson source doubles as the Gauss audit
        let gauss = (setup.b_field.integral() - state.n.integral()).abs();
        diags.push(SnapshotDiag {
            gauss,
            div_b: 0.0,
            dev_s: ep_dev(setup, state, epsilon)?,
        });
        snaps.push(TrajSnapshot {
            t: state.t,
            n: state.n.clone(),
            u: Some(state.u.clone()),
            e: None,
            b: None,
        });
        Ok(())
    };
    record(&state, &mut snaps, &mut diags)?;
    for w in snap_times.windows(2) {
        let (m, dt_i) = substeps(w[1] - w[0], dt);
        let cfg = RelaxationConfig {
            epsilon,
            dt: dt_i,
            t_end: *snap_times.last().unwrap(),
            constraint_tol: setup.constraint_tol,
            cfl: setup.cfl,
        };
        for _ in 0..m {
            state = ep_step(&state, &cfg, setup.b_field, setup.law)?;
            steps += 1;
        }
        record(&state, &mut snaps, &mut diags)?;
    }
    Ok(Trajectory {
        system: SystemKind::EulerPoisson,
        epsilon: Some(epsilon),
        snaps,
        diags,
        steps_taken: steps,
    })
}

pub fn run_dd(setup: &RunSetup, n0: ScalarField, snap_times: &[f64]) -> Result<Trajectory> {
    let dt = if setup.dt_target > 0.0 {
        setup.dt_target
    } else {
        dd_stable_dt(&n0, setup.b_field, setup.law)?
    };
    let mut state = DDState { n_bar: n0, t: 0.0 };
    let mut snaps = Vec::with_capacity(snap_times.len());
    let mut diags = Vec::with_capacity(snap_times.len());
    let mut steps = 0usize;
    let record = |state: &DDState, snaps: &mut Vec<TrajSnapshot>, diags: &mut Vec<SnapshotDiag>| {
        let gauss = (setup.b_field.integral() - state.n_bar.integral()).abs();
        diags.push(SnapshotDiag {
            gauss,
            div_b: 0.0,
            dev_s: sobolev_norm(&state.n_bar.sub(&setup.eq.n_e), setup.s),
        });
        snaps.push(TrajSnapshot {
            t: state.t,
            n: state.n_bar.clone(),
            u: None,
            e: None,
            b: None,
        });
    };
    record(&state, &mut snaps, &mut diags);
    for w in snap_times.windows(2) {
        let (m, dt_i) = substeps(w[1] - w[0], dt);
        for _ in 0..m {
            state = dd_step(&state, setup.b_field, setup.law, dt_i)?;
            steps += 1;
        }
        record(&state, &mut snaps, &mut diags);
    }
    Ok(Trajectory {
        system: SystemKind::DriftDiffusion,
        epsilon: None,
        snaps,
        diags,
        steps_taken: steps,
    })
}

/// Linear-in-time interpolation of the limit density at time `t`.
pub fn interp_density(traj: &Trajectory, t: f64) -> Result<ScalarField> {
    let snaps = &traj.snaps;
    if snaps.is_empty() {
        return Err(SimError::GridMismatch);
    }
    if t <= snaps[0].t {
        return Ok(snaps[0].n.clone());
    }
    if t >= snaps[snaps.len() - 1].t {
        return Ok(snaps[snaps.len() - 1].n.clone());
    }
    let j = snaps.partition_point(|s| s.t <= t).min(snaps.len() - 1);
    let (lo, hi) = (&snaps[j - 1], &snaps[j]);
    let w = (t - lo.t) / (hi.t - lo.t);
    Ok(lo.n.scale(1.0 - w).add(&hi.n.scale(w)))
}
