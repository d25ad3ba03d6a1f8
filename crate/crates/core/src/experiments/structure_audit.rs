//! Machine-readable structure audit: runs the symmetrizer and
//! anti-symmetry checks over the γ test matrix on the configured doping,
//! plus the Taylor-remainder scaling sweep.

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, SolveOptions};
use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::field::{ScalarField, VectorField};
use crate::pressure::PressureLaw;
use crate::spectral::gradient;
use crate::structure::{a0_min_eigenvalue, antisymmetry_defect, build_structure, taylor_remainder};

pub const GAMMA_MATRIX: [f64; 4] = [1.0, 1.4, 2.0, 3.0];

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub rows: Vec<CheckRow>,
    pub all_pass: bool,
}

fn check(rows: &mut Vec<CheckRow>, name: String, value: f64, threshold: f64, upper: bool) {
    let pass = if upper {
        value <= threshold
    } else {
        value >= threshold
    };
    rows.push(CheckRow {
        name,
        value,
        threshold,
        pass,
    });
}

/// Runs every structural check against the configured grid and doping.
pub fn run_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let grid = cfg.build_grid()?;
    let doping = cfg.build_doping()?;
    let mut rows = Vec::new();

    for &gamma in &GAMMA_MATRIX {
        let law = PressureLaw::new(cfg.law.k_const, gamma)?;
        let eq = solve_equilibrium(&doping, &law, &grid, &SolveOptions::default())?;
        let u = VectorField::zeros(&grid);
        let mats = build_structure(&eq.n_e, &u, &eq.n_e, &law, 1.0)?;

        let scale = gradient(&eq.n_e).max_magnitude().max(1.0);
        check(
            &mut rows,
            format!("antisymmetry_defect[gamma={gamma}]"),
            antisymmetry_defect(&mats),
            1e-11 * scale,
            true,
        );
        check(
            &mut rows,
            format!("a0_asymmetry[gamma={gamma}]"),
            mats.a0.max_asymmetry(),
            1e-12,
            true,
        );
        let atilde_asym = mats
            .atilde
            .iter()
            .map(|m| m.max_asymmetry())
            .fold(0.0f64, f64::max);
        check(
            &mut rows,
            format!("atilde_asymmetry[gamma={gamma}]"),
            atilde_asym,
            1e-12,
            true,
        );
        check(
            &mut rows,
            format!("a0_min_eigenvalue[gamma={gamma}]"),
            a0_min_eigenvalue(&mats),
            0.0,
            false,
        );
    }

    // Taylor-remainder scaling on the configured law; γ = 2 makes the
    // remainder identically zero (h'' = 0), which passes trivially.
    let law = cfg.build_law()?;
    let eq = solve_equilibrium(&doping, &law, &grid, &SolveOptions::default())?;
    let shape = ScalarField::from_fn(&grid, |x| {
        let mut s = 0.0;
        for (axis, &xi) in x.iter().enumerate() {
            s += ((axis + 2) as f64 * xi).cos();
        }
        s / x.len() as f64
    });
    let amps = [1e-3, 1e-2, 1e-1];
    let mut remainders = Vec::new();
    for &a in &amps {
        remainders.push(taylor_remainder(&eq.n_e, &shape.scale(a), &law)?);
    }
    if remainders.iter().all(|&r| r < 1e-14) {
        check(&mut rows, "taylor_remainder_slope".into(), 2.0, 1.8, false);
    } else {
        let slope = ((remainders[2] / remainders[0]).ln()) / ((amps[2] / amps[0]).ln());
        check(&mut rows, "taylor_remainder_slope_low".into(), slope, 1.8, false);
        check(&mut rows, "taylor_remainder_slope_high".into(), slope, 2.2, true);
    }

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(AuditReport { rows, all_pass })
}
