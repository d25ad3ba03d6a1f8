//! Stationary states: the semilinear elliptic problem for the equilibrium
//! density and the fields derived from it.
//!
//! The equilibrium density solves `−Δh(n_e) + n_e = b(x)` with `h` the
//! enthalpy of the pressure law. The electric field is `E_e = −∇h(n_e)`,
//! equivalently `E_e = ∇φ_e` for the zero-mean potential
//! `φ_e = −h(n_e) + const`, and the magnetic field is any constant vector
//! (zero unless configured).
//!
//! The solver is a damped Newton iteration. Each Newton system
//! `(−Δ(h'(n)·) + I) δn = b − n + Δh(n)` is solved through the substitution
//! `v = h'(n) δn`, which turns the operator into the self-adjoint positive
//! definite `−Δv + v/h'(n)`, handled by conjugate gradients with the
//! constant-coefficient inverse Helmholtz `(|k|² + 1/h'_avg)⁻¹` as spectral
//! preconditioner.

use crate::doping::DopingProfile;
use crate::error::{Result, SimError};
use crate::field::{ScalarField, VectorField};
use crate::grid::PeriodicGrid;
use crate::pressure::PressureLaw;
use crate::spectral::{
    self, curl, gradient, l2_norm, l2_norm_vector, laplacian, scalar_curl,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Smallest damping factor tried before giving up on positivity.
const LINE_SEARCH_FLOOR: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Constant magnetic field; length 1 in 2-D (out-of-plane), 3 in 3-D,
    /// empty in 1-D.
    pub b_e: Vec<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            b_e: Vec::new(),
        }
    }
}

/// Newton iteration record.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_residual: f64,
    /// Relative elliptic residual after every accepted step (index 0 is the
    /// initial guess).
    pub residual_history: Vec<f64>,
}

/// A converged stationary state.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub n_e: ScalarField,
    /// Zero-mean potential with `E_e = ∇φ_e`.
    pub phi_e: ScalarField,
    pub e_e: VectorField,
    /// Constant magnetic field (see [`SolveOptions::b_e`]).
    pub b_e: Vec<f64>,
    pub law: PressureLaw,
    pub stats: SolveStats,
}

/// The four pointwise residuals of the stationary system, as L² norms:
/// elliptic `−Δh(n_e) + n_e − b`, force balance `∇P(n_e) + n_e E_e`,
/// Gauss law `div E_e − (b − n_e)`, and `curl E_e`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EquilibriumResiduals {
    pub elliptic: f64,
    pub force: f64,
    pub gauss: f64,
    pub curl: f64,
}

impl EquilibriumResiduals {
    pub fn max(&self) -> f64 {
        self.elliptic.max(self.force).max(self.gauss).max(self.curl)
    }
}

fn elliptic_residual(n: &ScalarField, b: &ScalarField, law: &PressureLaw) -> ScalarField {
    let h = law.enthalpy_field(n);
    laplacian(&h).scale(-1.0).add(n).sub(b)
}

fn dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum()
}

/// Preconditioned CG for `(−Δ + 1/h'(n)) v = rhs`.
fn helmholtz_cg(rhs: &ScalarField, inv_hp: &ScalarField, hp_avg: f64) -> Result<ScalarField> {
    let grid = rhs.grid().clone();
    let apply = |v: &ScalarField| laplacian(v).scale(-1.0).add(&v.mul(inv_hp));
    let precond = |r: &ScalarField| {
        let mut spec = spectral::forward(r);
        let c0 = 1.0 / hp_avg;
        for (idx, c) in spec.iter_mut().enumerate() {
            let mut k2 = 0.0;
            for axis in 0..grid.dim() {
                let k = grid.mode(idx, axis) as f64 * grid.k_scale();
                k2 += k * k;
            }
            *c /= k2 + c0;
        }
        spectral::inverse(&grid, spec)
    };

    let mut x = ScalarField::zeros(&grid);
    let mut r = rhs.clone();
    let rhs_norm = dot(&r, &r).sqrt();
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..200 {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        if dot(&r, &r).sqrt() <= 1e-12 * rhs_norm {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.add(&p.scale(beta));
    }
    // CG on an SPD Helmholtz operator stalls only for wildly varying h'(n)
    Err(SimError::NoConvergence {
        iterations: 200,
        residual: dot(&r, &r).sqrt() / rhs_norm,
    })
}

/// Solves `−Δh(n_e) + n_e = b` on `grid` to the relative tolerance
/// `‖residual‖ ≤ tol·‖b‖`, then assembles the derived fields.
///
/// The initial guess is `n⁰ = b` (exact for constant doping). Each Newton
/// step is damped by halving until the residual decreases and the iterate
/// stays positive; the iterate mean is pinned to the doping mean, which the
/// converged solution satisfies exactly (`∫n_e = ∫b`).
pub fn solve_equilibrium(
    b: &DopingProfile,
    law: &PressureLaw,
    grid: &PeriodicGrid,
    opts: &SolveOptions,
) -> Result<EquilibriumState> {
    if !(opts.tol > 0.0) {
        return Err(SimError::InvalidConfig("equilibrium tol must be > 0".into()));
    }
    let expected_be = match grid.dim() {
        2 => 1,
        3 => 3,
        _ => 0,
    };
    if !opts.b_e.is_empty() && opts.b_e.len() != expected_be {
        return Err(SimError::InvalidConfig(format!(
            "B_e needs {} components in {}-D",
            expected_be,
            grid.dim()
        )));
    }

    let b_field = b.realize(grid)?;
    let b_norm = l2_norm(&b_field);
    let b_mean = b_field.mean();

    let mut n = b_field.clone();
    let mut res = elliptic_residual(&n, &b_field, law);
    let mut res_norm = l2_norm(&res);
    let mut history = vec![res_norm / b_norm];

    let mut iterations = 0;
    while res_norm > opts.tol * b_norm {
        if iterations >= opts.max_iter {
            return Err(SimError::NoConvergence {
                iterations,
                residual: res_norm / b_norm,
            });
        }
        iterations += 1;

        let hp = n.map(|v| law.dh(v));
        let hp_min = hp.min();
        if !(hp_min > 0.0) {
            return Err(SimError::NegativeDensityIterate);
        }
        let inv_hp = hp.map(|v| 1.0 / v);
        let v = helmholtz_cg(&res.scale(-1.0), &inv_hp, hp.mean())?;
        let delta = v.mul(&inv_hp);

        let mut accepted = None;
        let mut positive_seen = false;
        let mut alpha = 1.0;
        while alpha >= LINE_SEARCH_FLOOR {
            let mut trial = n.clone();
            trial.axpy(alpha, &delta);
            // pin the mean so ∫n = ∫b holds exactly along the iteration
            let shift = b_mean - trial.mean();
            let trial = trial.map(|v| v + shift);
            if trial.min() > 0.0 {
                positive_seen = true;
                let trial_res = elliptic_residual(&trial, &b_field, law);
                let trial_norm = l2_norm(&trial_res);
                if trial_norm < res_norm {
                    accepted = Some((trial, trial_res, trial_norm));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, trial_res, trial_norm)) => {
                n = trial;
                res = trial_res;
                res_norm = trial_norm;
                history.push(res_norm / b_norm);
            }
            None if !positive_seen => return Err(SimError::NegativeDensityIterate),
            None => {
                return Err(SimError::NoConvergence {
                    iterations,
                    residual: res_norm / b_norm,
                })
            }
        }
    }

    let h = law.enthalpy_field(&n);
    let h_mean = h.mean();
    let phi_e = h.map(|v| -(v - h_mean));
    let e_e = gradient(&phi_e);
    let b_e = if opts.b_e.is_empty() {
        vec![0.0; expected_be]
    } else {
        opts.b_e.clone()
    };

    Ok(EquilibriumState {
        n_e: n,
        phi_e,
        e_e,
        b_e,
        law: *law,
        stats: SolveStats {
            iterations,
            final_residual: res_norm / b_norm,
            residual_history: history,
        },
    })
}

/// L² residuals of the full stationary system for a candidate state.
pub fn equilibrium_residuals(
    eq: &EquilibriumState,
    b: &DopingProfile,
    law: &PressureLaw,
) -> Result<EquilibriumResiduals> {
    let grid = eq.n_e.grid();
    if eq.phi_e.grid() != grid || eq.e_e.grid() != grid {
        return Err(SimError::GridMismatch);
    }
    let b_field = b.realize(grid)?;

    let elliptic = l2_norm(&elliptic_residual(&eq.n_e, &b_field, law));

    let p = law.pressure_field(&eq.n_e);
    let force_field = gradient(&p).add(&eq.e_e.mul_scalar(&eq.n_e));
    let force = l2_norm_vector(&force_field);

    let gauss_field = spectral::divergence(&eq.e_e)
        .sub(&b_field)
        .add(&eq.n_e);
    let gauss = l2_norm(&gauss_field);

    let curl_norm = match grid.dim() {
        1 => 0.0,
        2 => l2_norm(&scalar_curl(&eq.e_e)),
        3 => l2_norm_vector(&curl(&eq.e_e)),
        _ => unreachable!(),
    };

    Ok(EquilibriumResiduals {
        elliptic,
        force,
        gauss,
        curl: curl_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doping::DopingMode;
    use crate::spectral::poisson_solve;

    fn perturbed_doping(base: f64, amp: f64, k: i64) -> DopingProfile {
        DopingProfile::new(
            base,
            vec![DopingMode {
                wavevector: vec![k],
                amplitude: amp,
                phase: 0.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn constant_doping_is_exact() {
        let grid = PeriodicGrid::new(1, 32).unwrap();
        let law = PressureLaw::new(1.0, 1.4).unwrap();
        let b = DopingProfile::constant(2.0).unwrap();
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let two = ScalarField::constant(&grid, 2.0);
        assert!(eq.n_e.sub(&two).max_norm() < 1e-12);
        assert!(eq.phi_e.max_norm() < 1e-12);
        assert!(eq.e_e.max_magnitude() < 1e-12);
        let r = equilibrium_residuals(&eq, &b, &law).unwrap();
        assert!(r.max() < 1e-12);
    }

    #[test]
    fn matches_linearized_solution_for_small_doping() {
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let law = PressureLaw::isothermal(1.0);
        let delta = 1e-3;
        let b = perturbed_doping(1.0, delta, 1);
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        // linearization: (-h'(1) Δ + 1) ñ = δ cos x → ñ = δ/2 cos x
        let linear = ScalarField::from_fn(&grid, |x| 1.0 + 0.5 * delta * x[0].cos());
        let rel = l2_norm(&eq.n_e.sub(&linear)) / l2_norm(&linear);
        assert!(rel <= 1e-4, "relative error {rel}");
    }

    #[test]
    fn postcondition_residual_gamma_two() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let b = perturbed_doping(1.0, 0.1, 1);
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let res = l2_norm(&elliptic_residual(&eq.n_e, &b_field, &law));
        assert!(res <= DEFAULT_TOL * l2_norm(&b_field));
        assert!(eq.n_e.min() > 0.0);
    }

    #[test]
    fn hand_perturbed_state_has_visible_residual() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let b = perturbed_doping(1.0, 0.1, 1);
        let mut eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let bump = ScalarField::from_fn(&grid, |x| 0.01 * x[0].cos());
        eq.n_e = eq.n_e.add(&bump);
        let r = equilibrium_residuals(&eq, &b, &law).unwrap();
        assert!(r.elliptic >= 1e-3, "elliptic residual {}", r.elliptic);
    }

    #[test]
    fn monotone_in_constant_load() {
        let grid = PeriodicGrid::new(1, 32).unwrap();
        let law = PressureLaw::new(0.5, 1.4).unwrap();
        let lo = solve_equilibrium(
            &DopingProfile::constant(1.5).unwrap(),
            &law,
            &grid,
            &SolveOptions::default(),
        )
        .unwrap();
        let hi = solve_equilibrium(
            &DopingProfile::constant(2.0).unwrap(),
            &law,
            &grid,
            &SolveOptions::default(),
        )
        .unwrap();
        for (a, b) in lo.n_e.values().iter().zip(hi.n_e.values()) {
            assert!(a < b);
        }
    }

    #[test]
    fn mean_identity() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 3.0).unwrap();
        let b = perturbed_doping(2.0, 0.2, 2);
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let b_field = b.realize(&grid).unwrap();
        assert!((eq.n_e.integral() - b_field.integral()).abs() < 1e-12 * b_field.integral());
    }

    #[test]
    fn newton_residuals_decrease_monotonically() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 1.4).unwrap();
        let b = perturbed_doping(1.0, 0.1, 1); // δ = 0.1 b₀
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let h = &eq.stats.residual_history;
        assert!(h.len() >= 2);
        for w in h[1..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn electric_field_consistent_with_poisson_gauge() {
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let b = perturbed_doping(1.0, 0.1, 1);
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        // Δφ = b − n_e and E = ∇φ must reproduce E_e = −∇h(n_e) to O(tol)
        let b_field = b.realize(&grid).unwrap();
        let phi = poisson_solve(&b_field.sub(&eq.n_e)).unwrap();
        let e_from_phi = gradient(&phi);
        let diff = l2_norm_vector(&e_from_phi.sub(&eq.e_e));
        assert!(diff <= 10.0 * DEFAULT_TOL * l2_norm(&b_field));
    }

    #[test]
    fn no_convergence_error_when_starved() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let b = perturbed_doping(1.0, 0.3, 1);
        let opts = SolveOptions {
            max_iter: 0,
            ..Default::default()
        };
        match solve_equilibrium(&b, &law, &grid, &opts) {
            Err(SimError::NoConvergence { .. }) => {}
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
