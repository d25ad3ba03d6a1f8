//! The scaled Euler-Maxwell system on the slow time scale.
//!
//! Unknowns `(n, u, E, B)` with relaxation parameter `ε ∈ (0,1]`:
//!
//! ```text
//! ∂ₜn = −div(nu)
//! ∂ₜu = −(u·∇)u − [∇h(n) + E + ε u×B + u]/ε²
//! ∂ₜE = (1/ε) ∇×B + nu          div E = b(x) − n
//! ∂ₜB = −(1/ε) ∇×E              div B = 0
//! ```
//!
//! Supported in 2-D TE reduction (`E` in-plane, `B` out-of-plane scalar,
//! `∇×B = (∂₂B, −∂₁B)`, `∇×E = ∂₁E₂ − ∂₂E₁`, `u×B = (u₂B, −u₁B)`) and in
//! full 3-D.
//!
//! One step is a Strang arrangement stiff–explicit–stiff:
//!  1. the linear Maxwell pair is rotated exactly in spectral space
//!     (modewise, norm-preserving) over `dt/2`, then the velocity
//!     relaxation is integrated exactly with the force frozen;
//!  2. transport and the current source go through one explicit SSP-RK2
//!     step of `dt` under an advective CFL;
//!  3. the stiff half repeats in mirrored order.
//!
//! The `1/ε` and `1/ε²` terms therefore impose no step restriction, and
//! both divergence constraints are preserved to round-off: the rotation
//! moves `E` only by curls, and the explicit substep feeds the same
//! dealiased product `nu` into `∂ₜE` and `−div(nu)` into `∂ₜn`.

use crate::error::{Result, SimError};
use crate::field::{AxialField, ScalarField, VectorField};
use crate::pressure::PressureLaw;
use crate::relax::{advective_dt, relax_velocity, RelaxationConfig};
use crate::spectral::{
    self, curl_axial, curl_to_axial, dealias, divergence, gradient, l2_norm,
    mul_dealias, Complex64,
};

/// State of the scaled Euler-Maxwell system at slow time `t`.
#[derive(Debug, Clone)]
pub struct EMState {
    pub n: ScalarField,
    pub u: VectorField,
    pub e: VectorField,
    pub b: AxialField,
    pub t: f64,
}

/// Tendencies of all four unknowns.
#[derive(Debug, Clone)]
pub struct EMTangent {
    pub dn: ScalarField,
    pub du: VectorField,
    pub de: VectorField,
    pub db: AxialField,
}

fn check_positive(n: &ScalarField) -> Result<()> {
    let min = n.min();
    if !(min > 0.0) {
        return Err(SimError::NonPositiveDensity { min });
    }
    Ok(())
}

/// Dealiased momentum `nu`, shared between the density and current terms.
fn momentum_flux(n: &ScalarField, u: &VectorField) -> VectorField {
    u.map(|c| mul_dealias(n, c))
}

/// Dealiased advection `(u·∇)u`.
fn advection(u: &VectorField) -> VectorField {
    let grid = u.grid();
    let comps = (0..u.ncomp())
        .map(|i| {
            let grad_i = gradient(u.comp(i));
            let mut acc = ScalarField::zeros(grid);
            for j in 0..grid.dim() {
                acc = acc.add(&u.comp(j).mul(grad_i.comp(j)));
            }
            dealias(&acc)
        })
        .collect();
    VectorField::from_components(comps).expect("components share grid")
}

/// Dealiased Lorentz product `u×B`.
pub(crate) fn lorentz(u: &VectorField, b: &AxialField) -> VectorField {
    match b {
        AxialField::Scalar(bs) => VectorField::from_components(vec![
            mul_dealias(u.comp(1), bs),
            mul_dealias(u.comp(0), bs).scale(-1.0),
        ])
        .expect("components share grid"),
        AxialField::Vector(bv) => {
            let c = |i: usize, j: usize| u.comp(i).mul(bv.comp(j));
            VectorField::from_components(vec![
                dealias(&c(1, 2).sub(&c(2, 1))),
                dealias(&c(2, 0).sub(&c(0, 2))),
                dealias(&c(0, 1).sub(&c(1, 0))),
            ])
            .expect("components share grid")
        }
    }
}

/// The stiff forcing `g = ∇h(n) + E + ε u×B` entering the velocity
/// relaxation `∂ₜu = −(u + g)/ε²`.
fn stiff_force(
    n: &ScalarField,
    e: &VectorField,
    b: &AxialField,
    u: &VectorField,
    law: &PressureLaw,
    epsilon: f64,
) -> VectorField {
    gradient(&law.enthalpy_field(n))
        .add(e)
        .add(&lorentz(u, b).scale(epsilon))
}

/// Full tendency of the system (stiff terms included), used for
/// stationarity checks and cross-validation against independent
/// discretizations.
pub fn em_rhs(state: &EMState, law: &PressureLaw, epsilon: f64) -> Result<EMTangent> {
    check_positive(&state.n)?;
    let w = momentum_flux(&state.n, &state.u);
    let dn = divergence(&w).scale(-1.0);
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let g = stiff_force(&state.n, &state.e, &state.b, &state.u, law, epsilon);
    let du = advection(&state.u)
        .scale(-1.0)
        .sub(&g.add(&state.u).scale(inv_eps2));
    let de = curl_axial(&state.b).scale(1.0 / epsilon).add(&w);
    let db = curl_to_axial(&state.e).scale(-1.0 / epsilon);
    Ok(EMTangent { dn, du, de, db })
}

/// Exact modewise integration of `∂ₜE = (1/ε)∇×B`, `∂ₜB = −(1/ε)∇×E`
/// over `tau`. An L² isometry on `(E, B)` for every `ε` and `tau`; leaves
/// `div E` and `div B` untouched.
pub fn maxwell_rotate(
    e: &VectorField,
    b: &AxialField,
    tau: f64,
    epsilon: f64,
) -> (VectorField, AxialField) {
    let grid = e.grid().clone();
    let nyq = (grid.points_per_dim() / 2) as i64;
    let keff = |idx: usize, axis: usize| -> f64 {
        let k = grid.mode(idx, axis);
        if k == nyq {
            0.0
        } else {
            k as f64 * grid.k_scale()
        }
    };
    match b {
        AxialField::Scalar(bs) => {
            let mut se: Vec<Vec<Complex64>> =
                e.components().iter().map(spectral::forward).collect();
            let mut sb = spectral::forward(bs);
            let (se0, se1) = {
                let (a, rest) = se.split_at_mut(1);
                (&mut a[0], &mut rest[0])
            };
            for idx in 0..grid.total_points() {
                let k1 = keff(idx, 0);
                let k2 = keff(idx, 1);
                let kk = k1 * k1 + k2 * k2;
                if kk == 0.0 {
                    continue;
                }
                let kappa = kk.sqrt();
                let (t1, t2) = (-k2 / kappa, k1 / kappa);
                let theta = kappa * tau / epsilon;
                let (c, s) = (theta.cos(), theta.sin());
                let et = se0[idx] * t1 + se1[idx] * t2;
                let bh = sb[idx];
                let et_new = et * c - Complex64::new(0.0, s) * bh;
                let bh_new = bh * c - Complex64::new(0.0, s) * et;
                let delta = et_new - et;
                se0[idx] += delta * t1;
                se1[idx] += delta * t2;
                sb[idx] = bh_new;
            }
            let mut it = se.into_iter();
            let e_new = VectorField::from_components(vec![
                spectral::inverse(&grid, it.next().unwrap()),
                spectral::inverse(&grid, it.next().unwrap()),
            ])
            .expect("components share grid");
            (e_new, AxialField::Scalar(spectral::inverse(&grid, sb)))
        }
        AxialField::Vector(bv) => {
            let mut se: Vec<Vec<Complex64>> =
                e.components().iter().map(spectral::forward).collect();
            let mut sb: Vec<Vec<Complex64>> =
                bv.components().iter().map(spectral::forward).collect();
            for idx in 0..grid.total_points() {
                let k = [keff(idx, 0), keff(idx, 1), keff(idx, 2)];
                let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if kk == 0.0 {
                    continue;
                }
                let kappa = kk.sqrt();
                let kh = [k[0] / kappa, k[1] / kappa, k[2] / kappa];
                let theta = kappa * tau / epsilon;
                let (c, s) = (theta.cos(), theta.sin());
                let ev = [se[0][idx], se[1][idx], se[2][idx]];
                let bvv = [sb[0][idx], sb[1][idx], sb[2][idx]];
                let dot = |v: &[Complex64; 3]| v[0] * kh[0] + v[1] * kh[1] + v[2] * kh[2];
                let cross = |v: &[Complex64; 3]| {
                    [
                        v[2] * kh[1] - v[1] * kh[2],
                        v[0] * kh[2] - v[2] * kh[0],
                        v[1] * kh[0] - v[0] * kh[1],
                    ]
                };
                let e_par = dot(&ev);
                let b_par = dot(&bvv);
                let kxb = cross(&bvv); // k̂ × B̂
                let kxe = cross(&ev); // k̂ × Ê
                let i_s = Complex64::new(0.0, s);
                for j in 0..3 {
                    let e_perp = ev[j] - kh[j] * e_par;
                    let b_perp = bvv[j] - kh[j] * b_par;
                    se[j][idx] = ev[j] + (c - 1.0) * e_perp + i_s * kxb[j];
                    sb[j][idx] = bvv[j] + (c - 1.0) * b_perp - i_s * kxe[j];
                }
            }
            let e_new = VectorField::from_components(
                se.into_iter()
                    .map(|spec| spectral::inverse(&grid, spec))
                    .collect(),
            )
            .expect("components share grid");
            let b_new = VectorField::from_components(
                sb.into_iter()
                    .map(|spec| spectral::inverse(&grid, spec))
                    .collect(),
            )
            .expect("components share grid");
            (e_new, AxialField::Vector(b_new))
        }
    }
}

/// Explicit (non-stiff) tendencies: transport of `n` and `u`, and the
/// current source of `E`. Returns the shared dealiased flux so the Gauss
/// law stays exact.
fn explicit_rhs(n: &ScalarField, u: &VectorField) -> (ScalarField, VectorField, VectorField) {
    let w = momentum_flux(n, u);
    let dn = divergence(&w).scale(-1.0);
    let du = advection(u).scale(-1.0);
    (dn, du, w)
}

/// L² residuals of the Gauss law `div E − (b − n)` and of `div B`
/// (identically zero in the TE reduction).
pub fn em_constraint_residuals(state: &EMState, b_field: &ScalarField) -> (f64, f64) {
    let gauss = l2_norm(&divergence(&state.e).sub(b_field).add(&state.n));
    let divb = match &state.b {
        AxialField::Scalar(_) => 0.0,
        AxialField::Vector(bv) => l2_norm(&divergence(bv)),
    };
    (gauss, divb)
}

/// Advances one `dt`. Errors: `CflViolation` when `dt` exceeds the
/// advective bound, `NonPositiveDensity` on loss of positivity (the
/// admissible-state contract is an abort condition, not a clipping rule),
/// `ConstraintDrift` when a divergence residual exceeds
/// `cfg.constraint_tol`.
pub fn em_step(
    state: &EMState,
    cfg: &RelaxationConfig,
    b_field: &ScalarField,
    law: &PressureLaw,
) -> Result<EMState> {
    cfg.validate()?;
    check_positive(&state.n)?;
    let grid = state.n.grid();
    let dt_max = advective_dt(grid, law, state.n.max(), state.u.max_magnitude(), cfg.cfl);
    if cfg.dt > dt_max {
        return Err(SimError::CflViolation {
            dt: cfg.dt,
            dt_max,
        });
    }
    let eps = cfg.epsilon;
    let half = 0.5 * cfg.dt;

    // stiff half: Maxwell rotation, then velocity relaxation
    let (e1, b1) = maxwell_rotate(&state.e, &state.b, half, eps);
    let g1 = stiff_force(&state.n, &e1, &b1, &state.u, law, eps);
    let u1 = relax_velocity(&state.u, &g1, half, eps);

    // explicit SSP-RK2 on (n, u, E); B is untouched here
    let (dn1, du1, w1) = explicit_rhs(&state.n, &u1);
    let mut na = state.n.clone();
    na.axpy(cfg.dt, &dn1);
    let mut ua = u1.clone();
    ua.axpy(cfg.dt, &du1);
    let (dn2, du2, w2) = explicit_rhs(&na, &ua);
    let mut n2 = state.n.clone();
    n2.axpy(half, &dn1);
    n2.axpy(half, &dn2);
    let mut u2 = u1.clone();
    u2.axpy(half, &du1);
    u2.axpy(half, &du2);
    let mut e2 = e1.clone();
    e2.axpy(half, &w1);
    e2.axpy(half, &w2);
    check_positive(&n2)?;

    // mirrored stiff half: relaxation, then rotation
    let g2 = stiff_force(&n2, &e2, &b1, &u2, law, eps);
    let u3 = relax_velocity(&u2, &g2, half, eps);
    let (e3, b3) = maxwell_rotate(&e2, &b1, half, eps);

    let out = EMState {
        n: n2,
        u: u3,
        e: e3,
        b: b3,
        t: state.t + cfg.dt,
    };
    let (gauss, divb) = em_constraint_residuals(&out, b_field);
    if gauss > cfg.constraint_tol {
        return Err(SimError::ConstraintDrift {
            constraint: "div E - (b - n)",
            value: gauss,
            tol: cfg.constraint_tol,
        });
    }
    if divb > cfg.constraint_tol {
        return Err(SimError::ConstraintDrift {
            constraint: "div B",
            value: divb,
            tol: cfg.constraint_tol,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doping::{DopingMode, DopingProfile};
    use crate::equilibrium::{solve_equilibrium, SolveOptions};
    use crate::grid::PeriodicGrid;
    use crate::relax::{constant_axial, stable_dt};
    use crate::spectral::{l2_norm_axial, l2_norm_vector};

    fn te_setup() -> (PeriodicGrid, PressureLaw, DopingProfile) {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let law = PressureLaw::isothermal(1.0);
        let b = DopingProfile::new(
            1.0,
            vec![DopingMode {
                wavevector: vec![1, 0],
                amplitude: 0.1,
                phase: 0.0,
            }],
        )
        .unwrap();
        (grid, law, b)
    }

    fn equilibrium_state(
        grid: &PeriodicGrid,
        law: &PressureLaw,
        b: &DopingProfile,
    ) -> (EMState, ScalarField) {
        let eq = solve_equilibrium(b, law, grid, &SolveOptions::default()).unwrap();
        let b_field = b.realize(grid).unwrap();
        let state = EMState {
            n: eq.n_e.clone(),
            u: VectorField::zeros(grid),
            e: eq.e_e.clone(),
            b: constant_axial(grid, &eq.b_e),
            t: 0.0,
        };
        (state, b_field)
    }

    #[test]
    fn equilibrium_tendency_vanishes() {
        let (grid, law, b) = te_setup();
        let (state, _bf) = equilibrium_state(&grid, &law, &b);
        for &eps in &[1.0, 0.1] {
            let tang = em_rhs(&state, &law, eps).unwrap();
            assert!(tang.dn.max_norm() < 1e-10);
            assert!(tang.du.max_magnitude() < 1e-10 / (eps * eps));
            assert!(tang.de.max_magnitude() < 1e-10);
            assert!(l2_norm_axial(&tang.db) < 1e-10);
        }
    }

    #[test]
    fn constant_state_tendency_vanishes() {
        let grid = PeriodicGrid::new(2, 16).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let state = EMState {
            n: ScalarField::constant(&grid, 1.5),
            u: VectorField::zeros(&grid),
            e: VectorField::zeros(&grid),
            b: AxialField::Scalar(ScalarField::constant(&grid, 0.7)),
            t: 0.0,
        };
        let tang = em_rhs(&state, &law, 0.3).unwrap();
        assert!(tang.dn.max_norm() < 1e-13);
        assert!(tang.du.max_magnitude() < 1e-12);
        assert!(tang.de.max_magnitude() < 1e-13);
        assert!(l2_norm_axial(&tang.db) < 1e-13);
    }

    #[test]
    fn equilibrium_is_fixed_point_of_step() {
        let (grid, law, b) = te_setup();
        let (state, b_field) = equilibrium_state(&grid, &law, &b);
        for &eps in &[1.0, 0.1, 0.01] {
            let dt = stable_dt(&grid, &law, state.n.max(), 0.0, 0.4);
            let cfg = RelaxationConfig::new(eps, dt, 1.0).unwrap();
            let next = em_step(&state, &cfg, &b_field, &law).unwrap();
            assert!(next.n.sub(&state.n).max_norm() < 1e-10, "eps={eps}");
            assert!(next.u.sub(&state.u).max_magnitude() < 1e-10);
            assert!(next.e.sub(&state.e).max_magnitude() < 1e-10);
            assert!(l2_norm_axial(&next.b.sub(&state.b)) < 1e-10);
        }
    }

    #[test]
    fn maxwell_rotation_is_isometry_te() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let e = VectorField::from_fn(&grid, |x, c| match c {
            0 => (x[1] * 2.0).sin() + 0.3 * x[0].cos(),
            _ => x[0].sin() * x[1].cos(),
        });
        let b = AxialField::Scalar(ScalarField::from_fn(&grid, |x| {
            (x[0] + x[1]).cos() - 0.5 * (3.0 * x[1]).sin()
        }));
        for &(eps, tau) in &[(1.0, 0.3), (0.05, 0.013), (0.4, 2.0)] {
            let (e2, b2) = maxwell_rotate(&e, &b, tau, eps);
            let before = l2_norm_vector(&e).powi(2) + l2_norm_axial(&b).powi(2);
            let after = l2_norm_vector(&e2).powi(2) + l2_norm_axial(&b2).powi(2);
            assert!(
                (before - after).abs() <= 1e-10 * before,
                "eps={eps} tau={tau}"
            );
        }
    }

    #[test]
    fn maxwell_rotation_is_isometry_3d_and_keeps_divb() {
        let grid = PeriodicGrid::new(3, 8).unwrap();
        let e = VectorField::from_fn(&grid, |x, c| match c {
            0 => x[1].sin(),
            1 => x[2].cos(),
            _ => (x[0] + x[1]).sin(),
        });
        // divergence-free B: a curl
        let psi = VectorField::from_fn(&grid, |x, c| match c {
            0 => x[2].sin(),
            1 => x[0].sin(),
            _ => x[1].cos(),
        });
        let b = AxialField::Vector(spectral::curl(&psi));
        let (e2, b2) = maxwell_rotate(&e, &b, 0.7, 0.2);
        let before = l2_norm_vector(&e).powi(2) + l2_norm_axial(&b).powi(2);
        let after = l2_norm_vector(&e2).powi(2) + l2_norm_axial(&b2).powi(2);
        assert!((before - after).abs() <= 1e-10 * before);
        if let AxialField::Vector(bv) = &b2 {
            assert!(l2_norm(&divergence(bv)) < 1e-11);
        }
        // div E preserved exactly by the rotation
        let before_div = divergence(&e);
        let after_div = divergence(&e2);
        assert!(after_div.sub(&before_div).max_norm() < 1e-12);
    }

    #[test]
    fn rotation_matches_analytic_plane_wave() {
        // TE mode k = (1, 0): E_t = E₂, B̂ behaves as a pure rotation pair.
        // Initial E = (0, cos x₁), B = 0: after time τ,
        //   E₂ = cos(ωτ) cos x₁,  B = sin(ωτ) sin x₁  with ω = 1/ε.
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let e = VectorField::from_fn(&grid, |x, c| if c == 1 { x[0].cos() } else { 0.0 });
        let b = AxialField::Scalar(ScalarField::zeros(&grid));
        let (eps, tau) = (0.25, 0.4);
        let omega = 1.0 / eps;
        let (e2, b2) = maxwell_rotate(&e, &b, tau, eps);
        let expect_e2 = ScalarField::from_fn(&grid, |x| (omega * tau).cos() * x[0].cos());
        let expect_b = ScalarField::from_fn(&grid, |x| (omega * tau).sin() * x[0].sin());
        assert!(e2.comp(1).sub(&expect_e2).max_norm() < 1e-12);
        assert!(e2.comp(0).max_norm() < 1e-12);
        assert!(b2.as_scalar().sub(&expect_b).max_norm() < 1e-12);
    }

    #[test]
    fn frozen_decay_matches_exponential() {
        // constant density equal to the doping, tiny velocity, no fields:
        // all couplings are zero to O(u²) and the step reduces to the
        // exact relaxation factor.
        let grid = PeriodicGrid::new(2, 16).unwrap();
        let law = PressureLaw::isothermal(1.0);
        let b = DopingProfile::constant(1.0).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let c = 1e-8;
        let state = EMState {
            n: ScalarField::constant(&grid, 1.0),
            u: VectorField::from_fn(&grid, |x, comp| if comp == 0 { c * x[0].sin() } else { 0.0 }),
            e: VectorField::zeros(&grid),
            b: AxialField::Scalar(ScalarField::zeros(&grid)),
            t: 0.0,
        };
        let (eps, dt) = (1.0, 0.1);
        let cfg = RelaxationConfig::new(eps, dt, 1.0).unwrap();
        let next = em_step(&state, &cfg, &b_field, &law).unwrap();
        let expect = (-dt / (eps * eps)).exp() * l2_norm_vector(&state.u);
        let got = l2_norm_vector(&next.u);
        assert!(
            (got - expect).abs() <= 1e-8 * expect,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn mass_and_constraints_hold_over_many_steps() {
        let (grid, law, b) = te_setup();
        let eq = solve_equilibrium(&b, &law, &grid, &SolveOptions::default()).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let profile = ScalarField::from_fn(&grid, |x| 1e-2 * (x[0].cos() + (2.0 * x[1]).sin()));
        let dd0 = eq.n_e.add(&profile);
        let s = crate::grid::SobolevOrder::new(3, &grid).unwrap();
        let mut state =
            crate::relax::well_prepared_em(&eq, &dd0, &b, &law, 1.0, s).unwrap();
        let mass0 = state.n.integral();
        let dt = stable_dt(&grid, &law, state.n.max(), state.u.max_magnitude(), 0.4);
        let cfg = RelaxationConfig::new(0.1, dt, 1.0).unwrap();
        let mut drift: f64 = 0.0;
        for _ in 0..100 {
            state = em_step(&state, &cfg, &b_field, &law).unwrap();
            let (g, db) = em_constraint_residuals(&state, &b_field);
            drift = drift.max(g).max(db);
        }
        assert!((state.n.integral() - mass0).abs() <= 1e-11 * mass0.abs());
        assert!(drift <= 1e-10, "constraint drift {drift}");
    }

    #[test]
    fn cfl_violation_detected() {
        let (grid, law, b) = te_setup();
        let (state, b_field) = equilibrium_state(&grid, &law, &b);
        let cfg = RelaxationConfig::new(0.5, 1.0, 1.0).unwrap();
        match em_step(&state, &cfg, &b_field, &law) {
            Err(SimError::CflViolation { .. }) => {}
            other => panic!("expected CflViolation, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_density_detected() {
        let grid = PeriodicGrid::new(2, 16).unwrap();
        let law = PressureLaw::isothermal(1.0);
        let state = EMState {
            n: ScalarField::from_fn(&grid, |x| x[0].cos()),
            u: VectorField::zeros(&grid),
            e: VectorField::zeros(&grid),
            b: AxialField::Scalar(ScalarField::zeros(&grid)),
            t: 0.0,
        };
        match em_rhs(&state, &law, 1.0) {
            Err(SimError::NonPositiveDensity { .. }) => {}
            other => panic!("expected NonPositiveDensity, got {other:?}"),
        }
    }
}
