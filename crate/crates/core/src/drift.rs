//! The drift-diffusion limit system, field reconstruction and the stream
//! potential.
//!
//! The limit density solves
//!
//! ```text
//! ∂ₜn̄ = ΔP(n̄) + div(n̄ ∇φ̄),    Δφ̄ = b(x) − n̄,  ∫φ̄ dx = 0,
//! ```
//!
//! and the limit velocity and electric field are reconstructed as
//! `Ē = ∇φ̄`, `ū = −∇h(n̄) − ∇φ̄` (the momentum-balance form; it divides
//! `∇P(n̄) = −n̄Ē − n̄ū` by `n̄`).
//!
//! Time stepping is a two-stage second-order IMEX scheme: the diffusion is
//! split as `c Δn̄` (implicit, constant coefficient `c = P'(mean n̄)`,
//! solved modewise) plus the explicit correction `Δ(P(n̄) − c n̄)`; the
//! drift term stays explicit.

use crate::error::{Result, SimError};
use crate::field::{AxialField, ScalarField, VectorField};
use crate::pressure::PressureLaw;
use crate::spectral::{
    self, dealias_vector, divergence, gradient, laplacian, poisson_solve, scalar_curl, Complex64,
};

/// State of the drift-diffusion system at time `t`.
#[derive(Debug, Clone)]
pub struct DDState {
    pub n_bar: ScalarField,
    pub t: f64,
}

/// Divergence-free zero-mean potential with `ΔH̄ = ∇×(n̄ū)`, i.e. the
/// rotational part of `∂ₜĒ − n̄ū = ∇×H̄`. Out-of-plane scalar in 2-D.
#[derive(Debug, Clone)]
pub struct StreamPotential {
    pub h_bar: AxialField,
}

/// ARS(2,2,2) coefficients.
const ARS_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

fn check_positive(n: &ScalarField) -> Result<()> {
    let min = n.min();
    if !(min > 0.0) {
        return Err(SimError::NonPositiveDensity { min });
    }
    Ok(())
}

/// `(I − a Δ)⁻¹ rhs`, solved modewise.
fn helmholtz_invert(rhs: &ScalarField, a: f64) -> ScalarField {
    let grid = rhs.grid().clone();
    let mut spec = spectral::forward(rhs);
    for (idx, c) in spec.iter_mut().enumerate() {
        let mut k2 = 0.0;
        for axis in 0..grid.dim() {
            let k = grid.mode(idx, axis) as f64 * grid.k_scale();
            k2 += k * k;
        }
        *c /= Complex64::new(1.0 + a * k2, 0.0);
    }
    spectral::inverse(&grid, spec)
}

/// Explicit tendency: diffusion correction plus drift.
fn explicit_rhs(
    n: &ScalarField,
    b_field: &ScalarField,
    law: &PressureLaw,
    c: f64,
) -> Result<ScalarField> {
    let pe = law.pressure_field(n).sub(&n.scale(c));
    let phi = poisson_solve(&b_field.sub(n))?;
    let drift = divergence(&dealias_vector(&gradient(&phi).mul_scalar(n)));
    Ok(laplacian(&pe).add(&drift))
}

fn ars222_step(
    n: &ScalarField,
    b_field: &ScalarField,
    law: &PressureLaw,
    dt: f64,
) -> Result<ScalarField> {
    let gamma = ARS_GAMMA;
    let delta = 1.0 - 1.0 / (2.0 * gamma);
    let c = law.dp(n.mean());
    let a = gamma * dt * c;

    let f0 = explicit_rhs(n, b_field, law, c)?;
    let mut rhs1 = n.clone();
    rhs1.axpy(dt * gamma, &f0);
    let u1 = helmholtz_invert(&rhs1, a);

    let f1 = explicit_rhs(&u1, b_field, law, c)?;
    let mut rhs2 = n.clone();
    rhs2.axpy(dt * delta, &f0);
    rhs2.axpy(dt * (1.0 - delta), &f1);
    rhs2.axpy(dt * (1.0 - gamma) * c, &laplacian(&u1));
    Ok(helmholtz_invert(&rhs2, a))
}

/// Advances one `dt`. On loss of positivity the step is retried on halved
/// substeps, up to 8 halvings, before aborting with `NonPositiveDensity`;
/// the returned state always sits at `t + dt`. Mass is conserved to
/// round-off (every tendency is a divergence).
pub fn dd_step(
    state: &DDState,
    b_field: &ScalarField,
    law: &PressureLaw,
    dt: f64,
) -> Result<DDState> {
    check_positive(&state.n_bar)?;
    let mut halvings = 0usize;
    let mut sub = dt;
    let mut steps = 1usize;
    loop {
        let mut n = state.n_bar.clone();
        let mut ok = true;
        for _ in 0..steps {
            n = ars222_step(&n, b_field, law, sub)?;
            if !(n.min() > 0.0) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(DDState {
                n_bar: n,
                t: state.t + dt,
            });
        }
        halvings += 1;
        if halvings > 8 {
            return Err(SimError::NonPositiveDensity { min: 0.0 });
        }
        sub *= 0.5;
        steps *= 2;
    }
}

/// Stability guard for the explicit parts: the drift bound
/// `0.5/(max|∇φ̄| k_max + n_max)` plus a cap on the explicit diffusion
/// correction `Δ(P(n̄) − c n̄)`.
pub fn dd_stable_dt(n: &ScalarField, b_field: &ScalarField, law: &PressureLaw) -> Result<f64> {
    let grid = n.grid();
    let phi = poisson_solve(&b_field.sub(n))?;
    let e = gradient(&phi);
    let kmax = grid.dealias_cutoff() as f64 * grid.k_scale();
    let dt_drift = 0.5 / (e.max_magnitude() * kmax + n.max());
    let c = law.dp(n.mean());
    let dev = n
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max((law.dp(v) - c).abs()));
    let k2 = grid.dim() as f64 * kmax * kmax;
    let dt_corr = if dev * k2 > 0.0 {
        0.8 / (dev * k2)
    } else {
        f64::INFINITY
    };
    Ok(dt_drift.min(dt_corr))
}

/// Reconstructs `(φ̄, Ē, ū)` from the density: `Δφ̄ = b − n̄` with zero
/// mean, `Ē = ∇φ̄`, `ū = −∇h(n̄) − ∇φ̄`.
pub fn reconstruct_fields(
    state: &DDState,
    b_field: &ScalarField,
    law: &PressureLaw,
) -> Result<(ScalarField, VectorField, VectorField)> {
    check_positive(&state.n_bar)?;
    let phi = poisson_solve(&b_field.sub(&state.n_bar))?;
    let e = gradient(&phi);
    let u = gradient(&law.enthalpy_field(&state.n_bar))
        .scale(-1.0)
        .sub(&e);
    Ok((phi, e, u))
}

/// Solves `ΔH̄ = ∇×(n̄ū)` with `div H̄ = 0` and `∫H̄ dx = 0`.
pub fn stream_potential(state: &DDState, u_bar: &VectorField) -> Result<StreamPotential> {
    let grid = state.n_bar.grid().clone();
    if *u_bar.grid() != grid {
        return Err(SimError::GridMismatch);
    }
    let w = dealias_vector(&u_bar.mul_scalar(&state.n_bar));
    match grid.dim() {
        2 => {
            let h = poisson_solve(&scalar_curl(&w))?;
            Ok(StreamPotential {
                h_bar: AxialField::Scalar(h),
            })
        }
        3 => {
            let spec: Vec<Vec<Complex64>> = w.components().iter().map(spectral::forward).collect();
            let nyq = (grid.points_per_dim() / 2) as i64;
            let keff = |idx: usize, axis: usize| -> f64 {
                let k = grid.mode(idx, axis);
                if k == nyq {
                    0.0
                } else {
                    k as f64 * grid.k_scale()
                }
            };
            let mut out = vec![vec![Complex64::default(); grid.total_points()]; 3];
            for idx in 0..grid.total_points() {
                let k = [keff(idx, 0), keff(idx, 1), keff(idx, 2)];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    continue;
                }
                let wv = [spec[0][idx], spec[1][idx], spec[2][idx]];
                // Ĥ = −i (k × ŵ)/|k|²
                let kxw = [
                    k[1] * wv[2] - k[2] * wv[1],
                    k[2] * wv[0] - k[0] * wv[2],
                    k[0] * wv[1] - k[1] * wv[0],
                ];
                let m = Complex64::new(0.0, -1.0 / k2);
                for j in 0..3 {
                    out[j][idx] = m * kxw[j];
                }
            }
            let h = VectorField::from_components(
                out.into_iter()
                    .map(|s| spectral::inverse(&grid, s))
                    .collect(),
            )
            .expect("components share grid");
            Ok(StreamPotential {
                h_bar: AxialField::Vector(h),
            })
        }
        _ => Err(SimError::InvalidConfig(
            "stream potential needs dim 2 or 3".into(),
        )),
    }
}

/// `∇×H̄` as an in-plane vector, the rotational part of `∂ₜĒ − n̄ū`.
pub fn stream_curl(h: &StreamPotential) -> VectorField {
    spectral::curl_axial(&h.h_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doping::DopingProfile;
    use crate::grid::PeriodicGrid;
    use crate::spectral::{l2_norm, l2_norm_vector};

    #[test]
    fn constant_state_is_stationary() {
        let grid = PeriodicGrid::new(1, 32).unwrap();
        let law = PressureLaw::new(1.0, 1.4).unwrap();
        let b = DopingProfile::constant(1.3).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let state = DDState {
            n_bar: ScalarField::constant(&grid, 1.3),
            t: 0.0,
        };
        let next = dd_step(&state, &b_field, &law, 0.01).unwrap();
        assert!(next.n_bar.sub(&state.n_bar).max_norm() < 1e-13);
    }

    #[test]
    fn linearized_decay_rate_isothermal() {
        // b ≡ 1, n̄₀ = 1 + δ cos x: the k = 1 mode decays at rate
        // −(P'(1)·1 + 1) = −2; compare amplitude after τ against δe^{−2τ},
        // with a 8× finer run as the reference oracle.
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::isothermal(1.0);
        let b = DopingProfile::constant(1.0).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let delta = 1e-4;
        let n0 = ScalarField::from_fn(&grid, |x| 1.0 + delta * x[0].cos());
        let tau = 0.25;
        let run = |dt: f64| -> ScalarField {
            let steps = (tau / dt).round() as usize;
            let mut st = DDState {
                n_bar: n0.clone(),
                t: 0.0,
            };
            for _ in 0..steps {
                st = dd_step(&st, &b_field, &law, dt).unwrap();
            }
            st.n_bar
        };
        let coarse = run(1e-3);
        let amp = 2.0 * coarse
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * (grid.coord(i, 0)).cos())
            .sum::<f64>()
            / grid.total_points() as f64;
        let analytic = delta * (-2.0 * tau).exp();
        assert!(
            (amp - analytic).abs() <= 1e-3 * analytic,
            "amp {amp} vs analytic {analytic}"
        );
        let fine = run(1e-3 / 8.0);
        assert!(coarse.sub(&fine).max_norm() <= 1e-3 * delta);
    }

    #[test]
    fn mass_conserved_over_thousand_steps() {
        let grid = PeriodicGrid::new(1, 32).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let b = DopingProfile::constant(1.0).unwrap();
        let b_field = b.realize(&grid).unwrap();
        let mut st = DDState {
            n_bar: ScalarField::from_fn(&grid, |x| 1.0 + 0.05 * x[0].cos()),
            t: 0.0,
        };
        let mass0 = st.n_bar.integral();
        for _ in 0..1000 {
            st = dd_step(&st, &b_field, &law, 1e-3).unwrap();
        }
        assert!((st.n_bar.integral() - mass0).abs() <= 1e-12 * mass0);
    }

    #[test]
    fn reconstruction_identities() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        // constant state with constant doping: all derived fields vanish
        let bc = DopingProfile::constant(2.0).unwrap();
        let bcf = bc.realize(&grid).unwrap();
        let st = DDState {
            n_bar: ScalarField::constant(&grid, 2.0),
            t: 0.0,
        };
        let (phi, e, u) = reconstruct_fields(&st, &bcf, &law).unwrap();
        assert!(phi.max_norm() < 1e-13);
        assert!(e.max_magnitude() < 1e-13);
        assert!(u.max_magnitude() < 1e-13);

        // constant density with non-constant doping: ū = −∇φ̄ exactly
        let b = DopingProfile::new(
            2.0,
            vec![crate::doping::DopingMode {
                wavevector: vec![1],
                amplitude: 0.2,
                phase: 0.0,
            }],
        )
        .unwrap();
        let bf = b.realize(&grid).unwrap();
        // mean(b) must equal mean(n̄) for the Poisson solve
        let st = DDState {
            n_bar: ScalarField::constant(&grid, 2.0),
            t: 0.0,
        };
        let (_phi, e, u) = reconstruct_fields(&st, &bf, &law).unwrap();
        assert!(u.add(&e).max_magnitude() < 1e-13);

        // momentum balance residual ∇P(n̄) + n̄Ē + n̄ū ≈ 0 by construction
        let st = DDState {
            n_bar: ScalarField::from_fn(&grid, |x| 2.0 + 0.1 * x[0].cos()),
            t: 0.0,
        };
        let (_phi, e, u) = reconstruct_fields(&st, &bf, &law).unwrap();
        let gp = gradient(&law.pressure_field(&st.n_bar));
        let resid = gp
            .add(&e.mul_scalar(&st.n_bar))
            .add(&u.mul_scalar(&st.n_bar));
        let rel = l2_norm_vector(&resid) / l2_norm_vector(&gp).max(1e-300);
        assert!(rel <= 1e-10, "relative residual {rel}");
    }

    #[test]
    fn stream_potential_single_mode() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        // n̄ū = (−sin x₂, 0): ∇×(n̄ū) = cos x₂, H̄ = −cos x₂
        let st = DDState {
            n_bar: ScalarField::constant(&grid, 1.0),
            t: 0.0,
        };
        let u = VectorField::from_fn(&grid, |x, c| if c == 0 { -x[1].sin() } else { 0.0 });
        let h = stream_potential(&st, &u).unwrap();
        let expect = ScalarField::from_fn(&grid, |x| -x[1].cos());
        assert!(h.h_bar.as_scalar().sub(&expect).max_norm() < 1e-12);
    }

    #[test]
    fn stream_potential_of_curl_free_flux_vanishes() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let chi = ScalarField::from_fn(&grid, |x| (x[0] + 2.0 * x[1]).sin());
        let st = DDState {
            n_bar: ScalarField::constant(&grid, 1.0),
            t: 0.0,
        };
        let u = gradient(&chi);
        let h = stream_potential(&st, &u).unwrap();
        assert!(l2_norm(h.h_bar.as_scalar()) < 1e-12);
    }

    #[test]
    fn stream_potential_3d_divergence_free() {
        let grid = PeriodicGrid::new(3, 16).unwrap();
        let st = DDState {
            n_bar: ScalarField::from_fn(&grid, |x| 1.0 + 0.1 * x[0].cos()),
            t: 0.0,
        };
        let u = VectorField::from_fn(&grid, |x, c| match c {
            0 => x[1].sin(),
            1 => (x[2] * 2.0).cos(),
            _ => x[0].cos() * x[1].sin(),
        });
        let h = stream_potential(&st, &u).unwrap();
        let hv = h.h_bar.as_vector();
        assert!(l2_norm(&divergence(hv)) < 1e-12);
        for c in hv.components() {
            assert!(c.mean().abs() < 1e-14);
        }
        // ΔH̄ = ∇×(n̄ū) to spectral accuracy
        let w = dealias_vector(&u.mul_scalar(&st.n_bar));
        let target = spectral::curl(&w);
        let lap = VectorField::from_components(
            hv.components().iter().map(laplacian).collect(),
        )
        .unwrap();
        let rel = l2_norm_vector(&lap.sub(&target)) / l2_norm_vector(&target);
        assert!(rel <= 1e-10, "relative residual {rel}");
    }
}
