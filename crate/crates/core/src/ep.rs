//! The scaled Euler-Poisson system on the slow time scale.
//!
//! Unknowns `(n, u)` with the self-consistent potential recomputed from
//! the Poisson equation at every evaluation:
//!
//! ```text
//! ∂ₜn = −div(nu)
//! ∂ₜu = −(u·∇)u − [∇h(n) + ∇φ + u]/ε²
//! Δφ  = b(x) − n,   ∫φ dx = 0
//! ```
//!
//! Stepping mirrors the Euler-Maxwell module without the Maxwell substep:
//! exact velocity relaxation with frozen force on each half step around an
//! explicit SSP-RK2 transport step. Supported in 1-D through 3-D.

use crate::error::{Result, SimError};
use crate::field::{ScalarField, VectorField};
use crate::pressure::PressureLaw;
use crate::relax::{advective_dt, relax_velocity, RelaxationConfig};
use crate::spectral::{dealias, divergence, gradient, mul_dealias, poisson_solve};

/// State of the scaled Euler-Poisson system at slow time `t`.
#[derive(Debug, Clone)]
pub struct EPState {
    pub n: ScalarField,
    pub u: VectorField,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct EPTangent {
    pub dn: ScalarField,
    pub du: VectorField,
}

fn check_positive(n: &ScalarField) -> Result<()> {
    let min = n.min();
    if !(min > 0.0) {
        return Err(SimError::NonPositiveDensity { min });
    }
    Ok(())
}

/// Zero-mean potential `Δφ = b − n`. Propagates `NonZeroMeanRhs` when
/// `∫(b − n) dx` has drifted, which signals a mass-conservation failure.
pub fn ep_potential(n: &ScalarField, b_field: &ScalarField) -> Result<ScalarField> {
    poisson_solve(&b_field.sub(n))
}

fn momentum_flux(n: &ScalarField, u: &VectorField) -> VectorField {
    u.map(|c| mul_dealias(n, c))
}

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

fn stiff_force(n: &ScalarField, b_field: &ScalarField, law: &PressureLaw) -> Result<VectorField> {
    let phi = ep_potential(n, b_field)?;
    Ok(gradient(&law.enthalpy_field(n)).add(&gradient(&phi)))
}

/// Full tendency including the stiff terms.
pub fn ep_rhs(
    state: &EPState,
    b_field: &ScalarField,
    law: &PressureLaw,
    epsilon: f64,
) -> Result<EPTangent> {
    check_positive(&state.n)?;
    let w = momentum_flux(&state.n, &state.u);
    let dn = divergence(&w).scale(-1.0);
    let g = stiff_force(&state.n, b_field, law)?;
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let du = advection(&state.u)
        .scale(-1.0)
        .sub(&g.add(&state.u).scale(inv_eps2));
    Ok(EPTangent { dn, du })
}

/// Advances one `dt` (relaxation–transport–relaxation splitting).
pub fn ep_step(
    state: &EPState,
    cfg: &RelaxationConfig,
    b_field: &ScalarField,
    law: &PressureLaw,
) -> Result<EPState> {
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

    let g1 = stiff_force(&state.n, b_field, law)?;
    let u1 = relax_velocity(&state.u, &g1, half, eps);

    // explicit SSP-RK2 on (n, u)
    let w1 = momentum_flux(&state.n, &u1);
    let dn1 = divergence(&w1).scale(-1.0);
    let du1 = advection(&u1).scale(-1.0);
    let mut na = state.n.clone();
    na.axpy(cfg.dt, &dn1);
    let mut ua = u1.clone();
    ua.axpy(cfg.dt, &du1);
    let w2 = momentum_flux(&na, &ua);
    let dn2 = divergence(&w2).scale(-1.0);
    let du2 = advection(&ua).scale(-1.0);
    let mut n2 = state.n.clone();
    n2.axpy(half, &dn1);
    n2.axpy(half, &dn2);
    let mut u2 = u1.clone();
    u2.axpy(half, &du1);
    u2.axpy(half, &du2);
    check_positive(&n2)?;

    let g2 = stiff_force(&n2, b_field, law)?;
    let u3 = relax_velocity(&u2, &g2, half, eps);

    Ok(EPState {
        n: n2,
        u: u3,
        t: state.t + cfg.dt,
    })
}
