//! Pointwise audits of the algebraic structure the energy analysis of the
//! relaxation systems rests on: the symmetrizer, the anti-symmetry
//! cancellation at equilibrium, and the quadratic Taylor remainder of the
//! enthalpy.
//!
//! For the symmetrized unknown `U = (N, u)` the relevant matrix fields are
//!
//! ```text
//! A₀(n)   = diag(h'(n), n I₃)
//! Ãⱼ(n,u) = A₀ Aⱼ = [ h'(n) uⱼ    P'(n) eⱼᵀ  ]
//!                   [ P'(n) eⱼ    ε² n uⱼ I₃ ]
//! B       = Σⱼ ∂ⱼ Ãⱼ − 2 A₀ L̂,  with blocks
//!           B₁₁ = div(h'(n)u),            B₂₂ = div(ε² n u) I₃,
//!           B₁₂ = (∇P'(n) − 2h'(n)∇n_e)ᵀ, B₂₁ = ∇P'(n) − 2n∇h'(n_e)
//! L̂(n_e)  = [ 0          (∇n_e)ᵀ ]
//!           [ ∇h'(n_e)   0       ]
//! ```
//!
//! At `n = n_e` the identity `n h''(n) = P''(n) − h'(n)` forces
//! `B₂₁ = −B₁₂ᵀ`; the defect of that cancellation is what
//! [`antisymmetry_defect`] measures. The same operation applied at `n = n̄`
//! covers the error-system variant of the matrix.
//!
//! Matrix fields are stored dense (4×4 per grid point): they are
//! verification artifacts, not solver hot paths. All derivative entries
//! are spectral. In 1-D and 2-D the velocity is padded with zero
//! components so the 4×4 layout is uniform.

use crate::error::{Result, SimError};
use crate::field::{ScalarField, VectorField};
use crate::grid::PeriodicGrid;
use crate::pressure::PressureLaw;
use crate::spectral::{dealias_vector, divergence, gradient, l2_norm_vector, mul_dealias};

pub type Mat4 = [[f64; 4]; 4];

/// A dense 4×4 matrix per grid point.
#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: PeriodicGrid,
    data: Vec<Mat4>,
}

impl MatrixField {
    fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![[[0.0; 4]; 4]; grid.total_points()],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn at(&self, idx: usize) -> &Mat4 {
        &self.data[idx]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Largest pointwise asymmetry `max |M − Mᵀ|` over the field.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for mat in &self.data {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    m = m.max((mat[i][j] - mat[j][i]).abs());
                }
            }
        }
        m
    }
}

/// The symmetrizer, symmetrized flux matrices, zeroth-order coupling and
/// the matrix `B` entering the energy identity.
#[derive(Debug, Clone)]
pub struct StructureMatrices {
    pub a0: MatrixField,
    pub atilde: [MatrixField; 3],
    pub bmat: MatrixField,
    pub l_hat: MatrixField,
}

/// Pads a vector field to 3 components (zeroes along missing axes).
fn padded_components(v: &VectorField) -> [Vec<f64>; 3] {
    let grid = v.grid();
    let zero = vec![0.0; grid.total_points()];
    let get = |i: usize| -> Vec<f64> {
        if i < v.ncomp() {
            v.comp(i).values().to_vec()
        } else {
            zero.clone()
        }
    };
    [get(0), get(1), get(2)]
}

/// Builds the matrix fields at the state `(n, u)` around the equilibrium
/// density `n_e`. The ε-dependent entries are evaluated at the supplied
/// `epsilon`; the structural identities are ε-uniform, so audits default
/// to `ε = 1`.
pub fn build_structure(
    n: &ScalarField,
    u: &VectorField,
    n_e: &ScalarField,
    law: &PressureLaw,
    epsilon: f64,
) -> Result<StructureMatrices> {
    let grid = n.grid().clone();
    if *u.grid() != grid || *n_e.grid() != grid {
        return Err(SimError::GridMismatch);
    }
    if !(n.min() > 0.0) {
        return Err(SimError::NonPositiveDensity { min: n.min() });
    }
    if !(n_e.min() > 0.0) {
        return Err(SimError::NonPositiveDensity { min: n_e.min() });
    }

    let hp = n.map(|v| law.dh(v));
    let pp = n.map(|v| law.dp(v));
    let hp_e = n_e.map(|v| law.dh(v));
    let eps2 = epsilon * epsilon;

    let upad = padded_components(u);
    let grad_pp = padded_components(&gradient(&pp));
    let grad_ne = padded_components(&gradient(n_e));
    let grad_hpe = padded_components(&gradient(&hp_e));

    let div_hpu = divergence(&dealias_vector(&u.mul_scalar(&hp)));
    let div_nu = divergence(&VectorField::from_components(
        (0..u.ncomp()).map(|i| mul_dealias(n, u.comp(i))).collect(),
    )?);

    let total = grid.total_points();
    let mut a0 = MatrixField::zeros(&grid);
    let mut atilde = [
        MatrixField::zeros(&grid),
        MatrixField::zeros(&grid),
        MatrixField::zeros(&grid),
    ];
    let mut bmat = MatrixField::zeros(&grid);
    let mut l_hat = MatrixField::zeros(&grid);

    for p in 0..total {
        let hpv = hp.values()[p];
        let nv = n.values()[p];
        let ppv = pp.values()[p];

        let m = &mut a0.data[p];
        m[0][0] = hpv;
        for i in 1..4 {
            m[i][i] = nv;
        }

        for (j, at) in atilde.iter_mut().enumerate() {
            let uj = upad[j][p];
            let m = &mut at.data[p];
            m[0][0] = hpv * uj;
            m[0][j + 1] = ppv;
            m[j + 1][0] = ppv;
            for i in 1..4 {
                m[i][i] = eps2 * nv * uj;
            }
        }

        let m = &mut bmat.data[p];
        m[0][0] = div_hpu.values()[p];
        for i in 1..4 {
            m[i][i] = eps2 * div_nu.values()[p];
        }
        for j in 0..3 {
            // B₁₂ row and B₂₁ column
            m[0][j + 1] = grad_pp[j][p] - 2.0 * hpv * grad_ne[j][p];
            m[j + 1][0] = grad_pp[j][p] - 2.0 * nv * grad_hpe[j][p];
        }

        let m = &mut l_hat.data[p];
        for j in 0..3 {
            m[0][j + 1] = grad_ne[j][p];
            m[j + 1][0] = grad_hpe[j][p];
        }
    }

    Ok(StructureMatrices {
        a0,
        atilde,
        bmat,
        l_hat,
    })
}

/// Smallest eigenvalue of `A₀` over the grid (`min(h'(n), n)` pointwise);
/// positive on admissible states.
pub fn a0_min_eigenvalue(mats: &StructureMatrices) -> f64 {
    mats.a0
        .data
        .iter()
        .map(|m| m[0][0].min(m[1][1]))
        .fold(f64::INFINITY, f64::min)
}

/// `max_x ‖B₁₂ᵀ + B₂₁‖_F`: the anti-symmetry defect of the off-diagonal
/// blocks. Vanishes (to round-off) when the matrices are built at
/// `n = n_e`, for every γ-law.
pub fn antisymmetry_defect(mats: &StructureMatrices) -> f64 {
    let mut worst: f64 = 0.0;
    for m in &mats.bmat.data {
        let mut s = 0.0;
        for j in 0..3 {
            let d = m[0][j + 1] + m[j + 1][0];
            s += d * d;
        }
        worst = worst.max(s.sqrt());
    }
    worst
}

/// `‖(h'(n_e + N) − h'(n_e) − h''(n_e) N) ∇n_e‖_{L²}`: the enthalpy Taylor
/// remainder, quadratically small in `N`.
pub fn taylor_remainder(n_e: &ScalarField, big_n: &ScalarField, law: &PressureLaw) -> Result<f64> {
    if n_e.grid() != big_n.grid() {
        return Err(SimError::GridMismatch);
    }
    let n = n_e.add(big_n);
    if !(n.min() > 0.0) {
        return Err(SimError::NonPositiveDensity { min: n.min() });
    }
    let coeff = ScalarField::from_values(
        n_e.grid(),
        n_e.values()
            .iter()
            .zip(big_n.values())
            .map(|(&ne, &nn)| law.dh(ne + nn) - law.dh(ne) - law.d2h(ne) * nn)
            .collect::<Vec<_>>(),
    )?;
    let r = gradient(n_e).mul_scalar(&coeff);
    Ok(l2_norm_vector(&r))
}
