//! γ-law pressure closures and the associated enthalpy.
//!
//! `P(n) = K n^γ` with `K > 0`, `γ ≥ 1`. The enthalpy `h` is the primitive
//! of `P'(n)/n`:  `h(n) = Kγ/(γ−1) n^(γ−1)` for `γ > 1` and `h(n) = K ln n`
//! in the isothermal case `γ = 1`, so that `n ∇h(n) = ∇P(n)` pointwise.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::field::ScalarField;
use crate::spectral::dealias;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    /// Pressure constant `K > 0`.
    pub k_const: f64,
    /// Adiabatic exponent `γ ≥ 1`.
    pub gamma: f64,
}

impl PressureLaw {
    pub fn new(k_const: f64, gamma: f64) -> Result<Self> {
        if !(k_const > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "pressure constant K = {k_const} must be positive"
            )));
        }
        if !(gamma >= 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "gamma = {gamma} must be >= 1"
            )));
        }
        Ok(Self { k_const, gamma })
    }

    /// Isothermal law `P(n) = K n`.
    pub fn isothermal(k_const: f64) -> Self {
        Self::new(k_const, 1.0).expect("K > 0")
    }

    pub fn is_isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn pressure(&self, n: f64) -> f64 {
        self.k_const * n.powf(self.gamma)
    }

    /// `P'(n) = K γ n^(γ−1)`; the squared sound speed.
    pub fn dp(&self, n: f64) -> f64 {
        self.k_const * self.gamma * n.powf(self.gamma - 1.0)
    }

    /// `P''(n)`.
    pub fn d2p(&self, n: f64) -> f64 {
        self.k_const * self.gamma * (self.gamma - 1.0) * n.powf(self.gamma - 2.0)
    }

    pub fn enthalpy(&self, n: f64) -> f64 {
        if self.is_isothermal() {
            self.k_const * n.ln()
        } else {
            self.k_const * self.gamma / (self.gamma - 1.0) * n.powf(self.gamma - 1.0)
        }
    }

    /// `h'(n) = P'(n)/n = K γ n^(γ−2)`.
    pub fn dh(&self, n: f64) -> f64 {
        self.k_const * self.gamma * n.powf(self.gamma - 2.0)
    }

    /// `h''(n) = K γ (γ−2) n^(γ−3)`.
    pub fn d2h(&self, n: f64) -> f64 {
        self.k_const * self.gamma * (self.gamma - 2.0) * n.powf(self.gamma - 3.0)
    }

    /// Sampled enthalpy with the 2/3-rule applied to the composition, the
    /// form consumed by every force evaluation (gradients of this field
    /// cancel exactly against equilibrium electric fields built the same
    /// way).
    pub fn enthalpy_field(&self, n: &ScalarField) -> ScalarField {
        dealias(&n.map(|v| self.enthalpy(v)))
    }

    pub fn pressure_field(&self, n: &ScalarField) -> ScalarField {
        dealias(&n.map(|v| self.pressure(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(PressureLaw::new(0.0, 1.4).is_err());
        assert!(PressureLaw::new(1.0, 0.9).is_err());
    }

    #[test]
    fn enthalpy_derivative_identity() {
        // h'(n) = P'(n)/n for every law in the test matrix
        for &gamma in &[1.0, 1.4, 2.0, 3.0] {
            let law = PressureLaw::new(0.7, gamma).unwrap();
            for &n in &[0.5, 1.0, 2.3] {
                assert!((law.dh(n) - law.dp(n) / n).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn isothermal_enthalpy_is_log() {
        let law = PressureLaw::isothermal(2.0);
        assert!((law.enthalpy(3.0) - 2.0 * 3.0f64.ln()).abs() < 1e-15);
        assert!((law.dh(3.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_consistency() {
        let law = PressureLaw::new(1.3, 2.5).unwrap();
        let n = 1.7;
        let eps = 1e-6;
        let dp_fd = (law.pressure(n + eps) - law.pressure(n - eps)) / (2.0 * eps);
        assert!((dp_fd - law.dp(n)).abs() < 1e-7);
        let dh_fd = (law.enthalpy(n + eps) - law.enthalpy(n - eps)) / (2.0 * eps);
        assert!((dh_fd - law.dh(n)).abs() < 1e-7);
        let d2h_fd = (law.dh(n + eps) - law.dh(n - eps)) / (2.0 * eps);
        assert!((d2h_fd - law.d2h(n)).abs() < 1e-6);
    }
}
