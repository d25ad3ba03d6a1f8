//! Doping profiles: prescribed positive background densities.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::field::ScalarField;
use crate::grid::PeriodicGrid;

/// One cosine mode of a doping profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopingMode {
    /// Integer wave vector; length must match the grid dimension.
    pub wavevector: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `b(x) = b₀ + Σᵢ aᵢ cos(kᵢ·x + θᵢ)`, constrained to stay bounded away
/// from zero: the constructor requires `b₀ − Σ|aᵢ| > 0`, which bounds
/// `min_x b(x)` below by a positive constant on every grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopingProfile {
    base: f64,
    modes: Vec<DopingMode>,
}

impl DopingProfile {
    pub fn constant(base: f64) -> Result<Self> {
        Self::new(base, Vec::new())
    }

    pub fn new(base: f64, modes: Vec<DopingMode>) -> Result<Self> {
        let bound = base - modes.iter().map(|m| m.amplitude.abs()).sum::<f64>();
        if !(bound > 0.0) {
            return Err(SimError::InadmissibleDoping { min_bound: bound });
        }
        for m in &modes {
            if m.wavevector.is_empty() || m.wavevector.len() > 3 {
                return Err(SimError::InvalidConfig(
                    "doping mode wavevector must have 1..=3 entries".into(),
                ));
            }
            if m.wavevector.iter().all(|&k| k == 0) {
                return Err(SimError::InvalidConfig(
                    "doping mode with zero wavevector; fold it into the base".into(),
                ));
            }
        }
        Ok(Self { base, modes })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn modes(&self) -> &[DopingMode] {
        &self.modes
    }

    /// Guaranteed lower bound `b₁ = b₀ − Σ|aᵢ| > 0`.
    pub fn lower_bound(&self) -> f64 {
        self.base - self.modes.iter().map(|m| m.amplitude.abs()).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.modes.is_empty()
    }

    /// Sample the profile on a grid.
    pub fn realize(&self, grid: &PeriodicGrid) -> Result<ScalarField> {
        for m in &self.modes {
            if m.wavevector.len() != grid.dim() {
                return Err(SimError::InvalidConfig(format!(
                    "doping wavevector {:?} does not match grid dim {}",
                    m.wavevector,
                    grid.dim()
                )));
            }
            for &k in &m.wavevector {
                if k.unsigned_abs() as usize > grid.points_per_dim() / 2 {
                    return Err(SimError::InvalidConfig(format!(
                        "doping mode {:?} not resolved by {} points",
                        m.wavevector,
                        grid.points_per_dim()
                    )));
                }
            }
        }
        Ok(ScalarField::from_fn(grid, |x| {
            let mut b = self.base;
            for m in &self.modes {
                let mut kx = m.phase;
                for (axis, &k) in m.wavevector.iter().enumerate() {
                    kx += k as f64 * grid.k_scale() * x[axis];
                }
                b += m.amplitude * kx.cos();
            }
            b
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_sign_changing_profiles() {
        let modes = vec![DopingMode {
            wavevector: vec![1],
            amplitude: 1.5,
            phase: 0.0,
        }];
        match DopingProfile::new(1.0, modes) {
            Err(SimError::InadmissibleDoping { min_bound }) => assert!(min_bound <= 0.0),
            other => panic!("expected InadmissibleDoping, got {other:?}"),
        }
    }

    #[test]
    fn realizes_cosine_modes() {
        let g = PeriodicGrid::new(1, 32).unwrap();
        let b = DopingProfile::new(
            2.0,
            vec![DopingMode {
                wavevector: vec![3],
                amplitude: 0.25,
                phase: 0.5,
            }],
        )
        .unwrap();
        let f = b.realize(&g).unwrap();
        let expect = ScalarField::from_fn(&g, |x| 2.0 + 0.25 * (3.0 * x[0] + 0.5).cos());
        assert!(f.sub(&expect).max_norm() < 1e-14);
        assert!(f.min() >= b.lower_bound() - 1e-14);
    }

    #[test]
    fn rejects_unresolved_modes() {
        let g = PeriodicGrid::new(1, 8).unwrap();
        let b = DopingProfile::new(
            1.0,
            vec![DopingMode {
                wavevector: vec![7],
                amplitude: 0.1,
                phase: 0.0,
            }],
        )
        .unwrap();
        assert!(b.realize(&g).is_err());
    }

    #[test]
    fn zero_wavevector_rejected() {
        let modes = vec![DopingMode {
            wavevector: vec![0],
            amplitude: 0.1,
            phase: 0.0,
        }];
        assert!(DopingProfile::new(1.0, modes).is_err());
    }
}
