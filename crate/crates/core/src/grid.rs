//! Uniform periodic grids on d-dimensional tori.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Result, SimError};

/// Cached 1-D FFT plans for one axis length.
pub(crate) struct AxisPlans {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

/// A uniform grid on the torus `[0, L)^dim` with `points_per_dim` samples
/// per axis. Wavenumbers are integers `k` with `|k| <= points_per_dim/2`,
/// scaled by `2π/L` so that the default `L = 2π` keeps them integral.
#[derive(Clone)]
pub struct PeriodicGrid {
    dim: usize,
    points_per_dim: usize,
    domain_length: f64,
    total: usize,
    plans: Arc<AxisPlans>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("dim", &self.dim)
            .field("points_per_dim", &self.points_per_dim)
            .field("domain_length", &self.domain_length)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_dim == other.points_per_dim
            && self.domain_length == other.domain_length
    }
}

impl PeriodicGrid {
    /// Grid on `[0, 2π)^dim`.
    pub fn new(dim: usize, points_per_dim: usize) -> Result<Self> {
        Self::with_length(dim, points_per_dim, 2.0 * std::f64::consts::PI)
    }

    /// Grid on `[0, length)^dim`. Lengths other than 2π only rescale the
    /// stored wavenumbers.
    pub fn with_length(dim: usize, points_per_dim: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SimError::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if points_per_dim < 8 || points_per_dim % 2 != 0 {
            return Err(SimError::InvalidGrid(format!(
                "points_per_dim {points_per_dim} must be even and >= 8"
            )));
        }
        if !points_per_dim.is_power_of_two() {
            return Err(SimError::InvalidGrid(format!(
                "points_per_dim {points_per_dim} must be a power of two"
            )));
        }
        if !(length > 0.0) {
            return Err(SimError::InvalidGrid(format!("length {length} <= 0")));
        }
        let mut planner = FftPlanner::new();
        let plans = AxisPlans {
            forward: planner.plan_fft(points_per_dim, FftDirection::Forward),
            inverse: planner.plan_fft(points_per_dim, FftDirection::Inverse),
        };
        Ok(Self {
            dim,
            points_per_dim,
            domain_length: length,
            total: points_per_dim.pow(dim as u32),
            plans: Arc::new(plans),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn total_points(&self) -> usize {
        self.total
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// Grid spacing `L/n`.
    pub fn dx(&self) -> f64 {
        self.domain_length / self.points_per_dim as f64
    }

    /// Cell volume `(L/n)^dim`, the quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Torus volume `L^dim`.
    pub fn volume(&self) -> f64 {
        self.domain_length.powi(self.dim as i32)
    }

    /// Wavenumber scale `2π/L` (1 for the default torus).
    pub fn k_scale(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.domain_length
    }

    /// Row-major stride of `axis` (last axis contiguous).
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_dim.pow((self.dim - 1 - axis) as u32)
    }

    /// Sample index along `axis` of the flat point index.
    #[inline]
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.points_per_dim
    }

    /// Physical coordinate along `axis` of the flat point index.
    #[inline]
    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        self.axis_index(idx, axis) as f64 * self.dx()
    }

    /// Signed integer mode along `axis` of a flat spectral index, in
    /// standard FFT order: `0, 1, ..., n/2, -n/2+1, ..., -1`.
    #[inline]
    pub fn mode(&self, idx: usize, axis: usize) -> i64 {
        let i = self.axis_index(idx, axis);
        let n = self.points_per_dim;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Largest mode kept by the 2/3-rule truncation.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.points_per_dim / 3) as i64
    }

    pub(crate) fn plans(&self) -> &AxisPlans {
        &self.plans
    }
}

/// Order of a spatial Sobolev norm `H^s`.
///
/// Orders above `n/4` are rejected: differentiating `s` times amplifies the
/// highest resolved modes by `k^s`, and past `n/4` the norm is dominated by
/// modes with no physical content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobolevOrder(usize);

impl SobolevOrder {
    pub fn new(s: usize, grid: &PeriodicGrid) -> Result<Self> {
        if s > grid.points_per_dim() / 4 {
            return Err(SimError::InvalidGrid(format!(
                "Sobolev order {s} exceeds anti-aliasing guard n/4 = {}",
                grid.points_per_dim() / 4
            )));
        }
        Ok(Self(s))
    }

    pub fn order(&self) -> usize {
        self.0
    }
}
