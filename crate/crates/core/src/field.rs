//! Real-valued scalar and vector fields sampled on a periodic grid.

use crate::error::{Result, SimError};
use crate::grid::PeriodicGrid;

/// Real samples of a scalar function, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.total_points()],
        }
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.total_points()],
        }
    }

    pub fn from_values(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(SimError::GridMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.total_points()];
        let mut x = [0.0f64; 3];
        for (idx, v) in values.iter_mut().enumerate() {
            for (axis, xi) in x.iter_mut().enumerate().take(grid.dim()) {
                *xi = grid.coord(idx, axis);
            }
            *v = f(&x[..grid.dim()]);
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete spatial mean (equals `∫f dx / |T|^d` exactly for the
    /// trigonometric interpolant).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫ f dx` by the (spectrally exact) trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }
}

/// A tuple of scalar components sharing one grid. Ordinary vector fields
/// carry `dim` components; the 2-D TE magnetic field is represented
/// separately as [`AxialField::Scalar`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(SimError::GridMismatch);
        }
        let grid = components[0].grid().clone();
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(SimError::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let components = (0..grid.dim())
            .map(|c| ScalarField::from_fn(grid, |x| f(x, c)))
            .collect();
        Self { components }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.components[0].grid()
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.ncomp(), other.ncomp());
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.ncomp(), other.ncomp());
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|f| f.scale(c))
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.ncomp(), x.ncomp());
        for (s, v) in self.components.iter_mut().zip(&x.components) {
            s.axpy(a, v);
        }
    }

    /// Pointwise Euclidean magnitude, maximised over the grid.
    pub fn max_magnitude(&self) -> f64 {
        let n = self.grid().total_points();
        let mut m: f64 = 0.0;
        for idx in 0..n {
            let mut s = 0.0;
            for c in &self.components {
                let v = c.values()[idx];
                s += v * v;
            }
            m = m.max(s);
        }
        m.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    /// Pointwise scaling by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        self.map(|c| c.mul(s))
    }
}

/// A quantity that transforms as a pseudovector: a scalar out-of-plane
/// component in 2-D (TE mode) and a full vector in 3-D. Used for the
/// magnetic field and the stream potential.
#[derive(Debug, Clone, PartialEq)]
pub enum AxialField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl AxialField {
    pub fn zeros(grid: &PeriodicGrid) -> Self {
        match grid.dim() {
            3 => AxialField::Vector(VectorField::zeros(grid)),
            _ => AxialField::Scalar(ScalarField::zeros(grid)),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        match self {
            AxialField::Scalar(f) => f.grid(),
            AxialField::Vector(v) => v.grid(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (AxialField::Scalar(a), AxialField::Scalar(b)) => AxialField::Scalar(a.add(b)),
            (AxialField::Vector(a), AxialField::Vector(b)) => AxialField::Vector(a.add(b)),
            _ => panic!("axial field kind mismatch"),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        match (self, other) {
            (AxialField::Scalar(a), AxialField::Scalar(b)) => AxialField::Scalar(a.sub(b)),
            (AxialField::Vector(a), AxialField::Vector(b)) => AxialField::Vector(a.sub(b)),
            _ => panic!("axial field kind mismatch"),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        match self {
            AxialField::Scalar(f) => AxialField::Scalar(f.scale(c)),
            AxialField::Vector(v) => AxialField::Vector(v.scale(c)),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            AxialField::Scalar(f) => f.is_finite(),
            AxialField::Vector(v) => v.is_finite(),
        }
    }

    pub fn as_scalar(&self) -> &ScalarField {
        match self {
            AxialField::Scalar(f) => f,
            AxialField::Vector(_) => panic!("expected scalar axial field"),
        }
    }

    pub fn as_vector(&self) -> &VectorField {
        match self {
            AxialField::Vector(v) => v,
            AxialField::Scalar(_) => panic!("expected vector axial field"),
        }
    }
}
