//! Pseudo-spectral solvers for the scaled Euler-Maxwell and Euler-Poisson
//! systems on periodic tori, their drift-diffusion relaxation limit, and
//! the non-constant equilibrium problem, with diagnostics for measuring
//! convergence rates in the relaxation parameter.
//!
//! Layout:
//! - [`grid`], [`field`], [`spectral`]: tori, sampled fields, FFT operators
//! - [`pressure`], [`doping`], [`equilibrium`]: γ-law closures, doping
//!   profiles, and the stationary-state solver
//! - [`em`], [`ep`], [`relax`]: stiff-aware time integration of the two
//!   relaxation systems and well-prepared initial data
//! - [`drift`]: the limit drift-diffusion system, reconstructed fields and
//!   the stream potential
//! - [`structure`]: pointwise symmetrizer / anti-symmetry / remainder audits
//! - [`experiments`]: configs, ε-sweeps, error functionals, rate fits,
//!   benchmarks and report output
//! - [`snapshot`]: the on-disk field format

pub mod doping;
pub mod drift;
pub mod em;
pub mod ep;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod pressure;
pub mod relax;
pub mod snapshot;
pub mod spectral;
pub mod structure;

pub use doping::DopingProfile;
pub use error::{Result, SimError};
pub use field::{AxialField, ScalarField, VectorField};
pub use grid::{PeriodicGrid, SobolevOrder};
pub use pressure::PressureLaw;
