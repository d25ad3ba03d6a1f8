//! Experiment harness: configuration, ε-sweep orchestration, error
//! functionals between relaxation and limit trajectories, rate fits,
//! structure audits, and benchmarks.

pub mod bench;
pub mod config;
pub mod functionals;
pub mod structure_audit;
pub mod sweep;
pub mod traj;

pub use config::{ExperimentConfig, SystemKind};
pub use functionals::{error_functionals, fit_rate, Functionals, RateFit};
pub use sweep::{run_sweep, ErrorReport, SweepRow};
