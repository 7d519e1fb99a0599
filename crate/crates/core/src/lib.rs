//! Simulation and estimation toolkit for feedback-compensated which-way
//! measurements in a two-path interferometer with a spin-1/2 probe.
//!
//! - [`qcore`]: exact state vectors on path ⊗ spin.
//! - [`analytic`]: weak values, optimal compensation, spin statistics.
//! - [`simkit`]: seeded detector-count simulation.
//! - [`estimator`]: fringe fitting and presence scans.
//! - [`verify`]: the acceptance checks, runnable from tests and the CLI.

pub mod analytic;
pub mod estimator;
pub mod qcore;
pub mod simkit;
pub mod verify;

pub use analytic::{MeasurementContext, Outcome};
pub use qcore::{BeamConfig, CompositeState, Path, Port, SpinAxis};
