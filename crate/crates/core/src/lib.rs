//! Quantum Bernoulli circuits: chaotic Bernoulli-map dynamics on qubit chains
//! steered toward a ferromagnetic or antiferromagnetic orbit by stochastic
//! control, with finite-size scaling tools for the control (absorbing-state)
//! and measurement-induced entanglement transitions.
//!
//! The crate is organized bottom-up:
//!
//! - [`qstate`]: dense state vectors, two-qubit gates, Born-rule measurement.
//! - [`circuits`]: the Bernoulli map, adders and the control protocols.
//! - [`observables`]: order parameters, Schmidt spectra, Rényi entropies, `I_3`.
//! - [`engine`]: trajectories, ensembles and parameter sweeps.
//! - [`classical`]: the bit-string limit of the circuits.
//! - [`scaling`]: data collapse and dynamical-exponent fits.
//! - [`cli`]: configuration files, CSV/JSON outputs and the command driver.

pub mod circuits;
pub mod classical;
pub mod cli;
pub mod engine;
pub mod error;
pub mod observables;
pub mod qstate;
pub mod scaling;
pub mod stats;

pub use circuits::{Circuit, FixedPoint, ModelConfig, ModelVariant};
pub use engine::{run_ensemble, run_trajectory, sweep, EnsembleSummary, InitialState, Observable, TrajectoryOptions};
pub use error::{Error, Result};
pub use qstate::{StateVector, TwoQubitUnitary};
