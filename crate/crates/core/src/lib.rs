//! Casimir-based control by interconnection for linear port-Hamiltonian
//! systems, including controllers with sign-indefinite resistive structure.
//!
//! * [`ph_core`]: system model, validation, interconnection, numerics
//! * [`casimir`]: Casimir synthesis and the dissipation-obstacle check
//! * [`shaping`]: energy-shaping / damping-assignment forms and stability verdicts
//! * [`sim`]: RK4 simulation with conservation monitors
//! * [`rlc`]: RLC benchmark with closed-form oracles
//! * [`cli`]: the `phcbi` command line

pub mod casimir;
pub mod cli;
pub mod error;
pub mod ph_core;
pub mod pipeline;
pub mod report;
pub mod rlc;
pub mod shaping;
pub mod sim;

pub use error::{PhError, Result};
