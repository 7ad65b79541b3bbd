//! Frequency-domain quantum network noise simulation.
//!
//! Dissipative elements are noise lines, lossless couplings are reactive
//! multipoles, and amplifiers add conjugated input modes. Spectra are
//! symmetrized and carried as occupations per mode; estimators turn a readout
//! row into per-source noise budgets.

pub mod accelerometer;
pub mod amplifier;
pub mod error;
pub mod estimator;
pub mod netlist;
pub mod network;
pub mod run;
pub mod spectra;

pub use error::{NoiseError, Result};
