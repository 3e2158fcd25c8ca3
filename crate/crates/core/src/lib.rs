//! Energy-aware benchmarking of concept drift detectors.
//!
//! The crate generates synthetic drifting streams, trains base classifiers,
//! runs error-rate drift detectors while metering energy, and analyses the
//! results statistically.

pub mod classifiers;
pub mod detectors;
pub mod energy;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod rng;
pub mod stats;
pub mod streamgen;
