//! Interference of many identical or partially distinguishable particles in
//! linear multimode devices.
//!
//! Single-particle devices are unitary matrices ([`linalg::ComplexMatrix`]),
//! many-particle states are mode occupations ([`fock::Arrangement`]).
//! Transition probabilities follow from permanents and determinants of
//! scattering submatrices.

pub mod certify;
pub mod entangle;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod partialdist;
pub mod sampling;
pub mod suppression;
pub mod transition;

pub use error::{Error, Result};
pub use fock::{Arrangement, Species};
pub use linalg::ComplexMatrix;

/// Probabilities below this are treated as exact zeros.
pub const NUMERICAL_ZERO: f64 = 1e-12;
