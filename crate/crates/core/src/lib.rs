//! su2sta: inverse engineering of two- and three-level driving Hamiltonians
//! via SU(2) rotation transformations, plus the dynamics machinery (unitary
//! and Lindblad) and reproduction pipelines for the benchmark datasets.
//!
//! Units: hbar = 1 and the total run time T = 1 throughout, so every rate and
//! amplitude is a dimensionless multiple of 1/T and time is s = t/T.
//!
//! Module map:
//! * [`linalg`] - dense complex matrices (dims 2-6), spin operators, the
//!   Hermitian eigensolver, matrix exponentials.
//! * [`two_level`] - the SU(2) rotation picture and the two inverse designs.
//! * [`three_level`] - the spin-1 extension and the beta = 0 design.
//! * [`nv`] - the two-NV/cavity model, pulse construction and fitting.
//! * [`dynamics`] - RK4 Schrodinger and Lindblad propagation.
//! * [`experiments`] - table/figure reproduction pipelines with checkpoints.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod linalg;
pub mod nv;
pub mod output;
pub mod quad;
pub mod three_level;
pub mod two_level;

pub use error::{Error, Result};
