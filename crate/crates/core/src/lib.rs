//! Two massive particles in adjacent one-dimensional infinite square wells,
//! coupled only through Newtonian gravity.
//!
//! Energies are in units of `E0 = π²ħ²/(mL²)`, times in `t0 = ħ/E0` and
//! positions in units of the well width `L`.

pub mod basis;
pub mod decohere;
pub mod entangle;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod spectral;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
