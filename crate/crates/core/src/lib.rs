//! Thermometry of trapped-ion motional modes by bichromatic driving.
//!
//! The crate simulates qubit-phonon dynamics in a truncated Fock basis,
//! evaluates the closed-form population and Fisher-information formulas,
//! and provides the estimators and shot-noise simulation used to recover
//! the mean phonon number `n̄` from projective qubit measurements.
//!
//! Units are SI throughout: angular frequencies in rad/s, times in seconds.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod fock;
pub mod linalg;
pub mod shots;

mod optim;
mod par;

pub use error::{Error, Result};

pub type Complex = nalgebra::Complex<f64>;
