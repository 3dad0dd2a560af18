//! Numerical toolkit for a qubit coupled to a bath of free fermions through an
//! interaction that is linear in the qubit's `σ_z` and bilinear in the bath
//! operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] builds finite matrix representations of fermionic and truncated
//!   bosonic baths, their thermal states and interaction-picture quadratures.
//! * [`correlations`] evaluates bath correlation functions both in closed form
//!   and by exact traces, along with fourth-order super-operator cumulants.
//! * [`kernels`] holds the closed-form influence kernels, their temperature
//!   limits and the discretised influence table used by the path sum.
//! * [`dynamics`] propagates the reduced qubit state exactly and through the
//!   quadratic influence-functional path sum.
//! * [`cli`] is the configuration-driven front end behind the `fvkernel` binary.

pub mod cli;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod kernels;
pub mod sampling;

pub use error::{Error, Result};
pub use fock::{BathSpec, LinearBoseBathSpec, Statistics};
pub use num_complex::Complex64;
