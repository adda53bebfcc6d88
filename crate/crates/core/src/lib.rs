//! Implicit-explicit Runge-Kutta integrators for gradient flows, with
//! certification of unconditional energy decay.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dissipation;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod scalar;
pub mod spectral;
pub mod tableau;

pub use error::{IerkError, Result};
pub use scalar::Scalar;
