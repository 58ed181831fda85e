//! Numerical laboratory for the transverse-field Ising chain with a
//! site-dependent field: exact ground states, block entanglement entropy,
//! the Poisson spin-flip path integral, cluster transfer matrices, and a
//! numeric Kotecký-Preiss certificate for the cluster expansion.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod expm;
pub mod kp;
pub mod ground_state;
pub mod lanczos;
pub mod lattice;
pub mod spinflip;
pub mod transfer;

pub use error::{Error, Result};
