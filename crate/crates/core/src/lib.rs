#![cfg_attr(not(test), no_std)]
//! Exact algebra and discretized field machinery for Einstein-Scalar-Maxwell
//! theories whose gauge sector is twisted by a flat symplectic vector bundle.

extern crate alloc;

pub mod duality;
pub mod error;
pub mod exact;
pub mod local_system;
pub mod quantization;
pub mod random;
pub mod residuals;
pub mod spacetime;
pub mod symplectic;
pub mod target;
pub mod ufold;

pub use error::{Error, Result};
