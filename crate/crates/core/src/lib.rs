//! Exact simulation of passive linear-optical circuits on multi-photon states
//! carrying spatial, polarisation and time-bin degrees of freedom, together
//! with the heralded hyperentanglement concentration protocols built on it.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the verification harness live in the `hecp` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod detection;
mod error;
pub mod fock;
pub mod heralds;
pub mod optics;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64;
