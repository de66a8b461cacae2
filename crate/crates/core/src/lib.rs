//! Clauser-Horne Bell tests with Gaussian-noisy photon-number-difference readout.
//!
//! Two state families are supported: a pair-coherent signal/idler pair mixed
//! with coherent local oscillators (exact finite-amplitude counting, or its
//! quadrature limit), and the maximally correlated spin-pair state read out
//! through rotated polarizers.

pub mod bell;
pub mod error;
pub mod measurement;
pub mod numkernel;
pub mod oracle;
pub mod states;

pub use error::{Error, Result};
