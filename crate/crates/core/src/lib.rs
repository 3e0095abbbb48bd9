//! Uncertainty geometry of the finite-dimensional canonical pair `(Q, P)`.

pub mod covariance;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod metrology;
pub mod minunc;
pub mod moments;
pub mod operators;
pub mod optim;
pub mod regions;
pub mod rng;
pub mod serial;
pub mod states;

pub use error::{Error, Result};
