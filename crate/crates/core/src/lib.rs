//! Numerical laboratory for the one-dimensional Sine-Gordon model and its
//! two-component log-gas dual at finite ultraviolet cutoff.

pub mod activity;
pub mod cumulants;
pub mod error;
pub mod field;
pub mod loggas;
pub mod onsager;
pub mod quadrature;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
