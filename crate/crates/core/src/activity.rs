//! The one place where gas and field activities are converted.
//!
//! Expanding `E[exp(α M_t)]` in powers of `α` gives the log-gas series with
//! activity `α/2` per particle, so the field-side ("library") activity is
//! twice the gas activity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An activity tagged with its convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    /// Weight `α^n / n!` per configuration of `n` charges.
    Gas(f64),
    /// Coefficient in `E[exp(α M_t)]`.
    Library(f64),
}

impl Activity {
    pub fn gas(self) -> f64 {
        match self {
            Activity::Gas(a) => a,
            Activity::Library(a) => gas_from_library(a),
        }
    }

    pub fn library(self) -> f64 {
        match self {
            Activity::Gas(a) => library_from_gas(a),
            Activity::Library(a) => a,
        }
    }

    pub fn validate(self) -> Result<Self> {
        let v = match self {
            Activity::Gas(a) | Activity::Library(a) => a,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(self)
        } else {
            Err(Error::Domain(format!("activity must be finite and >= 0, got {v}")))
        }
    }
}

#[inline]
pub fn library_from_gas(alpha_gas: f64) -> f64 {
    2.0 * alpha_gas
}

#[inline]
pub fn gas_from_library(alpha_library: f64) -> f64 {
    0.5 * alpha_library
}
