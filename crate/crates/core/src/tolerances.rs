//! Pass/fail thresholds for every named check, in one place.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Residuals below this are at round-off level; convergence ratios are not
/// required there.
pub const RESIDUAL_FLOOR: f64 = 1e-9;
/// Minimum residual reduction when `dx` and `dt` are both halved.
pub const RESIDUAL_CONVERGENCE_RATIO: f64 = 8.0;

/// `(check name, default threshold)`.
pub const DEFAULTS: &[(&str, f64)] = &[
    ("residual", 1e-6),
    ("residual_convergence", RESIDUAL_CONVERGENCE_RATIO),
    ("driven_residual", 1e-6),
    ("transform_chain", 1e-6),
    ("transform_chain_analytic", 1e-10),
    ("inverse_composition", 1e-6),
    ("frequency_map", 1e-12),
    ("omega_constancy", 1e-8),
    ("closed_form", 1e-8),
    ("uncertainty_preservation", 1e-8),
    ("moment_shift", 1e-8),
    ("heisenberg", 1e-6),
    ("delta_equivalence", 1e-8),
    ("shift_rule", 1e-8),
    ("orthonormality", 1e-8),
    ("stationarity", 1e-9),
    ("pulsation", 1e-8),
];

pub fn is_known(check: &str) -> bool {
    DEFAULTS.iter().any(|(name, _)| *name == check)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds(BTreeMap<String, f64>);

impl Default for Thresholds {
    fn default() -> Self {
        Self(DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Thresholds {
    pub fn get(&self, check: &str) -> f64 {
        self.0[check]
    }

    pub fn set(&mut self, check: &str, value: f64) -> Result<()> {
        if !is_known(check) {
            return Err(Error::InvalidParameter(format!("unknown check '{check}'")));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "threshold for '{check}' must be positive, got {value}"
            )));
        }
        self.0.insert(check.to_string(), value);
        Ok(())
    }
}
