//! Numerical tolerances shared by every module.
//!
//! The defaults can be overridden from the CLI (`--tol`) or through the
//! `NETNL_TOL` environment variable, which replaces the comparison tolerance
//! used when evaluating criteria.

use serde::{Deserialize, Serialize};

pub const ENV_VAR: &str = "NETNL_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max entrywise |M - M^dagger| accepted as Hermitian.
    pub herm: f64,
    /// Eigenvalues above `-psd` count as non-negative.
    pub psd: f64,
    /// Slack for equalities and for `lhs <= rhs` comparisons.
    pub eq: f64,
    /// A real or imaginary part below this magnitude counts as zero.
    pub proper: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-12,
            psd: 1e-10,
            eq: 1e-12,
            proper: 1e-12,
        }
    }
}

impl Tolerances {
    /// Defaults with `eq` replaced by `NETNL_TOL` when it parses as a
    /// non-negative float.
    pub fn from_env() -> Self {
        let mut tol = Self::default();
        if let Some(v) = std::env::var(ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v >= 0.0)
        {
            tol.eq = v;
        }
        tol
    }

    pub fn with_eq(mut self, eq: f64) -> Self {
        self.eq = eq;
        self
    }

    /// `lhs <= rhs` up to the comparison slack.
    #[inline]
    pub fn le(&self, lhs: f64, rhs: f64) -> bool {
        lhs <= rhs + self.eq
    }

    #[inline]
    pub fn is_zero(&self, x: f64) -> bool {
        x.abs() <= self.proper
    }
}
