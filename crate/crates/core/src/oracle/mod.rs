//! Independent numerical cross-checks: witnesses, sampling, correlator
//! simulation and state optimization.

use serde::{Deserialize, Serialize};

pub mod checks;
pub mod correlators;
pub mod optimize;
pub mod sampling;
pub mod witness;

/// Knobs for the randomized searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Independent starting points for local search (at least 1).
    pub restarts: usize,
    /// Sweeps per local search.
    pub max_iters: usize,
    /// Local search stops once its step size falls below this.
    pub step_tol: f64,
    pub seed: u64,
    /// Random input scenarios drawn by the state search.
    pub samples: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 200,
            step_tol: 1e-9,
            seed: 0,
            samples: 10_000,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub(crate) fn restarts(&self) -> usize {
        self.restarts.max(1)
    }
}

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub samples: usize,
    pub max_deviation: f64,
    pub pass: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}
