//! Simulated randomised-measurement data and the estimators built on it:
//! Hamming-distance purity and cross fidelity, classical shadows, shadow norm
//! and the Bayesian correction of finite-shot moments.

use serde::{Deserialize, Serialize};

mod bayes;
mod purity;
mod records;
mod shadows;

pub use bayes::{bayesian_moment_correction, BayesCorrection, CorrelationHistogram};
pub use purity::{cross_fidelity_from_rm, purity_from_rm, FidelityEstimate};
pub use records::{
    outcome_probabilities, read_jsonl, sample_site_settings, simulate_records, simulate_rm, simulate_with_settings,
    write_jsonl, MeasurementRecord, RecordSampler, SiteSetting,
};
pub use shadows::{shadow_expectation, shadow_from_record, shadow_norm, PauliBasis, ShadowCollection, ShadowEntry};

/// Mean of i.i.d. samples with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, stderr) = crate::designs::mean_stderr(xs);
        Self { value, stderr, samples: xs.len() }
    }

    /// `|value − target| ≤ k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}
