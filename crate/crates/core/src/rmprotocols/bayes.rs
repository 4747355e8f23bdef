use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MeasurementRecord;
use crate::{error::invalid, Result};

/// Histogram of finite-shot correlations `T̃ = (2k₊ − K)/K` over settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    #[serde(rename = "K")]
    pub shots: u64,
    /// `k₊` to number of settings.
    pub counts: BTreeMap<u64, u64>,
}

impl CorrelationHistogram {
    pub fn from_k_plus(k_plus: &[u64], shots: u64) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &k in k_plus {
            if k > shots {
                return Err(invalid("k₊ exceeds K"));
            }
            *counts.entry(k).or_default() += 1;
        }
        Ok(Self { shots, counts })
    }

    /// Rounds each `T̃` to the lattice `(2k₊ − K)/K`; off-lattice values are an error.
    pub fn from_correlations(t: &[f64], shots: u64) -> Result<Self> {
        let k = shots as f64;
        let kp: Vec<u64> = t
            .iter()
            .map(|&x| {
                let v = (x * k + k) / 2.0;
                let r = v.round();
                if (v - r).abs() > 1e-6 || !(0.0..=k).contains(&r) {
                    return Err(invalid(format!("{x} is not a correlation of {shots} shots")));
                }
                Ok(r as u64)
            })
            .collect::<Result<_>>()?;
        Self::from_k_plus(&kp, shots)
    }

    /// Parity correlations of qubit records, all with the same `K`.
    pub fn from_records(records: &[MeasurementRecord]) -> Result<Self> {
        let shots = records.first().ok_or_else(|| invalid("no records"))?.shots;
        if records.iter().any(|r| r.shots != shots) {
            return Err(invalid("records with different K"));
        }
        let t: Vec<f64> = records.iter().map(|r| r.parity_correlation()).collect::<Result<_>>()?;
        Self::from_correlations(&t, shots)
    }

    pub fn settings(&self) -> u64 {
        self.counts.values().sum()
    }

    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.shots as f64;
        let m = self.settings() as f64;
        self.counts.iter().map(|(&kp, &n)| ((2.0 * kp as f64 - k) / k, n as f64 / m)).unzip()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesCorrection {
    /// Plug-in `N · mean(T̃²)`.
    pub naive: f64,
    /// `N · mean_i E[T² | T̃_i]`.
    pub corrected: f64,
    pub stderr: f64,
    pub refinements: usize,
}

/// Bias correction of `R⁽²⁾ = N · E[T²]` from finite-`K` correlations.
///
/// The prior over the true correlation is the empirical distribution of `T̃`;
/// the likelihood of `T̃` given `T` is normal with mean `T` and variance
/// `(1 − T²)/K` (floored at `1/K²`). Each refinement replaces the prior by the
/// average posterior, one deconvolution step.
pub fn bayesian_moment_correction(hist: &CorrelationHistogram, normalisation: f64, refinements: usize) -> Result<BayesCorrection> {
    if hist.shots < 2 {
        return Err(invalid("K must be ≥ 2"));
    }
    if hist.counts.is_empty() {
        return Err(invalid("empty histogram"));
    }
    let k = hist.shots as f64;
    let (t, w) = hist.support();
    let var: Vec<f64> = t.iter().map(|x| ((1.0 - x * x) / k).max(1.0 / (k * k))).collect();
    // like[i][j] ∝ p(T̃ = t_i | T = t_j).
    let like: Vec<Vec<f64>> = t
        .iter()
        .map(|&obs| t.iter().zip(&var).map(|(&tj, &v)| (-(obs - tj).powi(2) / (2.0 * v)).exp() / v.sqrt()).collect())
        .collect();
    let posterior = |prior: &[f64]| -> Vec<Vec<f64>> {
        like.iter()
            .map(|row| {
                let p: Vec<f64> = row.iter().zip(prior).map(|(l, q)| l * q).collect();
                let z: f64 = p.iter().sum();
                p.into_iter().map(|x| x / z).collect()
            })
            .collect()
    };
    let mut prior = w.clone();
    for _ in 0..refinements {
        let post = posterior(&prior);
        prior = (0..t.len()).map(|j| post.iter().zip(&w).map(|(row, wi)| wi * row[j]).sum()).collect();
    }
    let post = posterior(&prior);
    let e_t2: Vec<f64> = post.iter().map(|row| row.iter().zip(&t).map(|(p, x)| p * x * x).sum()).collect();
    let corrected: f64 = e_t2.iter().zip(&w).map(|(e, wi)| e * wi).sum();
    let naive: f64 = t.iter().zip(&w).map(|(x, wi)| x * x * wi).sum();
    let m = hist.settings() as f64;
    let var_e: f64 = e_t2.iter().zip(&w).map(|(e, wi)| wi * (e - corrected).powi(2)).sum::<f64>() * m / (m - 1.0).max(1.0);
    Ok(BayesCorrection {
        naive: normalisation * naive,
        corrected: normalisation * corrected,
        stderr: normalisation * (var_e / m).sqrt(),
        refinements,
    })
}
