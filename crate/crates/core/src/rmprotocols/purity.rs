use serde::{Deserialize, Serialize};

use super::{Estimate, MeasurementRecord};
use crate::qstate::normalise_sites;
use crate::{error::invalid, Error, Result};

fn hamming(a: &[u8], b: &[u8]) -> i32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as i32
}

/// `2ⁿ Σ_{s,s'} (−2)^{−D(s,s')} p(s) q(s')` for weights given sparsely.
pub(crate) fn hamming_sum(p: &[(Vec<u8>, f64)], q: &[(Vec<u8>, f64)]) -> f64 {
    let n = p.first().or(q.first()).map_or(0, |x| x.0.len());
    let mut s = 0.0;
    for (a, x) in p {
        for (b, y) in q {
            s += (-2f64).powi(-hamming(a, b)) * x * y;
        }
    }
    2f64.powi(n as i32) * s
}

fn as_weights(counts: &[(Vec<u8>, u64)]) -> Vec<(Vec<u8>, f64)> {
    counts.iter().map(|(s, n)| (s.clone(), *n as f64)).collect()
}

fn check_qubits(r: &MeasurementRecord) -> Result<()> {
    if r.dims.iter().any(|&d| d != 2) {
        return Err(Error::Unsupported("the Hamming-distance estimators need qubits".into()));
    }
    Ok(())
}

fn marginal_of(r: &MeasurementRecord, keep: &Option<Vec<usize>>) -> Result<Vec<(Vec<u8>, u64)>> {
    match keep {
        Some(k) => r.marginal(k),
        None => r.outcomes(),
    }
}

/// Unbiased purity estimate of one record: shot pairs `(s, s')` with `s ≠ s'`
/// as shots, i.e. `2ⁿ [Σ (−2)^{−D} n_s n_{s'} − K] / (K(K−1))`.
pub(crate) fn record_purity(counts: &[(Vec<u8>, u64)], shots: u64) -> f64 {
    let k = shots as f64;
    let n = counts.first().map_or(0, |x| x.0.len());
    let w = as_weights(counts);
    (hamming_sum(&w, &w) - 2f64.powi(n as i32) * k) / (k * (k - 1.0))
}

/// `tr ρ_A²` from randomised-measurement records, averaged over settings.
/// `subsystem = None` uses all sites.
pub fn purity_from_rm(records: &[MeasurementRecord], subsystem: Option<&[usize]>) -> Result<Estimate> {
    let first = records.first().ok_or_else(|| invalid("no records"))?;
    let keep = subsystem.map(|s| normalise_sites(s, first.n_sites())).transpose()?;
    let xs: Vec<f64> = records
        .iter()
        .map(|r| {
            check_qubits(r)?;
            if r.dims != first.dims {
                return Err(Error::DimensionMismatch("records on different systems".into()));
            }
            if r.shots < 2 {
                return Err(invalid("purity needs K ≥ 2 shots per setting"));
            }
            Ok(record_purity(&marginal_of(r, &keep)?, r.shots))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&xs))
}

/// Cross-platform fidelity `tr(ρ₁ρ₂) / max(tr ρ₁², tr ρ₂²)` with its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    /// Jackknife over setting indices.
    pub stderr: f64,
    pub overlap: Estimate,
    pub purity1: Estimate,
    pub purity2: Estimate,
}

/// Requires record `i` of both sets to share the same setting.
pub fn cross_fidelity_from_rm(records1: &[MeasurementRecord], records2: &[MeasurementRecord]) -> Result<FidelityEstimate> {
    if records1.len() != records2.len() || records1.is_empty() {
        return Err(invalid("record sets must be non-empty and of equal length"));
    }
    let mut xs = Vec::with_capacity(records1.len());
    let mut p1 = Vec::with_capacity(records1.len());
    let mut p2 = Vec::with_capacity(records1.len());
    for (a, b) in records1.iter().zip(records2) {
        check_qubits(a)?;
        if !a.same_setting(b, 1e-9) {
            return Err(invalid("records at the same index use different settings"));
        }
        if a.shots < 2 || b.shots < 2 {
            return Err(invalid("fidelity needs K ≥ 2 shots per setting"));
        }
        let (ca, cb) = (a.outcomes()?, b.outcomes()?);
        xs.push(hamming_sum(&as_weights(&ca), &as_weights(&cb)) / (a.shots as f64 * b.shots as f64));
        p1.push(record_purity(&ca, a.shots));
        p2.push(record_purity(&cb, b.shots));
    }
    let f = |x: f64, a: f64, b: f64| x / a.max(b);
    let m = xs.len() as f64;
    let (sx, s1, s2): (f64, f64, f64) = (xs.iter().sum(), p1.iter().sum(), p2.iter().sum());
    let fidelity = f(sx / m, s1 / m, s2 / m);
    let stderr = if xs.len() > 1 {
        let loo: Vec<f64> =
            (0..xs.len()).map(|i| f((sx - xs[i]) / (m - 1.0), (s1 - p1[i]) / (m - 1.0), (s2 - p2[i]) / (m - 1.0))).collect();
        let mean = loo.iter().sum::<f64>() / m;
        ((m - 1.0) / m * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt()
    } else {
        f64::NAN
    };
    Ok(FidelityEstimate {
        fidelity,
        stderr,
        overlap: Estimate::from_samples(&xs),
        purity1: Estimate::from_samples(&p1),
        purity2: Estimate::from_samples(&p2),
    })
}
