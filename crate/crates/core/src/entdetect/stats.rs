use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::Verdict;
use crate::moments::MomentEstimate;
use crate::{error::invalid, Result};

/// Coefficients of `Var(R̃⁽²⁾) = (1/M)[A·R⁽⁴⁾ + B·R⁽²⁾ + C − (R⁽²⁾)²]` for
/// dichotomic product observables, with `R⁽²⁾ = N·E[E²]` and `R⁽⁴⁾ = N²·E[E⁴]`.
///
/// They follow from the second moment of the unbiased pair estimator of `E²`
/// from `K` binomial shots,
/// `E[Ẽ₂²] = [2 + 4(K−2)E² + (K−2)(K−3)E⁴] / (K(K−1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `shots = None` means `K → ∞` (`A = 1`, `B = C = 0`).
pub fn second_moment_variance_coefficients(shots: Option<u64>, normalisation: f64) -> Result<VarianceCoefficients> {
    match shots {
        None => Ok(VarianceCoefficients { a: 1.0, b: 0.0, c: 0.0 }),
        Some(k) if k < 2 => Err(invalid("K must be ≥ 2 for the unbiased second moment")),
        Some(k) => {
            let k = k as f64;
            let kk = k * (k - 1.0);
            Ok(VarianceCoefficients {
                a: (k - 2.0) * (k - 3.0) / kk,
                b: 4.0 * normalisation * (k - 2.0) / kk,
                c: 2.0 * normalisation * normalisation / kk,
            })
        }
    }
}

/// `Var(R̃⁽²⁾)` from the raw moments `E[E²]`, `E[E⁴]` over settings.
pub fn second_moment_variance(e2: f64, e4: f64, normalisation: f64, shots: Option<u64>, settings: usize) -> Result<f64> {
    if settings == 0 {
        return Err(invalid("need at least one setting"));
    }
    let co = second_moment_variance_coefficients(shots, normalisation)?;
    let (r2, r4) = (normalisation * e2, normalisation * normalisation * e4);
    Ok(((co.a * r4 + co.b * r2 + co.c - r2 * r2) / settings as f64).max(0.0))
}

/// `Δ_{M,K}`: standard deviation of `R̃⁽²⁾` (normalisation `3ⁿ`) for `|0⟩^{⊗n}`,
/// where `E[E²] = 3⁻ⁿ` and `E[E⁴] = 5⁻ⁿ` under Haar settings.
pub fn product_state_delta(n: usize, shots: Option<u64>, settings: usize) -> Result<f64> {
    let n = n as i32;
    Ok(second_moment_variance(3f64.powi(-n), 5f64.powi(-n), 3f64.powi(n), shots, settings)?.sqrt())
}

/// Statistical `R⁽²⁾ > 1 + margin·Δ` test for qubits.
pub fn crit_r2_statistical(estimate: f64, delta: f64, margin: f64) -> Verdict {
    Verdict::statistical("r2", estimate, 1.0, delta, margin)
}

/// How the error bar at confidence `γ` is derived from a standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceMode {
    /// Chebyshev–Cantelli: `δ = √((1+γ)/(1−γ))·σ`, distribution free.
    Cantelli,
    /// Normal approximation: `δ = z_{(1+γ)/2}·σ` (`γ = 0.954 ⇒ δ ≈ 2σ`).
    Normal,
}

/// Number of standard deviations in the error bar at confidence `γ`.
pub fn confidence_margin(gamma: f64, mode: ConfidenceMode) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("confidence level {gamma} outside (0, 1)")));
    }
    Ok(match mode {
        ConfidenceMode::Cantelli => ((1.0 + gamma) / (1.0 - gamma)).sqrt(),
        ConfidenceMode::Normal => Normal::standard().inverse_cdf((1.0 + gamma) / 2.0),
    })
}

/// A moment estimate with its error bar at a stated confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceWrapped {
    pub value: f64,
    pub stderr: f64,
    pub gamma: f64,
    pub mode: ConfidenceMode,
    /// Error bar in units of `stderr`.
    pub margin: f64,
    /// `margin · stderr`.
    pub delta: f64,
}

impl ConfidenceWrapped {
    pub fn verdict(&self, criterion: &str, bound: f64) -> Verdict {
        Verdict::statistical(criterion, self.value, bound, self.stderr, self.margin)
    }
}

pub fn confidence_wrap(estimate: &MomentEstimate, gamma: f64, mode: ConfidenceMode) -> Result<ConfidenceWrapped> {
    let margin = confidence_margin(gamma, mode)?;
    Ok(ConfidenceWrapped {
        value: estimate.value,
        stderr: estimate.stderr,
        gamma,
        mode,
        margin,
        delta: margin * estimate.stderr,
    })
}
