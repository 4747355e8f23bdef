//! Partial-transpose moments `p_k = tr[(ρ^{Γ_B})ᵏ]`, logarithmic negativity and
//! the p3-PPT / p3-OPPT tests.

use serde::{Deserialize, Serialize};

use crate::entdetect::Verdict;
use crate::linalg::{self, CMat};
use crate::qstate::{normalise_sites, DensityMatrix};
use crate::rmprotocols::ShadowCollection;
use crate::{error::invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    /// U-statistic over `groups` independent measurement settings.
    ShadowEstimated { shadows: u64, groups: usize },
}

/// `p_1 … p_k` with their standard errors (zero in exact mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtMomentSet {
    /// Transposed sites.
    pub transposed: Vec<usize>,
    /// `moments[k-1] = p_k`.
    pub moments: Vec<f64>,
    pub stderr: Vec<f64>,
    pub provenance: Provenance,
}

impl PtMomentSet {
    /// `p_k` for `k ≥ 1`.
    pub fn p(&self, k: usize) -> f64 {
        self.moments[k - 1]
    }
}

/// Exact `p_1 … p_kmax` from the spectrum of `ρ^{Γ_B}`.
pub fn pt_moments_exact(rho: &DensityMatrix, b: &[usize], kmax: usize) -> Result<PtMomentSet> {
    if kmax == 0 {
        return Err(invalid("kmax must be ≥ 1"));
    }
    let ev = linalg::hermitian_eigenvalues(&rho.partial_transpose(b)?)?;
    let moments = (1..=kmax).map(|k| ev.iter().map(|l| l.powi(k as i32)).sum()).collect();
    Ok(PtMomentSet {
        transposed: normalise_sites(b, rho.n_sites())?,
        moments,
        stderr: vec![0.0; kmax],
        provenance: Provenance::Exact,
    })
}

/// `log ‖ρ^{Γ_B}‖₁` (natural log), exactly 0 for PPT states.
pub fn log_negativity(rho: &DensityMatrix, b: &[usize]) -> Result<f64> {
    Ok((1.0 + 2.0 * rho.negativity(b)?).ln())
}

fn check_p2(p2: f64) -> Result<()> {
    if !(p2 > 0.0 && p2 <= 1.0 + 1e-9) {
        return Err(invalid(format!("p2 = {p2} outside (0, 1]")));
    }
    Ok(())
}

/// PPT states satisfy `p₃ ≥ p₂²`; reported in gap form `p₂² − p₃ > 0`.
pub fn p3_ppt_check(p2: f64, p3: f64) -> Result<Verdict> {
    check_p2(p2)?;
    Ok(Verdict::lower_bound("p3-ppt", p3, p2 * p2))
}

/// Minimum of `p₃` over PPT spectra with the given `p₂`:
/// `α x³ + (1 − α x)³`, `α = ⌊1/p₂⌋`, `x = [α + √(α(p₂(α+1) − 1))] / (α(α+1))`.
pub fn oppt_bound(p2: f64) -> Result<f64> {
    check_p2(p2)?;
    let p2 = p2.min(1.0);
    let alpha = (1.0 / p2).floor().max(1.0);
    let disc = (alpha * (p2 * (alpha + 1.0) - 1.0)).max(0.0);
    let x = (alpha + disc.sqrt()) / (alpha * (alpha + 1.0));
    Ok(alpha * x.powi(3) + (1.0 - alpha * x).powi(3))
}

/// Optimal p3-PPT test; gap form `bound − p₃ > 0`.
pub fn p3_oppt_check(p2: f64, p3: f64) -> Result<Verdict> {
    Ok(Verdict::lower_bound("p3-oppt", p3, oppt_bound(p2)?))
}

/// Unbiased `p₂, p₃` from classical shadows.
///
/// Shadows are grouped by measurement setting; with `O_r` the partially
/// transposed group average, `S = Σ O_r` and `Q = Σ O_r²`, the sums over
/// distinct groups are `tr S² − Σ tr O_r²` and
/// `tr S³ − 3 tr(Q S) + 2 Σ tr O_r³`. The standard error is the jackknife over groups.
pub fn pt_moments_from_shadows(shadows: &ShadowCollection, b: &[usize], kmax: usize) -> Result<PtMomentSet> {
    if !(2..=3).contains(&kmax) {
        return Err(Error::Unsupported(format!("shadow PT moments implemented for k ∈ {{2, 3}}, got {kmax}")));
    }
    let b = normalise_sites(b, shadows.n_sites())?;
    let ops = shadows.group_operators(&b)?;
    let r = ops.len();
    if r < kmax {
        return Err(invalid(format!("need at least {kmax} independent shadow groups, have {r}")));
    }
    let dim = ops[0].nrows();
    let mut s = CMat::zeros(dim, dim);
    let mut q = CMat::zeros(dim, dim);
    let squares: Vec<CMat> = ops.iter().map(|o| o * o).collect();
    for (o, o2) in ops.iter().zip(&squares) {
        s += o;
        q += o2;
    }
    let tr = |a: &CMat, b: &CMat| linalg::trace_product(a, b).re;
    let s2 = &s * &s;
    let tr_s2 = linalg::trace(&s2).re;
    let diag2: Vec<f64> = squares.iter().map(|o2| linalg::trace(o2).re).collect();
    let sum_diag2: f64 = diag2.iter().sum();
    let rf = r as f64;
    let p2_of = |ts2: f64, sd2: f64, n: f64| (ts2 - sd2) / (n * (n - 1.0));
    let p2 = p2_of(tr_s2, sum_diag2, rf);

    // Leave-one-group-out values for the jackknife.
    let mut p2_loo = Vec::with_capacity(r);
    let mut p3_loo = Vec::with_capacity(r);
    let mut p3 = None;
    let (tr_s3, tr_qs, sum_diag3, diag3) = if kmax >= 3 {
        let d3: Vec<f64> = ops.iter().zip(&squares).map(|(o, o2)| tr(o2, o)).collect();
        (tr(&s2, &s), tr(&q, &s), d3.iter().sum::<f64>(), d3)
    } else {
        (0.0, 0.0, 0.0, vec![])
    };
    let p3_of = |ts3: f64, tqs: f64, sd3: f64, n: f64| (ts3 - 3.0 * tqs + 2.0 * sd3) / (n * (n - 1.0) * (n - 2.0));
    if kmax >= 3 {
        p3 = Some(p3_of(tr_s3, tr_qs, sum_diag3, rf));
    }
    if r > kmax {
        for (i, (o, o2)) in ops.iter().zip(&squares).enumerate() {
            let so = tr(&s, o);
            let ts2 = tr_s2 - 2.0 * so + diag2[i];
            p2_loo.push(p2_of(ts2, sum_diag2 - diag2[i], rf - 1.0));
            if kmax >= 3 {
                // tr (S−O)³ = tr S³ − 3 tr(S² O) + 3 tr(S O²) − tr O³.
                let s2o = tr(&s2, o);
                let so2 = tr(&s, o2);
                let ts3 = tr_s3 - 3.0 * s2o + 3.0 * so2 - diag3[i];
                // tr[(Q − O²)(S − O)] = tr(QS) − tr(QO) − tr(O²S) + tr O³.
                let tqs = tr_qs - tr(&q, o) - so2 + diag3[i];
                p3_loo.push(p3_of(ts3, tqs, sum_diag3 - diag3[i], rf - 1.0));
            }
        }
    }
    let jack = |xs: &[f64]| -> f64 {
        if xs.len() < 2 {
            return f64::NAN;
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        ((n - 1.0) / n * xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
    };
    let mut moments = vec![1.0, p2];
    let mut stderr = vec![0.0, jack(&p2_loo)];
    if let Some(p3) = p3 {
        moments.push(p3);
        stderr.push(jack(&p3_loo));
    }
    Ok(PtMomentSet {
        transposed: b,
        moments,
        stderr,
        provenance: Provenance::ShadowEstimated { shadows: shadows.total_shots(), groups: r },
    })
}
