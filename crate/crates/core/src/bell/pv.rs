//! Quantities averaged over Haar-random measurement directions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polytope::{chsh_membership, membership_with, Columns};
use super::{behavior_from_state, correlation_matrix3, BehaviorTable, BellSet, BlochSettings, Scenario};
use crate::designs::{haar_bloch_vector, task_rng};
use crate::entdetect::CONJECTURE;
use crate::qstate::DensityMatrix;
use crate::rmprotocols::Estimate;
use crate::{error::invalid, Error, Result};

/// Per-sample LP outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub feasible: u64,
    pub infeasible: u64,
    /// LP runs that hit the pivot budget (counted as feasible).
    pub failed: u64,
}

/// Fraction of Haar-random settings producing a behaviour outside `set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub pv: f64,
    /// Binomial standard error `√(p(1−p)/N)`.
    pub stderr: f64,
    pub samples: u64,
    pub set: BellSet,
    pub scenario: Scenario,
    pub status: StatusCounts,
}

/// `m` independent uniformly distributed directions per party.
pub fn sample_settings<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> BlochSettings {
    (0..n).map(|_| (0..m).map(|_| haar_bloch_vector(rng)).collect()).collect()
}

/// Tester for one scenario and set; the CHSH shortcut replaces the LP for `n = m = 2` in L.
enum Tester {
    Chsh,
    Lp(Columns),
}

impl Tester {
    fn new(sc: &Scenario, set: BellSet) -> Result<Self> {
        if set == BellSet::L && sc.n == 2 && sc.m == 2 {
            Ok(Tester::Chsh)
        } else {
            Ok(Tester::Lp(Columns::new(sc, set)?))
        }
    }

    /// `(feasible, failed)`.
    fn test(&self, b: &BehaviorTable) -> Result<(bool, bool)> {
        let r = match self {
            Tester::Chsh => chsh_membership(b)?,
            Tester::Lp(cols) => membership_with(b, cols)?,
        };
        Ok((r.feasible, r.failed))
    }
}

fn check_state(rho: &DensityMatrix, sc: &Scenario) -> Result<()> {
    if !rho.is_qubits() || rho.n_sites() != sc.n {
        return Err(Error::DimensionMismatch(format!("scenario has {} qubit parties, state has dims {:?}", sc.n, rho.dims())));
    }
    Ok(())
}

/// Probability of violation. Sample `i` draws its settings from the stream
/// `(seed, i)`, so the result does not depend on the thread count.
pub fn pv_estimate(rho: &DensityMatrix, scenario: &Scenario, samples: u64, seed: u64, set: BellSet) -> Result<ViolationReport> {
    check_state(rho, scenario)?;
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let tester = Tester::new(scenario, set)?;
    let status = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<StatusCounts> {
            let mut rng = task_rng(seed, i);
            let b = behavior_from_state(rho, &sample_settings(scenario.n, scenario.m, &mut rng))?;
            let (feasible, failed) = tester.test(&b)?;
            Ok(StatusCounts { feasible: feasible as u64, infeasible: (!feasible) as u64, failed: failed as u64 })
        })
        .try_reduce(StatusCounts::default, |a, b| {
            Ok(StatusCounts { feasible: a.feasible + b.feasible, infeasible: a.infeasible + b.infeasible, failed: a.failed + b.failed })
        })?;
    let pv = status.infeasible as f64 / samples as f64;
    Ok(ViolationReport {
        pv,
        stderr: (pv * (1.0 - pv) / samples as f64).sqrt(),
        samples,
        set,
        scenario: scenario.clone(),
        status,
    })
}

/// Critical visibility and strength `𝒮 = 1 − v_crit` for fixed settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthResult {
    pub v_crit: f64,
    pub strength: f64,
}

/// Bisection tolerance on the visibility.
pub const STRENGTH_TOL: f64 = 1e-4;

fn strength_with(b: &BehaviorTable, tester: &Tester) -> Result<StrengthResult> {
    let noise = BehaviorTable::uniform(b.scenario.clone());
    if tester.test(b)?.0 {
        return Ok(StrengthResult { v_crit: 1.0, strength: 0.0 });
    }
    // Endpoint check: white noise is inside every set considered here.
    if !tester.test(&noise)?.0 {
        return Err(Error::InvalidParameter("uniform behaviour reported infeasible".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > STRENGTH_TOL {
        let mid = 0.5 * (lo + hi);
        if tester.test(&b.mix(mid, &noise)?)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = 0.5 * (lo + hi);
    Ok(StrengthResult { v_crit: v, strength: 1.0 - v })
}

/// Smallest `v` for which `vρ + (1−v)𝟙/2ⁿ` leaves `set` at the given settings.
/// The behaviour is affine in `v` and white noise is inside the set, so
/// membership is monotone and bisection applies.
pub fn strength(rho: &DensityMatrix, settings: &BlochSettings, set: BellSet) -> Result<StrengthResult> {
    let b = behavior_from_state(rho, settings)?;
    let tester = Tester::new(&b.scenario, set)?;
    strength_with(&b, &tester)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthReport {
    /// Largest strength found over the sampled settings.
    pub max: f64,
    /// Mean strength over the sampled settings.
    pub mean: Estimate,
    pub samples: u64,
    pub set: BellSet,
}

/// Strength over `samples` Haar-random setting choices.
pub fn strength_sampled(rho: &DensityMatrix, scenario: &Scenario, samples: u64, seed: u64, set: BellSet) -> Result<StrengthReport> {
    check_state(rho, scenario)?;
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let tester = Tester::new(scenario, set)?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let b = behavior_from_state(rho, &sample_settings(scenario.n, scenario.m, &mut rng))?;
            Ok(strength_with(&b, &tester)?.strength)
        })
        .collect::<Result<_>>()?;
    Ok(StrengthReport {
        max: values.iter().cloned().fold(0.0, f64::max),
        mean: Estimate::from_samples(&values),
        samples,
        set,
    })
}

/// Mean of `|E(u, v)|` over independent uniform directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageCorrelation {
    pub sigma: Estimate,
    /// `Σ > √2/4`: nonlocality conjectured.
    pub conjectured_nonlocal: bool,
    /// `Σ < 1/4`: locality conjectured.
    pub conjectured_local: bool,
    pub flags: Vec<String>,
}

pub fn average_correlation(rho: &DensityMatrix, samples: u64, seed: u64) -> Result<AverageCorrelation> {
    let t = correlation_matrix3(rho)?;
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let u = haar_bloch_vector(&mut rng);
            let v = haar_bloch_vector(&mut rng);
            (0..3).map(|a| (0..3).map(|b| u[a] * t[a][b] * v[b]).sum::<f64>()).sum::<f64>().abs()
        })
        .collect();
    let sigma = Estimate::from_samples(&xs);
    let conjectured_nonlocal = sigma.value > 2f64.sqrt() / 4.0;
    let conjectured_local = sigma.value < 0.25;
    let mut flags = Vec::new();
    if conjectured_nonlocal {
        flags.push(format!("{CONJECTURE}: nonlocal (sigma > sqrt(2)/4)"));
    }
    if conjectured_local {
        flags.push(format!("{CONJECTURE}: local (sigma < 1/4)"));
    }
    Ok(AverageCorrelation { sigma, conjectured_nonlocal, conjectured_local, flags })
}

/// Probability that random planar orthogonal settings on GHZ violate some MABK
/// inequality by more than a factor `ε√2`: `(4/π) arccos ε`, capped at 1
/// (the expression exceeds 1 for `ε < 1/√2`, where violation is certain).
pub fn mabk_planar_pv(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("epsilon {eps} outside [0, 1]")));
    }
    Ok((4.0 / std::f64::consts::PI * eps.acos()).min(1.0))
}

/// Coefficients of the MABK polynomial `M_n` over setting choices
/// `x ∈ {0,1}ⁿ` (party 0 most significant), normalised so the local bound is 1.
fn mabk_coefficients(n: usize) -> Vec<f64> {
    let (mut m, mut mp) = (vec![1.0, 0.0], vec![0.0, 1.0]);
    for _ in 1..n {
        let mut next = vec![0.0; m.len() * 2];
        let mut next_p = vec![0.0; m.len() * 2];
        for x in 0..m.len() {
            // M_k = ½ M_{k−1}(a + a') + ½ M'_{k−1}(a − a'), and M'_k with primes swapped.
            next[2 * x] = 0.5 * (m[x] + mp[x]);
            next[2 * x + 1] = 0.5 * (m[x] - mp[x]);
            next_p[2 * x + 1] = 0.5 * (mp[x] + m[x]);
            next_p[2 * x] = 0.5 * (mp[x] - m[x]);
        }
        m = next;
        mp = next_p;
    }
    m
}

/// Largest `|⟨M_n⟩|` on GHZ_n over relabellings (setting swaps and outcome
/// flips per party) for in-plane settings at angles `phi[j]` and `phi[j] + π/2`.
fn planar_mabk_max(coeffs: &[f64], phi: &[f64]) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let n = phi.len();
    let mut best = 0.0f64;
    for variant in 0..8usize.pow(n as u32) {
        // Per party: bit 0 swaps the two settings, bits 1 and 2 flip their outcomes.
        let angles: Vec<[f64; 2]> = (0..n)
            .map(|j| {
                let v = (variant >> (3 * j)) & 7;
                let mut a = [phi[j], phi[j] + FRAC_PI_2];
                if v & 1 == 1 {
                    a.swap(0, 1);
                }
                a[0] += PI * ((v >> 1) & 1) as f64;
                a[1] += PI * ((v >> 2) & 1) as f64;
                a
            })
            .collect();
        let mut val = 0.0;
        for (x, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let s: f64 = (0..n).map(|j| angles[j][(x >> (n - 1 - j)) & 1]).sum();
            val += c * s.cos();
        }
        best = best.max(val.abs());
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub eps: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
}

/// Monte Carlo counterpart of [`mabk_planar_pv`] on GHZ_n.
pub fn planar_mc_check(n: usize, samples: u64, eps: &[f64], seed: u64) -> Result<Vec<PlanarPoint>> {
    if !(2..=4).contains(&n) {
        return Err(Error::Unsupported(format!("planar MABK check supports 2 ≤ n ≤ 4 (got {n})")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let coeffs = mabk_coefficients(n);
    let maxima: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let phi: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            planar_mabk_max(&coeffs, &phi)
        })
        .collect();
    eps.iter()
        .map(|&e| {
            let analytic = mabk_planar_pv(e)?;
            let threshold = e * 2f64.sqrt();
            let p = maxima.iter().filter(|&&v| v > threshold).count() as f64 / samples as f64;
            Ok(PlanarPoint { eps: e, analytic, empirical: p, stderr: (p * (1.0 - p) / samples as f64).sqrt() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::chsh_optimal_settings;
    use crate::qstate::{state_factory, StateSpec};

    fn st(s: &str) -> DensityMatrix {
        state_factory(&StateSpec::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn mabk_two_party_is_half_chsh() {
        let c = mabk_coefficients(2);
        assert_eq!(c, vec![0.5, 0.5, 0.5, -0.5]);
        // Local bound 1 for n = 3 by enumeration of deterministic ±1 assignments.
        let c3 = mabk_coefficients(3);
        let mut best = 0.0f64;
        for code in 0..64usize {
            let val: f64 = (0..8).map(|x| c3[x] * (0..3).map(|j| if code >> (2 * j + ((x >> (2 - j)) & 1)) & 1 == 1 { -1.0 } else { 1.0 }).product::<f64>()).sum();
            best = best.max(val.abs());
        }
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mabk_analytic_endpoints() {
        assert_eq!(mabk_planar_pv(0.0).unwrap(), 1.0);
        assert_eq!(mabk_planar_pv(1.0).unwrap(), 0.0);
        assert!((mabk_planar_pv(0.9).unwrap() - 4.0 / std::f64::consts::PI * 0.9f64.acos()).abs() < 1e-15);
        assert!(mabk_planar_pv(1.5).is_err() && mabk_planar_pv(-0.1).is_err());
    }

    #[test]
    fn planar_curve_small_run() {
        let pts = planar_mc_check(2, 20_000, &[0.0, 0.8, 0.95], 3).unwrap();
        for p in pts {
            assert!((p.empirical - p.analytic).abs() < 0.02, "{p:?}");
        }
    }

    #[test]
    fn bell_pair_pv_small_run() {
        let sc = Scenario::new(2, 2).unwrap();
        let r = pv_estimate(&st("bell:phi+"), &sc, 20_000, 9, BellSet::L).unwrap();
        assert!((r.pv - 2.0 * (std::f64::consts::PI - 3.0)).abs() < 4.0 * r.stderr + 1e-3, "{r:?}");
        assert_eq!(r.status.feasible + r.status.infeasible, 20_000);
        let p = pv_estimate(&st("product:2"), &sc, 2_000, 9, BellSet::L).unwrap();
        assert_eq!(p.pv, 0.0);
    }

    #[test]
    fn pv_independent_of_thread_count() {
        let sc = Scenario::new(3, 2).unwrap();
        let r = st("ghz:3");
        let a = pv_estimate(&r, &sc, 300, 5, BellSet::L).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| pv_estimate(&r, &sc, 300, 5, BellSet::L).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn strength_of_bell_pair() {
        let r = st("bell:phi+");
        let s = strength(&r, &chsh_optimal_settings(&r).unwrap(), BellSet::L).unwrap();
        assert!((s.v_crit - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4, "{s:?}");
        let p = st("product:2");
        let set = vec![vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]; 2];
        assert_eq!(strength(&p, &set, BellSet::L).unwrap().strength, 0.0);
        let sc = Scenario::new(2, 2).unwrap();
        let rep = strength_sampled(&r, &sc, 200, 1, BellSet::L).unwrap();
        assert!(rep.max <= 1.0 - std::f64::consts::FRAC_1_SQRT_2 + 1e-4);
        assert!(rep.mean.value <= rep.max);
    }

    #[test]
    fn average_correlations() {
        let a = average_correlation(&st("bell:phi+"), 200_000, 2).unwrap();
        assert!((a.sigma.value - 0.5).abs() < 4.0 * a.sigma.stderr, "{:?}", a.sigma);
        assert!(a.conjectured_nonlocal && a.flags[0].starts_with(CONJECTURE));
        let m = average_correlation(&st("maxmixed:2"), 100, 2).unwrap();
        assert_eq!(m.sigma.value, 0.0);
        assert!(m.conjectured_local);
        // Linear in the correlation matrix: same samples, scaled by p.
        let w = average_correlation(&st("bell:phi+").with_white_noise(0.6).unwrap(), 5_000, 7).unwrap();
        let full = average_correlation(&st("bell:phi+"), 5_000, 7).unwrap();
        assert!((w.sigma.value - 0.6 * full.sigma.value).abs() < 1e-12);
    }
}
