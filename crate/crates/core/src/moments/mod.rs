//! Correlation functions under randomised settings and the moments of their
//! distribution, `R⁽ᵗ⁾ = N ∫ E(U_1, …, U_n)ᵗ dU_1 … dU_n`.
//!
//! Normalisation `N` is explicit in every result (see [`Normalisation`]).
//! With [`Normalisation::SectorLength`] the second moment of a product of
//! traceless observables with `tr M² = d` (Pauli or Gell-Mann factors) equals
//! the full-body sector length `S_n`.

pub(crate) mod invariants;

pub use invariants::{
    bell_diagonal_moments, makhlin_invariants, pseudo_bloch_moments, q_polynomials, q3_expansion,
    sector_lengths, MakhlinInvariants, PseudoBlochMoments, QPolynomials,
};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{self, task_rng, Setting, SettingTuple};
use crate::linalg::{self, c, CMat};
use crate::qstate::{bloch_decompose, DensityMatrix};
use crate::{error::invalid, Error, Result};

/// Observable measured after the local rotations.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `M_1 ⊗ … ⊗ M_n`.
    Product(Vec<CMat>),
    /// `Σ_i m_i M_1ⁱ ⊗ … ⊗ M_nⁱ`, all terms evaluated under one setting.
    NonProduct(Vec<(f64, Vec<CMat>)>),
}

impl Observable {
    pub fn product(factors: Vec<CMat>) -> Result<Self> {
        check_factors(&factors)?;
        Ok(Observable::Product(factors))
    }

    pub fn non_product(terms: Vec<(f64, Vec<CMat>)>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| invalid("non-product observable needs at least one term"))?;
        let dims: Vec<usize> = first.1.iter().map(|m| m.nrows()).collect();
        for (_, f) in &terms {
            check_factors(f)?;
            if f.iter().map(|m| m.nrows()).collect::<Vec<_>>() != dims {
                return Err(Error::DimensionMismatch("terms act on different local dims".into()));
            }
        }
        Ok(Observable::NonProduct(terms))
    }

    /// `σ_z^{⊗n}`.
    pub fn pauli_z(n: usize) -> Self {
        Observable::Product(vec![linalg::pauli_z(); n])
    }

    /// `λ_j ⊗ … ⊗ λ_j` with the normalised Gell-Mann element `j ≥ 1` on each site.
    pub fn gell_mann(dims: &[usize], j: usize) -> Result<Self> {
        let factors = dims
            .iter()
            .map(|&d| {
                let b = crate::qstate::gell_mann_basis(d)?;
                if j == 0 || j >= b.len() {
                    return Err(invalid(format!("Gell-Mann index {j} out of range for d = {d}")));
                }
                Ok(b.get(j).clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Observable::Product(factors))
    }

    /// `Σ_j σ_j ⊗ σ_j`.
    pub fn two_qubit_sum() -> Self {
        let p = linalg::paulis();
        Observable::NonProduct((1..4).map(|j| (1.0, vec![p[j].clone(), p[j].clone()])).collect())
    }

    pub fn local_dims(&self) -> Vec<usize> {
        match self {
            Observable::Product(f) => f.iter().map(|m| m.nrows()).collect(),
            Observable::NonProduct(t) => t[0].1.iter().map(|m| m.nrows()).collect(),
        }
    }

    /// True when every factor squares to the identity (outcomes ±1).
    pub fn is_dichotomic(&self) -> bool {
        match self {
            Observable::Product(f) => f.iter().all(|m| linalg::max_abs_diff(&(m * m), &linalg::identity(m.nrows())) < 1e-12),
            Observable::NonProduct(_) => false,
        }
    }

    /// Full operator after rotating every factor by its party's setting.
    pub fn rotated(&self, settings: &[Setting]) -> Result<CMat> {
        let dims = self.local_dims();
        if settings.len() != dims.len() || settings.iter().zip(&dims).any(|(s, &d)| s.dim() != d) {
            return Err(Error::DimensionMismatch("settings do not match observable".into()));
        }
        let us: Vec<CMat> = settings.iter().map(|s| s.unitary()).collect();
        let rot = |f: &[CMat]| -> CMat {
            linalg::kron_all(f.iter().zip(&us).map(|(m, u)| u * m * u.adjoint()).collect::<Vec<_>>().iter())
        };
        Ok(match self {
            Observable::Product(f) => rot(f),
            Observable::NonProduct(terms) => {
                let dim: usize = dims.iter().product();
                let mut acc = CMat::zeros(dim, dim);
                for (m, f) in terms {
                    acc += rot(f) * c(*m, 0.0);
                }
                acc
            }
        })
    }
}

fn check_factors(f: &[CMat]) -> Result<()> {
    if f.is_empty() {
        return Err(invalid("observable needs at least one factor"));
    }
    for m in f {
        if !m.is_square() || m.nrows() < 2 || linalg::hermiticity_residual(m) > 1e-12 {
            return Err(invalid("observable factors must be Hermitian and at least 2×2"));
        }
    }
    Ok(())
}

/// `E = tr[ρ (⊗U_i) M (⊗U_i)†]`.
pub fn correlation_fn(rho: &DensityMatrix, obs: &Observable, settings: &[Setting]) -> Result<f64> {
    if obs.local_dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "observable dims {:?} vs state dims {:?}",
            obs.local_dims(),
            rho.dims()
        )));
    }
    rho.expectation(&obs.rotated(settings)?)
}

/// Normalisation constant `N` of a moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalisation {
    /// `N = 1`.
    Unit,
    /// `N = Π_i (d_i² − 1)`: the second moment equals the full-body sector length.
    SectorLength,
    Custom(f64),
}

impl Normalisation {
    pub fn factor(&self, dims: &[usize]) -> f64 {
        match self {
            Normalisation::Unit => 1.0,
            Normalisation::SectorLength => dims.iter().map(|&d| (d * d - 1) as f64).product(),
            Normalisation::Custom(x) => *x,
        }
    }

    pub fn id(&self) -> String {
        match self {
            Normalisation::Unit => "unit".into(),
            Normalisation::SectorLength => "sector-length".into(),
            Normalisation::Custom(x) => format!("custom:{x}"),
        }
    }

    /// Default choice for order `t`: sector-length for `t = 2`, unit otherwise.
    pub fn default_for(t: usize) -> Self {
        if t == 2 {
            Normalisation::SectorLength
        } else {
            Normalisation::Unit
        }
    }
}

/// Estimated or exact moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
    /// Number of settings; 0 for design or closed-form evaluation.
    #[serde(rename = "M")]
    pub settings: usize,
    /// Shots per setting; `None` means exact expectation values (K = ∞).
    #[serde(rename = "K")]
    pub shots: Option<u64>,
    #[serde(rename = "normalisation-id")]
    pub normalisation: String,
}

/// How settings are drawn in Monte Carlo mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingSampler {
    /// Haar unitaries on every site.
    Haar,
    /// Uniform Bloch vectors (qubits only).
    Bloch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentConfig {
    pub order: usize,
    pub settings: usize,
    pub shots: Option<u64>,
    pub normalisation: Normalisation,
    pub sampler: SettingSampler,
}

impl MomentConfig {
    pub fn new(order: usize, settings: usize) -> Self {
        Self { order, settings, shots: None, normalisation: Normalisation::default_for(order), sampler: SettingSampler::Haar }
    }

    pub fn shots(mut self, k: u64) -> Self {
        self.shots = Some(k);
        self
    }

    pub fn normalisation(mut self, n: Normalisation) -> Self {
        self.normalisation = n;
        self
    }

    pub fn sampler(mut self, s: SettingSampler) -> Self {
        self.sampler = s;
        self
    }
}

/// Unbiased estimator of `Eᵗ` from `K` dichotomic outcomes with `k_plus` of them
/// equal to `+1`: the mean product over ordered `t`-tuples of distinct shots.
pub fn unbiased_power(k_plus: u64, shots: u64, t: usize) -> Result<f64> {
    if (shots as usize) < t {
        return Err(invalid(format!("need at least {t} shots for an unbiased order-{t} estimate")));
    }
    if k_plus > shots {
        return Err(invalid("more +1 outcomes than shots"));
    }
    let (kp, km) = (k_plus as usize, (shots - k_plus) as usize);
    let mut s = 0.0;
    for j in 0..=t {
        let term = linalg::binomial(t, j) * linalg::falling(km, j) * linalg::falling(kp, t - j);
        s += if j % 2 == 0 { term } else { -term };
    }
    Ok(s / linalg::falling(shots as usize, t))
}

/// Draws the settings for Monte Carlo task `i`.
pub(crate) fn sample_settings<R: Rng + ?Sized>(dims: &[usize], sampler: SettingSampler, rng: &mut R) -> SettingTuple {
    match sampler {
        SettingSampler::Bloch => designs::random_bloch_settings(dims.len(), rng),
        SettingSampler::Haar => designs::random_settings(dims, rng),
    }
}

/// One Monte Carlo sample of `Eᵗ` (or of its unbiased finite-shot estimator).
fn sample_power<R: Rng + ?Sized>(rho: &DensityMatrix, obs: &Observable, cfg: &MomentConfig, rng: &mut R) -> Result<f64> {
    let settings = sample_settings(rho.dims(), cfg.sampler, rng);
    let e = correlation_fn(rho, obs, &settings)?;
    match cfg.shots {
        None => Ok(e.powi(cfg.order as i32)),
        Some(k) => {
            let p = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
            let kp = Binomial::new(k, p).map_err(|e| invalid(e.to_string()))?.sample(rng);
            unbiased_power(kp, k, cfg.order)
        }
    }
}

/// Monte Carlo moment over `cfg.settings` random settings. Task `i` uses
/// stream `i` of `seed`, so the result is independent of the thread count.
pub fn moment_mc(rho: &DensityMatrix, obs: &Observable, cfg: &MomentConfig, seed: u64) -> Result<MomentEstimate> {
    if cfg.order == 0 {
        return Err(invalid("moment order must be ≥ 1"));
    }
    if cfg.settings == 0 {
        return Err(invalid("need at least one setting"));
    }
    if obs.local_dims() != rho.dims() {
        return Err(Error::DimensionMismatch("observable does not match state".into()));
    }
    if cfg.sampler == SettingSampler::Bloch && !rho.is_qubits() {
        return Err(invalid("Bloch-vector settings need qubits"));
    }
    if cfg.shots.is_some() && !obs.is_dichotomic() {
        return Err(Error::Unsupported("finite-shot moments need a product of ±1-valued factors".into()));
    }
    let xs: Vec<f64> = (0..cfg.settings)
        .into_par_iter()
        .map(|i| sample_power(rho, obs, cfg, &mut task_rng(seed, i as u64)))
        .collect::<Result<_>>()?;
    let (mean, se) = designs::mean_stderr(&xs);
    let n = cfg.normalisation.factor(rho.dims());
    Ok(MomentEstimate {
        order: cfg.order,
        value: n * mean,
        stderr: n * se,
        settings: cfg.settings,
        shots: cfg.shots,
        normalisation: cfg.normalisation.id(),
    })
}

/// Exact qubit moment from the six-axis spherical 3-design applied on every
/// site with observable `σ_z^{⊗n}`: `N · 6⁻ⁿ Σ_design Eᵗ`, `t ∈ {1, 2, 3}`.
pub fn moment_exact_design(rho: &DensityMatrix, t: usize, norm: Normalisation) -> Result<MomentEstimate> {
    if !rho.is_qubits() {
        return Err(invalid("design evaluation is implemented for qubits"));
    }
    if t == 0 || t > 3 {
        return Err(Error::Unsupported(format!("shipped design has strength 3, order {t} requested")));
    }
    let n = rho.n_sites();
    let tensor = bloch_decompose(rho);
    let design = designs::spherical_design_23();
    let designs::DesignElements::Vectors(axes) = &design.elements else { unreachable!() };
    // Axis 2k ± maps to Pauli index k+1 with sign ±; E = (Π signs) T_{j1…jn}.
    let count = 6usize.pow(n as u32);
    let mut idx = vec![0; n];
    let mut sum = 0.0;
    for flat in 0..count {
        let ds = linalg::digits(flat, &vec![6; n]);
        let mut sign = 1.0;
        for (k, &a) in ds.iter().enumerate() {
            let v = axes[a];
            let (j, s) = if v[0] != 0.0 { (1, v[0]) } else if v[1] != 0.0 { (2, v[1]) } else { (3, v[2]) };
            idx[k] = j;
            sign *= s;
        }
        sum += (sign * tensor.get(&idx)).powi(t as i32);
    }
    Ok(MomentEstimate {
        order: t,
        value: norm.factor(rho.dims()) * sum / count as f64,
        stderr: 0.0,
        settings: 0,
        shots: None,
        normalisation: norm.id(),
    })
}

/// Exact Haar second moment of a product observable for arbitrary local dims,
/// from the two-fold twirl `∫ (U⊗U) M⊗M (U⊗U)† = α 𝟙 + β S` on each site:
/// `R⁽²⁾ = N Σ_A Π_{i∉A} α_i Π_{i∈A} β_i tr ρ_A²`.
pub fn moment2_exact(rho: &DensityMatrix, obs: &Observable, norm: Normalisation) -> Result<MomentEstimate> {
    let Observable::Product(factors) = obs else {
        return Err(Error::Unsupported("closed-form second moment needs a product observable".into()));
    };
    if obs.local_dims() != rho.dims() {
        return Err(Error::DimensionMismatch("observable does not match state".into()));
    }
    let coeffs: Vec<(f64, f64)> = factors
        .iter()
        .map(|m| {
            let d = m.nrows() as f64;
            let tr = linalg::trace(m).re;
            let (trx, trxs) = (tr * tr, linalg::trace_product(m, m).re);
            let k = 1.0 / (d * d - 1.0);
            (k * (trx - trxs / d), -k * (trx / d - trxs))
        })
        .collect();
    let n = rho.n_sites();
    let mut total = 0.0;
    for mask in 0usize..(1 << n) {
        let a: Vec<usize> = (0..n).filter(|&s| mask >> s & 1 == 1).collect();
        let w: f64 = (0..n).map(|s| if mask >> s & 1 == 1 { coeffs[s].1 } else { coeffs[s].0 }).product();
        if w == 0.0 {
            continue;
        }
        let pur = if a.is_empty() { 1.0 } else { rho.partial_trace(&a)?.purity() };
        total += w * pur;
    }
    Ok(MomentEstimate {
        order: 2,
        value: norm.factor(rho.dims()) * total,
        stderr: 0.0,
        settings: 0,
        shots: None,
        normalisation: norm.id(),
    })
}
