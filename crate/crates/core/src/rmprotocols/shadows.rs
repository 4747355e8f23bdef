use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Estimate, MeasurementRecord, SiteSetting};
use crate::linalg::{self, c, CMat};
use crate::qstate::normalise_sites;
use crate::{error::invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    pub fn axis(self) -> [f64; 3] {
        match self {
            PauliBasis::X => [1.0, 0.0, 0.0],
            PauliBasis::Y => [0.0, 1.0, 0.0],
            PauliBasis::Z => [0.0, 0.0, 1.0],
        }
    }

    pub fn pauli(self) -> CMat {
        match self {
            PauliBasis::X => linalg::pauli_x(),
            PauliBasis::Y => linalg::pauli_y(),
            PauliBasis::Z => linalg::pauli_z(),
        }
    }

    /// `|b, ±⟩⟨b, ±|`; outcome 0 is the `+1` eigenvector.
    pub fn projector(self, outcome: u8) -> CMat {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        (linalg::identity(2) + self.pauli() * c(sign, 0.0)) * c(0.5, 0.0)
    }

    /// Single-qubit shadow `3|b, ±⟩⟨b, ±| − I`.
    pub fn shadow_factor(self, outcome: u8) -> CMat {
        self.projector(outcome) * c(3.0, 0.0) - linalg::identity(2)
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliBasis::X => "x",
            PauliBasis::Y => "y",
            PauliBasis::Z => "z",
        })
    }
}

impl FromStr for PauliBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(PauliBasis::X),
            "y" => Ok(PauliBasis::Y),
            "z" => Ok(PauliBasis::Z),
            _ => Err(invalid(format!("not a Pauli basis label: {s:?}"))),
        }
    }
}

/// `count` identical shots of one setting group, stored as basis and outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowEntry {
    pub group: usize,
    pub bases: Vec<PauliBasis>,
    pub outcomes: Vec<u8>,
    pub count: u64,
}

impl ShadowEntry {
    /// Per-site factors of the shadow (each of unit trace).
    pub fn factors(&self) -> Vec<CMat> {
        self.bases.iter().zip(&self.outcomes).map(|(b, &o)| b.shadow_factor(o)).collect()
    }

    fn factor(&self, site: usize) -> CMat {
        self.bases[site].shadow_factor(self.outcomes[site])
    }
}

/// Classical shadows in factored form; one group per measurement setting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShadowCollection {
    n: usize,
    groups: usize,
    entries: Vec<ShadowEntry>,
}

/// Shadows of one Pauli-basis record, tagged with `group`.
pub fn shadow_from_record(record: &MeasurementRecord, group: usize) -> Result<Vec<ShadowEntry>> {
    let bases: Vec<PauliBasis> = record
        .setting
        .iter()
        .map(|s| match s {
            SiteSetting::Pauli(b) => Ok(*b),
            other => Err(invalid(format!("shadows need Pauli-basis settings, got {other:?}"))),
        })
        .collect::<Result<_>>()?;
    record
        .outcomes()?
        .into_iter()
        .map(|(outcomes, count)| Ok(ShadowEntry { group, bases: bases.clone(), outcomes, count }))
        .collect()
}

impl ShadowCollection {
    pub fn new(n: usize) -> Self {
        Self { n, groups: 0, entries: vec![] }
    }

    /// One group per record.
    pub fn from_records(records: &[MeasurementRecord]) -> Result<Self> {
        let n = records.first().ok_or_else(|| invalid("no records"))?.n_sites();
        let mut s = Self::new(n);
        for r in records {
            s.push_record(r)?;
        }
        Ok(s)
    }

    pub fn push_record(&mut self, record: &MeasurementRecord) -> Result<()> {
        if record.n_sites() != self.n {
            return Err(Error::DimensionMismatch("record size differs from collection".into()));
        }
        let e = shadow_from_record(record, self.groups)?;
        self.entries.extend(e);
        self.groups += 1;
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn n_groups(&self) -> usize {
        self.groups
    }

    pub fn entries(&self) -> &[ShadowEntry] {
        &self.entries
    }

    pub fn total_shots(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    fn check_dense(&self) -> Result<()> {
        if self.n > 10 {
            return Err(Error::Unsupported(format!("dense shadow operators limited to 10 qubits, have {}", self.n)));
        }
        Ok(())
    }

    /// Per-group mean shadows, partially transposed on `transposed` (dense).
    pub fn group_operators(&self, transposed: &[usize]) -> Result<Vec<CMat>> {
        self.check_dense()?;
        let t = normalise_sites(transposed, self.n)?;
        let dim = 1usize << self.n;
        let mut ops = vec![CMat::zeros(dim, dim); self.groups];
        let mut shots = vec![0u64; self.groups];
        for e in &self.entries {
            let fs: Vec<CMat> = (0..self.n)
                .map(|i| if t.binary_search(&i).is_ok() { e.factor(i).transpose() } else { e.factor(i) })
                .collect();
            ops[e.group] += linalg::kron_all(&fs) * c(e.count as f64, 0.0);
            shots[e.group] += e.count;
        }
        Ok(ops.into_iter().zip(shots).filter(|(_, k)| *k > 0).map(|(o, k)| o / c(k as f64, 0.0)).collect())
    }

    /// Mean of all shadows, an unbiased (not necessarily positive) estimate of `ρ`.
    pub fn mean_state(&self) -> Result<CMat> {
        self.check_dense()?;
        let dim = 1usize << self.n;
        let mut m = CMat::zeros(dim, dim);
        for e in &self.entries {
            m += linalg::kron_all(&e.factors()) * c(e.count as f64, 0.0);
        }
        Ok(m / c(self.total_shots() as f64, 0.0))
    }
}

/// `⟨X⟩` for `X` acting on `sites` (tensor order as listed); cost independent of `n`.
/// The standard error treats setting groups as the independent units.
pub fn shadow_expectation(shadows: &ShadowCollection, x: &CMat, sites: &[usize]) -> Result<Estimate> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sites.len() || sites.iter().any(|&s| s >= shadows.n) || sites.is_empty() {
        return Err(Error::InvalidSubsystems(format!("{sites:?} is not a set of sites of {} qubits", shadows.n)));
    }
    if sites.len() > 12 || x.nrows() != 1 << sites.len() || !x.is_square() {
        return Err(Error::DimensionMismatch("observable does not match the listed sites".into()));
    }
    if shadows.entries.is_empty() {
        return Err(invalid("empty shadow collection"));
    }
    let mut sum = vec![0.0; shadows.groups];
    let mut shots = vec![0u64; shadows.groups];
    for e in &shadows.entries {
        let f = linalg::kron_all(&sites.iter().map(|&s| e.factor(s)).collect::<Vec<_>>());
        sum[e.group] += e.count as f64 * linalg::trace_product(x, &f).re;
        shots[e.group] += e.count;
    }
    let total: u64 = shots.iter().sum();
    let value = sum.iter().sum::<f64>() / total as f64;
    let used: Vec<(f64, u64)> = sum.into_iter().zip(shots).filter(|(_, k)| *k > 0).collect();
    let g = used.len() as f64;
    let stderr = if used.len() > 1 {
        let v: f64 = used.iter().map(|(s, k)| (s - *k as f64 * value).powi(2)).sum::<f64>() / (total as f64).powi(2);
        (v * g / (g - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    Ok(Estimate { value, stderr, samples: total as usize })
}

/// Shadow norm `‖X‖²_E = ‖Σ_k tr(X ρ̂_k)² E_k‖_op`, `E_k = ⊗ |k⟩⟨k| / 3`,
/// summed over the `6^L` outcomes of `X` on `L ≤ 3` qubits.
pub fn shadow_norm(x: &CMat) -> Result<f64> {
    let l = (x.nrows() as f64).log2().round() as usize;
    if x.nrows() != 1 << l || !x.is_square() || l == 0 {
        return Err(Error::DimensionMismatch("observable must act on qubits".into()));
    }
    if l > 3 {
        return Err(Error::Unsupported(format!("shadow norm summed exactly for L ≤ 3, got {l}")));
    }
    if linalg::hermiticity_residual(x) > 1e-10 * (1.0 + x.norm()) {
        return Err(invalid("observable is not Hermitian"));
    }
    let dim = 1 << l;
    let mut acc = CMat::zeros(dim, dim);
    for idx in 0..6usize.pow(l as u32) {
        let ks = linalg::digits(idx, &vec![6; l]);
        let basis = |k: usize| PauliBasis::ALL[k / 2];
        let shadow = linalg::kron_all(&ks.iter().map(|&k| basis(k).shadow_factor((k % 2) as u8)).collect::<Vec<_>>());
        let effect = linalg::kron_all(&ks.iter().map(|&k| basis(k).projector((k % 2) as u8) / c(3.0, 0.0)).collect::<Vec<_>>());
        let v = linalg::trace_product(x, &shadow).re;
        acc += effect * c(v * v, 0.0);
    }
    Ok(linalg::hermitian_eigenvalues(&acc)?[0])
}
