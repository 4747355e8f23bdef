use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PauliBasis;
use crate::designs::{self, task_rng, LocalUnitary, Setting};
use crate::linalg::{self, c, CMat};
use crate::qstate::DensityMatrix;
use crate::{error::invalid, Error, Result};

/// Setting of one site as stored in a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteSetting {
    /// Rotation `U` as rows of `[re, im]`; outcome `s` is the projector `U|s⟩⟨s|U†`.
    Unitary(Vec<Vec<[f64; 2]>>),
    /// Qubit direction `u`; outcome 0 is `+u`.
    Bloch([f64; 3]),
    /// Pauli eigenbasis; outcome 0 is the `+1` eigenvector.
    Pauli(PauliBasis),
}

impl SiteSetting {
    pub fn to_setting(&self) -> Result<Setting> {
        match self {
            SiteSetting::Unitary(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(invalid("unitary setting is not square"));
                }
                let m = CMat::from_fn(d, d, |i, j| c(rows[i][j][0], rows[i][j][1]));
                Ok(Setting::Unitary(LocalUnitary::new(m)?))
            }
            SiteSetting::Bloch(u) => Setting::bloch(*u),
            SiteSetting::Pauli(b) => Ok(Setting::Bloch(b.axis())),
        }
    }

    pub fn from_setting(s: &Setting) -> Self {
        match s {
            Setting::Bloch(u) => SiteSetting::Bloch(*u),
            Setting::Unitary(u) => {
                let m = u.matrix();
                SiteSetting::Unitary(
                    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
                )
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SiteSetting::Unitary(rows) => rows.len(),
            _ => 2,
        }
    }

    fn max_diff(&self, other: &SiteSetting) -> Option<f64> {
        match (self, other) {
            (SiteSetting::Pauli(a), SiteSetting::Pauli(b)) => Some(if a == b { 0.0 } else { f64::INFINITY }),
            (SiteSetting::Bloch(a), SiteSetting::Bloch(b)) => {
                Some(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            }
            (SiteSetting::Unitary(a), SiteSetting::Unitary(b)) if a.len() == b.len() => Some(
                a.iter()
                    .flatten()
                    .zip(b.iter().flatten())
                    .map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs()))
                    .fold(0.0, f64::max),
            ),
            _ => None,
        }
    }
}

/// One randomised setting and the outcome histogram of `K` shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub dims: Vec<usize>,
    pub setting: Vec<SiteSetting>,
    /// Bitstring (one digit per site, site 0 first) to count.
    pub counts: BTreeMap<String, u64>,
    #[serde(rename = "K")]
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stream index within `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
}

impl MeasurementRecord {
    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    /// Checks `Σ counts = K`, bitstring lengths and digit ranges.
    pub fn validate(&self) -> Result<()> {
        if self.setting.len() != self.dims.len() {
            return Err(invalid("one setting per site required"));
        }
        if self.setting.iter().zip(&self.dims).any(|(s, &d)| s.dim() != d) {
            return Err(Error::DimensionMismatch("setting dimension differs from site dimension".into()));
        }
        let mut total = 0;
        for (s, &n) in &self.counts {
            self.decode(s)?;
            total += n;
        }
        if total != self.shots {
            return Err(invalid(format!("counts sum to {total}, K = {}", self.shots)));
        }
        Ok(())
    }

    /// Digits of a bitstring key.
    pub fn decode(&self, s: &str) -> Result<Vec<u8>> {
        let digits: Vec<u8> = s
            .chars()
            .map(|ch| ch.to_digit(10).map(|x| x as u8).ok_or_else(|| invalid(format!("bad outcome digit in {s:?}"))))
            .collect::<Result<_>>()?;
        if digits.len() != self.dims.len() || digits.iter().zip(&self.dims).any(|(&x, &d)| x as usize >= d) {
            return Err(invalid(format!("outcome {s:?} does not fit dims {:?}", self.dims)));
        }
        Ok(digits)
    }

    /// Decoded outcomes with their counts.
    pub fn outcomes(&self) -> Result<Vec<(Vec<u8>, u64)>> {
        self.counts.iter().map(|(s, &n)| Ok((self.decode(s)?, n))).collect()
    }

    /// Counts of the outcomes restricted to `keep` (in the given order).
    pub fn marginal(&self, keep: &[usize]) -> Result<Vec<(Vec<u8>, u64)>> {
        if keep.iter().any(|&k| k >= self.n_sites()) {
            return Err(Error::InvalidSubsystems(format!("{keep:?} out of range")));
        }
        let mut m: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for (s, n) in self.outcomes()? {
            *m.entry(keep.iter().map(|&k| s[k]).collect()).or_default() += n;
        }
        Ok(m.into_iter().collect())
    }

    /// Same settings (to `tol`) on the same dims.
    pub fn same_setting(&self, other: &MeasurementRecord, tol: f64) -> bool {
        self.dims == other.dims
            && self.setting.iter().zip(&other.setting).all(|(a, b)| a.max_diff(b).is_some_and(|d| d <= tol))
    }

    /// Empirical `⟨Z^{⊗n}⟩` in the rotated frame: the mean of `(−1)^{Σ s}` (qubits).
    pub fn parity_correlation(&self) -> Result<f64> {
        if self.dims.iter().any(|&d| d != 2) {
            return Err(invalid("parity correlations need qubits"));
        }
        let mut s = 0i64;
        for (bits, n) in self.outcomes()? {
            let odd = bits.iter().map(|&b| b as u32).sum::<u32>() % 2 == 1;
            s += if odd { -(n as i64) } else { n as i64 };
        }
        Ok(s as f64 / self.shots as f64)
    }
}

fn encode(digits: &[usize]) -> String {
    digits.iter().map(|&d| char::from_digit(d as u32, 10).unwrap_or('?')).collect()
}

/// Born probabilities `P_U(s) = ⟨s|U† ρ U|s⟩` for the given settings.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: &[SiteSetting]) -> Result<Vec<f64>> {
    if setting.len() != rho.n_sites() {
        return Err(Error::DimensionMismatch("one setting per site required".into()));
    }
    let us: Vec<CMat> = setting.iter().map(|s| Ok(s.to_setting()?.unitary().adjoint())).collect::<Result<_>>()?;
    let rotated = rho.apply_local_unitaries(&us)?;
    Ok(rotated.matrix().diagonal().iter().map(|z| z.re.max(0.0)).collect())
}

/// Samples `K` outcomes of `ρ` measured in `setting` (multinomial via
/// successive conditional binomials).
pub fn simulate_rm<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    setting: &[SiteSetting],
    shots: u64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(invalid("K must be ≥ 1"));
    }
    if rho.dims().iter().any(|&d| d > 10) {
        return Err(Error::Unsupported("bitstring records support local dimension ≤ 10".into()));
    }
    let p = outcome_probabilities(rho, setting)?;
    let mut rest_p: f64 = p.iter().sum();
    let mut rest = shots;
    let mut counts = BTreeMap::new();
    for (i, &pi) in p.iter().enumerate() {
        if rest == 0 {
            break;
        }
        let n = if i + 1 == p.len() || pi >= rest_p {
            rest
        } else {
            let q = (pi / rest_p).clamp(0.0, 1.0);
            Binomial::new(rest, q).map_err(|e| invalid(e.to_string()))?.sample(rng)
        };
        rest_p -= pi;
        rest -= n;
        if n > 0 {
            counts.insert(encode(&linalg::digits(i, rho.dims())), n);
        }
    }
    Ok(MeasurementRecord {
        dims: rho.dims().to_vec(),
        setting: setting.to_vec(),
        counts,
        shots,
        seed: None,
        index: None,
    })
}

/// How record settings are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSampler {
    /// Haar unitary per site.
    Haar,
    /// Uniform Bloch direction per qubit.
    Bloch,
    /// Uniform Pauli basis per qubit (classical shadows).
    Pauli,
}

/// Draws one setting tuple.
pub fn sample_site_settings<R: Rng + ?Sized>(dims: &[usize], sampler: RecordSampler, rng: &mut R) -> Result<Vec<SiteSetting>> {
    if sampler != RecordSampler::Haar && dims.iter().any(|&d| d != 2) {
        return Err(invalid("Bloch and Pauli settings need qubits"));
    }
    Ok(dims
        .iter()
        .map(|&d| match sampler {
            RecordSampler::Haar => SiteSetting::from_setting(&Setting::Unitary(designs::haar_unitary(d, rng))),
            RecordSampler::Bloch => SiteSetting::Bloch(designs::haar_bloch_vector(rng)),
            RecordSampler::Pauli => SiteSetting::Pauli(PauliBasis::ALL[rng.random_range(0..3)]),
        })
        .collect())
}

/// `M` records of `K` shots each; record `i` uses stream `i` of `seed`.
pub fn simulate_records(
    rho: &DensityMatrix,
    sampler: RecordSampler,
    settings: usize,
    shots: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    (0..settings as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let s = sample_site_settings(rho.dims(), sampler, &mut rng)?;
            let mut r = simulate_rm(rho, &s, shots, &mut rng)?;
            r.seed = Some(seed);
            r.index = Some(i);
            Ok(r)
        })
        .collect()
}

/// Records measured with given settings; used to share settings across states.
pub fn simulate_with_settings(
    rho: &DensityMatrix,
    settings: &[Vec<SiteSetting>],
    shots: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    settings
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = task_rng(seed, i as u64);
            let mut r = simulate_rm(rho, s, shots, &mut rng)?;
            r.seed = Some(seed);
            r.index = Some(i as u64);
            Ok(r)
        })
        .collect()
}

pub fn write_jsonl<W: Write>(records: &[MeasurementRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads and validates one record per non-empty line.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<MeasurementRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MeasurementRecord =
            serde_json::from_str(&line).map_err(|e| invalid(format!("record on line {}: {e}", i + 1)))?;
        rec.validate().map_err(|e| invalid(format!("record on line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}
