//! Bell scenarios with two outcomes: behaviours from qubit states, CHSH,
//! membership in the local, NS₂ and S₂ sets by linear programming, the
//! probability of violation under Haar settings and related quantities.
//!
//! Outcome bit 0 is the `+1` eigenvalue of `u·σ`. Setting tuples and outcome
//! strings are indexed with party 0 most significant. Subsets of parties are
//! bitmasks with bit `j` for party `j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::qstate::{bloch_decompose, DensityMatrix};
use crate::{error::invalid, Error, Result};

pub mod lp;
mod polytope;
mod pv;

pub use polytope::{gmnl_feasible, local_polytope_feasible, membership, BellFunctional, Membership};
pub use pv::{
    average_correlation, mabk_planar_pv, planar_mc_check, pv_estimate, sample_settings, strength, strength_sampled,
    AverageCorrelation, PlanarPoint, StatusCounts, StrengthReport, StrengthResult, ViolationReport, STRENGTH_TOL,
};

/// Largest supported number of parties and settings per party.
pub const MAX_PARTIES: usize = 4;
pub const MAX_SETTINGS: usize = 3;

/// `n` parties, `m` settings each, `o` outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub m: usize,
    pub o: usize,
    pub labels: Vec<String>,
}

impl Scenario {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_outcomes(n, m, 2)
    }

    pub fn with_outcomes(n: usize, m: usize, o: usize) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(invalid(format!("scenario needs n ≥ 2 and m ≥ 2 (got n={n}, m={m})")));
        }
        if o != 2 {
            return Err(Error::Unsupported(format!("only two outcomes are supported (got o={o})")));
        }
        if n > MAX_PARTIES || m > MAX_SETTINGS {
            return Err(Error::Unsupported(format!("scenario n={n}, m={m} exceeds n ≤ {MAX_PARTIES}, m ≤ {MAX_SETTINGS}")));
        }
        let labels = (0..n).map(|j| ((b'A' + j as u8) as char).to_string()).collect();
        Ok(Self { n, m, o, labels })
    }

    /// Number of setting tuples, `mⁿ`.
    pub fn n_inputs(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Number of outcome strings, `2ⁿ`.
    pub fn n_outputs(&self) -> usize {
        1 << self.n
    }

    /// Setting of `party` in tuple `x`.
    pub fn input_of(&self, x: usize, party: usize) -> usize {
        (x / self.m.pow((self.n - 1 - party) as u32)) % self.m
    }

    /// Outcome bit of `party` in outcome string `a`.
    pub fn output_of(&self, a: usize, party: usize) -> usize {
        (a >> (self.n - 1 - party)) & 1
    }

    /// Number of correlator rows: one per tuple and nonempty subset.
    pub(crate) fn n_correlators(&self) -> usize {
        self.n_inputs() * (self.n_outputs() - 1)
    }

    pub(crate) fn row(&self, x: usize, subset: usize) -> usize {
        x * (self.n_outputs() - 1) + subset - 1
    }
}

/// Set a behaviour is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellSet {
    /// Bell-local.
    L,
    /// Mixtures over bipartitions of nonsignalling blocks.
    NS2,
    /// Mixtures over bipartitions of arbitrary (signalling) blocks.
    S2,
}

impl fmt::Display for BellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellSet::L => "L",
            BellSet::NS2 => "NS2",
            BellSet::S2 => "S2",
        })
    }
}

impl FromStr for BellSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "L" | "l" | "local" => Ok(BellSet::L),
            "NS2" | "NS₂" | "ns2" => Ok(BellSet::NS2),
            "S2" | "S₂" | "s2" => Ok(BellSet::S2),
            other => Err(invalid(format!("unknown set '{other}' (expected L, NS2 or S2)"))),
        }
    }
}

/// Parsed form of `"n=3,m=2,o=2,set=L"`; missing keys default to `m=2`, `o=2`, `set=L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub set: BellSet,
}

impl ScenarioSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (mut n, mut m, mut o, mut set) = (None, 2usize, 2usize, BellSet::L);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got '{part}'")))?;
            let num = || v.trim().parse::<usize>().map_err(|_| invalid(format!("bad value in '{part}'")));
            match k.trim() {
                "n" => n = Some(num()?),
                "m" => m = num()?,
                "o" => o = num()?,
                "set" => set = v.parse()?,
                other => return Err(invalid(format!("unknown scenario key '{other}'"))),
            }
        }
        let n = n.ok_or_else(|| invalid("scenario needs n"))?;
        Ok(Self { scenario: Scenario::with_outcomes(n, m, o)?, set })
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={},m={},o={},set={}", self.scenario.n, self.scenario.m, self.scenario.o, self.set)
    }
}

/// Measurement directions: `settings[party][x]` is a unit Bloch vector.
pub type BlochSettings = Vec<Vec<[f64; 3]>>;

/// `P(a⃗|x⃗)` stored as `probs[x · 2ⁿ + a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTable {
    pub scenario: Scenario,
    pub probs: Vec<f64>,
}

impl BehaviorTable {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.n_inputs() * scenario.n_outputs() {
            return Err(Error::DimensionMismatch(format!("behaviour has {} entries", probs.len())));
        }
        let b = Self { scenario, probs };
        if b.probs.iter().any(|&p| p < -1e-10 || !p.is_finite()) {
            return Err(invalid("negative probability in behaviour"));
        }
        for x in 0..b.scenario.n_inputs() {
            let s: f64 = b.row(x).iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(invalid(format!("behaviour not normalised for setting tuple {x} (sum {s})")));
            }
        }
        Ok(b)
    }

    /// Behaviour of a deterministic local strategy: `responses[party][x]` is the outcome bit.
    pub fn deterministic(scenario: Scenario, responses: &[Vec<u8>]) -> Result<Self> {
        if responses.len() != scenario.n || responses.iter().any(|r| r.len() != scenario.m) {
            return Err(Error::DimensionMismatch("one response per party and setting expected".into()));
        }
        let (ni, no) = (scenario.n_inputs(), scenario.n_outputs());
        let mut probs = vec![0.0; ni * no];
        for x in 0..ni {
            let a = (0..scenario.n).fold(0, |acc, j| (acc << 1) | (responses[j][scenario.input_of(x, j)] & 1) as usize);
            probs[x * no + a] = 1.0;
        }
        Ok(Self { scenario, probs })
    }

    /// Uniformly random outcomes (the behaviour of the maximally mixed state).
    pub fn uniform(scenario: Scenario) -> Self {
        let no = scenario.n_outputs();
        let probs = vec![1.0 / no as f64; scenario.n_inputs() * no];
        Self { scenario, probs }
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let no = self.scenario.n_outputs();
        &self.probs[x * no..(x + 1) * no]
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.probs[x * self.scenario.n_outputs() + a]
    }

    /// `⟨∏_{j∈S} A_{j,x_j}⟩` in tuple `x` for the subset bitmask `S`.
    pub fn correlator(&self, x: usize, subset: usize) -> f64 {
        let sc = &self.scenario;
        self.row(x)
            .iter()
            .enumerate()
            .map(|(a, p)| {
                let flips = (0..sc.n).filter(|&j| subset >> j & 1 == 1 && sc.output_of(a, j) == 1).count();
                if flips % 2 == 0 {
                    *p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// All correlators for nonempty subsets, in LP row order.
    pub fn correlators(&self) -> Vec<f64> {
        let sc = &self.scenario;
        let mut out = Vec::with_capacity(sc.n_correlators());
        for x in 0..sc.n_inputs() {
            for s in 1..sc.n_outputs() {
                out.push(self.correlator(x, s));
            }
        }
        out
    }

    /// `v·self + (1−v)·other`.
    pub fn mix(&self, v: f64, other: &BehaviorTable) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::DimensionMismatch("behaviours from different scenarios".into()));
        }
        let probs = self.probs.iter().zip(&other.probs).map(|(a, b)| v * a + (1.0 - v) * b).collect();
        Ok(Self { scenario: self.scenario.clone(), probs })
    }

    /// Largest dependence of any party's marginal on other parties' settings.
    pub fn signalling_residual(&self) -> f64 {
        let sc = &self.scenario;
        let mut worst = 0.0f64;
        // A marginal correlator for subset S may only depend on x restricted to S.
        for s in 1..sc.n_outputs() {
            for x in 0..sc.n_inputs() {
                let mut y = 0usize;
                for j in 0..sc.n {
                    let xj = if s >> j & 1 == 1 { sc.input_of(x, j) } else { 0 };
                    y = y * sc.m + xj;
                }
                worst = worst.max((self.correlator(x, s) - self.correlator(y, s)).abs());
            }
        }
        worst
    }
}

fn check_settings(settings: &BlochSettings, n: usize) -> Result<usize> {
    if settings.len() != n {
        return Err(Error::DimensionMismatch(format!("{} parties in settings, state has {n}", settings.len())));
    }
    let m = settings[0].len();
    for s in settings {
        if s.len() != m {
            return Err(Error::DimensionMismatch("every party needs the same number of settings".into()));
        }
        for u in s {
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(invalid("measurement directions must be unit vectors"));
            }
        }
    }
    Ok(m)
}

/// Born-rule behaviour of projective measurements along the given directions.
pub fn behavior_from_state(rho: &DensityMatrix, settings: &BlochSettings) -> Result<BehaviorTable> {
    if !rho.is_qubits() {
        return Err(Error::DimensionMismatch("behaviours need qubit parties".into()));
    }
    let n = rho.n_sites();
    let m = check_settings(settings, n)?;
    let sc = Scenario::new(n, m)?;
    let t = bloch_decompose(rho);
    let data = t.data();
    let (ni, no) = (sc.n_inputs(), sc.n_outputs());
    let mut probs = vec![0.0; ni * no];
    let mut corr = vec![0.0; no];
    for x in 0..ni {
        let dirs: Vec<&[f64; 3]> = (0..n).map(|j| &settings[j][sc.input_of(x, j)]).collect();
        corr[0] = 1.0;
        for (s, c) in corr.iter_mut().enumerate().skip(1) {
            // Sum over Pauli indices 1..=3 on the parties of S, identity elsewhere.
            let members: Vec<usize> = (0..n).filter(|&j| s >> j & 1 == 1).collect();
            let mut total = 0.0;
            for combo in 0..3usize.pow(members.len() as u32) {
                let mut flat = 0usize;
                let mut w = 1.0;
                let mut rest = combo;
                let mut pauli = [0usize; MAX_PARTIES];
                for &j in members.iter().rev() {
                    pauli[j] = rest % 3 + 1;
                    rest /= 3;
                }
                for j in 0..n {
                    flat = flat * 4 + pauli[j];
                    if pauli[j] > 0 {
                        w *= dirs[j][pauli[j] - 1];
                    }
                }
                total += w * data[flat];
            }
            *c = total;
        }
        for a in 0..no {
            let mut p = 0.0;
            for (s, c) in corr.iter().enumerate() {
                let flips = (0..n).filter(|&j| s >> j & 1 == 1 && sc.output_of(a, j) == 1).count();
                p += if flips % 2 == 0 { *c } else { -c };
            }
            probs[x * no + a] = (p / no as f64).max(0.0);
        }
    }
    Ok(BehaviorTable { scenario: sc, probs })
}

/// Sign patterns of the CHSH expressions `Σ s_xy E_xy` with an odd number of
/// minus signs; with `S ≥ −2` these are the 16 CHSH inequalities.
pub(crate) const CHSH_PATTERNS: [[f64; 4]; 8] = [
    [1.0, 1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0, 1.0],
    [-1.0, -1.0, -1.0, 1.0],
    [-1.0, -1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0, -1.0],
];

fn two_by_two(b: &BehaviorTable) -> Result<[f64; 4]> {
    if b.scenario.n != 2 || b.scenario.m != 2 {
        return Err(Error::DimensionMismatch("CHSH needs two parties with two settings".into()));
    }
    Ok([b.correlator(0, 3), b.correlator(1, 3), b.correlator(2, 3), b.correlator(3, 3)])
}

/// `E₀₀ + E₀₁ + E₁₀ − E₁₁`.
pub fn chsh_value(b: &BehaviorTable) -> Result<f64> {
    let e = two_by_two(b)?;
    Ok(e[0] + e[1] + e[2] - e[3])
}

/// Largest value over the CHSH variants and the index of the maximising pattern.
pub fn chsh_best(b: &BehaviorTable) -> Result<(f64, usize)> {
    let e = two_by_two(b)?;
    Ok(CHSH_PATTERNS
        .iter()
        .enumerate()
        .map(|(k, s)| (s.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>(), k))
        .fold((f64::NEG_INFINITY, 0), |acc, v| if v.0 > acc.0 { v } else { acc }))
}

/// `E₀₀ + E₀₁ + E₁₀ − E₁₁` for a two-qubit state with `E(u, v) = uᵀ T v`.
pub fn chsh_value_state(rho: &DensityMatrix, a: [[f64; 3]; 2], b: [[f64; 3]; 2]) -> Result<f64> {
    let t = correlation_matrix3(rho)?;
    let e = |u: &[f64; 3], v: &[f64; 3]| -> f64 { (0..3).map(|i| (0..3).map(|j| u[i] * t[i][j] * v[j]).sum::<f64>()).sum() };
    Ok(e(&a[0], &b[0]) + e(&a[0], &b[1]) + e(&a[1], &b[0]) - e(&a[1], &b[1]))
}

pub(crate) fn correlation_matrix3(rho: &DensityMatrix) -> Result<[[f64; 3]; 3]> {
    if !rho.is_qubits() || rho.n_sites() != 2 {
        return Err(Error::DimensionMismatch("need a two-qubit state".into()));
    }
    let t = bloch_decompose(rho).correlation_matrix()?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| t[(i, j)])))
}

/// Maximal CHSH value `2√(λ₁+λ₂)` over all settings, `λ` the two largest eigenvalues of `TᵀT`.
pub fn chsh_max(rho: &DensityMatrix) -> Result<f64> {
    let s = singular_decomposition(rho)?;
    Ok(2.0 * (s.values[0].powi(2) + s.values[1].powi(2)).sqrt())
}

struct Svd3 {
    values: [f64; 3],
    left: [[f64; 3]; 3],
    right: [[f64; 3]; 3],
}

fn singular_decomposition(rho: &DensityMatrix) -> Result<Svd3> {
    let t = correlation_matrix3(rho)?;
    let m = nalgebra::Matrix3::from_fn(|i, j| t[i][j]);
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(Svd3 {
        values: order.map(|k| svd.singular_values[k]),
        left: order.map(|k| [u[(0, k)], u[(1, k)], u[(2, k)]]),
        right: order.map(|k| [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]]),
    })
}

/// Settings reaching [`chsh_max`] for `E₀₀ + E₀₁ + E₁₀ − E₁₁`.
pub fn chsh_optimal_settings(rho: &DensityMatrix) -> Result<BlochSettings> {
    let s = singular_decomposition(rho)?;
    let theta = s.values[1].atan2(s.values[0]);
    let (c, sn) = (theta.cos(), theta.sin());
    let comb = |sign: f64| -> [f64; 3] { std::array::from_fn(|i| c * s.right[0][i] + sign * sn * s.right[1][i]) };
    Ok(vec![vec![s.left[0], s.left[1]], vec![comb(1.0), comb(-1.0)]])
}
