//! Named states. The textual forms accepted by [`StateSpec::parse`] are the
//! stable identifiers used on the command line:
//!
//! | spec | state |
//! |------|-------|
//! | `ghz:n[:d]` | `(1/√d) Σ_j |j…j⟩` |
//! | `w:n` | equal superposition of single excitations |
//! | `dicke:n:m` | equal superposition of weight-`m` strings |
//! | `bell:phi+` (`phi-`, `psi+`, `psi-`) | Bell states |
//! | `werner:p` | `p|ψ⁻⟩⟨ψ⁻| + (1−p)𝟙/4` |
//! | `isotropic:d:p` | `p|Φ_d⟩⟨Φ_d| + (1−p)𝟙/d²` |
//! | `belldiag:txx,tyy,tzz` | `(𝟙 + Σ T_jj σ_j⊗σ_j)/4` |
//! | `noisy-ghz:n:v` | `v|GHZ⟩⟨GHZ| + (1−v)𝟙/2ⁿ` |
//! | `cluster:n` | linear cluster state |
//! | `graph:n:0-1,1-2,…` | graph state for an edge list |
//! | `product:n[:d]` | `|0…0⟩` |
//! | `maxmixed:n[:d]` | `𝟙/dⁿ` |
//! | `random-pure:n:seed[:d]` | Haar-random pure state |
//! | `random-mixed:n:rank:seed[:d]` | induced-measure mixed state |
//! | `file:path` | JSON state file |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{random_mixed, random_pure, read_state_file, DensityMatrix};
use crate::designs::rng_from_seed;
use crate::linalg::{self, c, CMat, CVec};
use crate::{error::invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateSpec {
    Ghz { n: usize, d: usize },
    W { n: usize },
    Dicke { n: usize, m: usize },
    Bell(BellKind),
    Werner { p: f64 },
    Isotropic { d: usize, p: f64 },
    BellDiagonal { t: [f64; 3] },
    NoisyGhz { n: usize, v: f64 },
    Cluster { n: usize },
    Graph { n: usize, edges: Vec<(usize, usize)> },
    Product { n: usize, d: usize },
    MaxMixed { n: usize, d: usize },
    RandomPure { n: usize, d: usize, seed: u64 },
    RandomMixed { n: usize, d: usize, rank: usize, seed: u64 },
    File(String),
}

impl StateSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() { vec![] } else { rest.split(':').collect() };
        let num = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| invalid(format!("'{s}': missing argument {}", i + 1)))?
                .parse()
                .map_err(|_| invalid(format!("'{s}': argument {} is not an integer", i + 1)))
        };
        let real = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| invalid(format!("'{s}': missing argument {}", i + 1)))?
                .parse()
                .map_err(|_| invalid(format!("'{s}': argument {} is not a number", i + 1)))
        };
        let opt_d = |i: usize| -> Result<usize> { if args.len() > i { num(i) } else { Ok(2) } };
        let spec = match name {
            "ghz" => StateSpec::Ghz { n: num(0)?, d: opt_d(1)? },
            "w" => StateSpec::W { n: num(0)? },
            "dicke" => StateSpec::Dicke { n: num(0)?, m: num(1)? },
            "bell" => StateSpec::Bell(match args.first().copied() {
                Some("phi+") => BellKind::PhiPlus,
                Some("phi-") => BellKind::PhiMinus,
                Some("psi+") => BellKind::PsiPlus,
                Some("psi-") => BellKind::PsiMinus,
                _ => return Err(invalid(format!("'{s}': expected bell:phi+|phi-|psi+|psi-"))),
            }),
            "werner" => StateSpec::Werner { p: real(0)? },
            "isotropic" => StateSpec::Isotropic { d: num(0)?, p: real(1)? },
            "belldiag" => {
                let parts: Vec<f64> = rest
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| invalid(format!("'{s}': expected belldiag:txx,tyy,tzz")))?;
                if parts.len() != 3 {
                    return Err(invalid(format!("'{s}': expected three correlations")));
                }
                StateSpec::BellDiagonal { t: [parts[0], parts[1], parts[2]] }
            }
            "noisy-ghz" => StateSpec::NoisyGhz { n: num(0)?, v: real(1)? },
            "cluster" => StateSpec::Cluster { n: num(0)? },
            "graph" => {
                let n = num(0)?;
                let edges = args
                    .get(1)
                    .map(|e| {
                        e.split(',')
                            .filter(|x| !x.is_empty())
                            .map(|pair| {
                                let (a, b) = pair.split_once('-').ok_or_else(|| invalid(format!("bad edge '{pair}'")))?;
                                Ok((
                                    a.parse().map_err(|_| invalid(format!("bad edge '{pair}'")))?,
                                    b.parse().map_err(|_| invalid(format!("bad edge '{pair}'")))?,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                StateSpec::Graph { n, edges }
            }
            "product" => StateSpec::Product { n: num(0)?, d: opt_d(1)? },
            "maxmixed" => StateSpec::MaxMixed { n: num(0)?, d: opt_d(1)? },
            "random-pure" => StateSpec::RandomPure { n: num(0)?, seed: num(1)? as u64, d: opt_d(2)? },
            "random-mixed" => StateSpec::RandomMixed { n: num(0)?, rank: num(1)?, seed: num(2)? as u64, d: opt_d(3)? },
            "file" if !rest.is_empty() => StateSpec::File(rest.to_string()),
            _ => return Err(invalid(format!("unknown state spec '{s}'"))),
        };
        Ok(spec)
    }
}

impl FromStr for StateSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Ghz { n, d } => write!(f, "ghz:{n}:{d}"),
            StateSpec::W { n } => write!(f, "w:{n}"),
            StateSpec::Dicke { n, m } => write!(f, "dicke:{n}:{m}"),
            StateSpec::Bell(k) => write!(
                f,
                "bell:{}",
                match k {
                    BellKind::PhiPlus => "phi+",
                    BellKind::PhiMinus => "phi-",
                    BellKind::PsiPlus => "psi+",
                    BellKind::PsiMinus => "psi-",
                }
            ),
            StateSpec::Werner { p } => write!(f, "werner:{p}"),
            StateSpec::Isotropic { d, p } => write!(f, "isotropic:{d}:{p}"),
            StateSpec::BellDiagonal { t } => write!(f, "belldiag:{},{},{}", t[0], t[1], t[2]),
            StateSpec::NoisyGhz { n, v } => write!(f, "noisy-ghz:{n}:{v}"),
            StateSpec::Cluster { n } => write!(f, "cluster:{n}"),
            StateSpec::Graph { n, edges } => {
                let e: Vec<String> = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                write!(f, "graph:{n}:{}", e.join(","))
            }
            StateSpec::Product { n, d } => write!(f, "product:{n}:{d}"),
            StateSpec::MaxMixed { n, d } => write!(f, "maxmixed:{n}:{d}"),
            StateSpec::RandomPure { n, d, seed } => write!(f, "random-pure:{n}:{seed}:{d}"),
            StateSpec::RandomMixed { n, d, rank, seed } => write!(f, "random-mixed:{n}:{rank}:{seed}:{d}"),
            StateSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {p} outside [0, 1]")))
    }
}

fn check_sites(n: usize, min: usize) -> Result<()> {
    if n < min || n > 12 {
        return Err(invalid(format!("number of sites {n} outside [{min}, 12]")));
    }
    Ok(())
}

fn ket_from_fn(dims: Vec<usize>, f: impl Fn(&[usize]) -> f64) -> Result<DensityMatrix> {
    let dim: usize = dims.iter().product();
    let psi = CVec::from_fn(dim, |i, _| c(f(&linalg::digits(i, &dims)), 0.0));
    DensityMatrix::pure(dims, &psi)
}

fn bell_ket(kind: BellKind) -> CVec {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amp = match kind {
        BellKind::PhiPlus => [h, 0.0, 0.0, h],
        BellKind::PhiMinus => [h, 0.0, 0.0, -h],
        BellKind::PsiPlus => [0.0, h, h, 0.0],
        BellKind::PsiMinus => [0.0, h, -h, 0.0],
    };
    CVec::from_iterator(4, amp.iter().map(|&a| c(a, 0.0)))
}

fn graph_state(n: usize, edges: &[(usize, usize)]) -> Result<DensityMatrix> {
    check_sites(n, 1)?;
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
        return Err(invalid(format!("edge {a}-{b} invalid for {n} vertices")));
    }
    ket_from_fn(vec![2; n], |x| {
        let parity = edges.iter().filter(|&&(a, b)| x[a] == 1 && x[b] == 1).count();
        if parity % 2 == 0 { 1.0 } else { -1.0 }
    })
}

/// Builds the state described by `spec`.
pub fn state_factory(spec: &StateSpec) -> Result<DensityMatrix> {
    match spec {
        &StateSpec::Ghz { n, d } => {
            check_sites(n, 1)?;
            if d < 2 {
                return Err(invalid("local dimension must be ≥ 2"));
            }
            ket_from_fn(vec![d; n], |x| if x.iter().all(|&v| v == x[0]) { 1.0 } else { 0.0 })
        }
        &StateSpec::W { n } => {
            check_sites(n, 2)?;
            ket_from_fn(vec![2; n], |x| if x.iter().sum::<usize>() == 1 { 1.0 } else { 0.0 })
        }
        &StateSpec::Dicke { n, m } => {
            check_sites(n, 1)?;
            if m > n {
                return Err(invalid(format!("Dicke excitation number {m} > {n}")));
            }
            ket_from_fn(vec![2; n], |x| if x.iter().sum::<usize>() == m { 1.0 } else { 0.0 })
        }
        &StateSpec::Bell(kind) => DensityMatrix::pure(vec![2, 2], &bell_ket(kind)),
        &StateSpec::Werner { p } => {
            check_prob("p", p)?;
            DensityMatrix::pure(vec![2, 2], &bell_ket(BellKind::PsiMinus))?.with_white_noise(p)
        }
        &StateSpec::Isotropic { d, p } => {
            check_prob("p", p)?;
            if d < 2 {
                return Err(invalid("local dimension must be ≥ 2"));
            }
            ket_from_fn(vec![d, d], |x| if x[0] == x[1] { 1.0 } else { 0.0 })?.with_white_noise(p)
        }
        StateSpec::BellDiagonal { t } => {
            if t.iter().any(|x| x.abs() > 1.0) {
                return Err(invalid("Bell-diagonal correlations must satisfy |T_jj| ≤ 1"));
            }
            let p = linalg::paulis();
            let mut m = CMat::identity(4, 4);
            for j in 0..3 {
                m += linalg::kron(&p[j + 1], &p[j + 1]) * c(t[j], 0.0);
            }
            DensityMatrix::new(vec![2, 2], m * c(0.25, 0.0))
                .map_err(|e| invalid(format!("Bell-diagonal parameters {t:?} do not define a state ({e})")))
        }
        &StateSpec::NoisyGhz { n, v } => {
            check_prob("v", v)?;
            state_factory(&StateSpec::Ghz { n, d: 2 })?.with_white_noise(v)
        }
        &StateSpec::Cluster { n } => {
            let edges: Vec<(usize, usize)> = (1..n).map(|k| (k - 1, k)).collect();
            graph_state(n, &edges)
        }
        StateSpec::Graph { n, edges } => graph_state(*n, edges),
        &StateSpec::Product { n, d } => {
            check_sites(n, 1)?;
            Ok(DensityMatrix::ground(vec![d.max(2); n]))
        }
        &StateSpec::MaxMixed { n, d } => {
            check_sites(n, 1)?;
            Ok(DensityMatrix::maximally_mixed(vec![d.max(2); n]))
        }
        &StateSpec::RandomPure { n, d, seed } => {
            check_sites(n, 1)?;
            Ok(random_pure(&vec![d.max(2); n], &mut rng_from_seed(seed)))
        }
        &StateSpec::RandomMixed { n, d, rank, seed } => {
            check_sites(n, 1)?;
            Ok(random_mixed(&vec![d.max(2); n], rank.max(1), &mut rng_from_seed(seed)))
        }
        StateSpec::File(path) => read_state_file(path),
    }
}
