//! Extreme-point columns of the L, NS₂ and S₂ sets in correlator coordinates
//! and the membership tests built on them.
//!
//! A behaviour is encoded by `⟨∏_{j∈S} A_{j,x_j}⟩` for every setting tuple and
//! every nonempty subset `S`, plus a normalisation row. This encoding is
//! invertible for each tuple separately, so it also represents the signalling
//! block strategies needed for S₂.

use serde::{Deserialize, Serialize};

use super::lp::{self, Feasibility, LP_TOL, MAX_COLUMNS};
use super::{chsh_best, BehaviorTable, BellSet, Scenario, CHSH_PATTERNS};
use crate::{Error, Result};

/// The three ways of splitting three parties into a pair and a single party.
const BIPARTITIONS: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];

/// A linear functional on correlators that separates a behaviour from a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub set: BellSet,
    /// Coefficients in correlator row order (tuple-major, subset bitmask minor),
    /// scaled so that the largest magnitude is 1.
    pub coefficients: Vec<f64>,
    /// Maximum of the functional over the extreme points of the set.
    pub bound: f64,
    /// Value on the tested behaviour.
    pub value: f64,
}

impl BellFunctional {
    pub fn gap(&self) -> f64 {
        self.value - self.bound
    }

    pub fn evaluate(&self, b: &BehaviorTable) -> f64 {
        self.coefficients.iter().zip(b.correlators()).map(|(c, e)| c * e).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub feasible: bool,
    /// Present when the behaviour lies outside the set.
    pub functional: Option<BellFunctional>,
    /// The LP hit its pivot budget; `feasible` is then reported conservatively as true.
    pub failed: bool,
}

/// Extreme points of one set for one scenario, each with a trailing normalisation entry.
#[derive(Debug, Clone)]
pub(crate) struct Columns {
    pub set: BellSet,
    pub scenario: Scenario,
    pub cols: Vec<Vec<f64>>,
}

fn column_count(sc: &Scenario, set: BellSet) -> Option<u128> {
    let two_m = 1u128 << sc.m;
    match set {
        BellSet::L => two_m.checked_pow(sc.n as u32),
        BellSet::S2 => 4u128.checked_pow((sc.m * sc.m) as u32).map(|x| 3 * x * two_m),
        BellSet::NS2 => Some(3 * 24 * two_m),
    }
}

impl Columns {
    pub fn new(sc: &Scenario, set: BellSet) -> Result<Self> {
        if set != BellSet::L && sc.n != 3 {
            return Err(Error::Unsupported(format!("{set} membership is implemented for three parties (got n={})", sc.n)));
        }
        if set == BellSet::NS2 && sc.m != 2 {
            return Err(Error::Unsupported(format!("NS2 membership is implemented for m=2 (got m={})", sc.m)));
        }
        match column_count(sc, set) {
            Some(c) if c <= MAX_COLUMNS as u128 => {}
            _ => return Err(Error::Unsupported(format!("{set} for n={}, m={} needs more than {MAX_COLUMNS} strategies", sc.n, sc.m))),
        }
        let cols = match set {
            BellSet::L => local_columns(sc),
            BellSet::S2 => svetlichny_columns(sc),
            BellSet::NS2 => ns2_columns(sc),
        };
        Ok(Self { set, scenario: sc.clone(), cols })
    }
}

/// Builds a column from per-tuple outcome signs (`±1` per party) of a deterministic strategy.
fn deterministic_column(sc: &Scenario, outcome: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut col = vec![0.0; sc.n_correlators() + 1];
    for x in 0..sc.n_inputs() {
        let signs: Vec<f64> = (0..sc.n).map(|j| outcome(x, j)).collect();
        for s in 1..sc.n_outputs() {
            col[sc.row(x, s)] = (0..sc.n).filter(|&j| s >> j & 1 == 1).map(|j| signs[j]).product();
        }
    }
    col[sc.n_correlators()] = 1.0;
    col
}

fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn local_columns(sc: &Scenario) -> Vec<Vec<f64>> {
    let per_party = 1usize << sc.m;
    (0..per_party.pow(sc.n as u32))
        .map(|lambda| {
            let resp: Vec<usize> = (0..sc.n).map(|j| (lambda / per_party.pow((sc.n - 1 - j) as u32)) % per_party).collect();
            deterministic_column(sc, |x, j| sign(resp[j] >> sc.input_of(x, j) & 1))
        })
        .collect()
}

fn svetlichny_columns(sc: &Scenario) -> Vec<Vec<f64>> {
    let m = sc.m;
    let pair_strategies = 4usize.pow((m * m) as u32);
    let mut out = Vec::new();
    for &(i, j, k) in &BIPARTITIONS {
        for f in 0..pair_strategies {
            for g in 0..1usize << m {
                out.push(deterministic_column(sc, |x, p| {
                    let (xi, xj) = (sc.input_of(x, i), sc.input_of(x, j));
                    let pair = (f / 4usize.pow((xi * m + xj) as u32)) % 4;
                    if p == i {
                        sign(pair & 1)
                    } else if p == j {
                        sign(pair >> 1)
                    } else {
                        debug_assert_eq!(p, k);
                        sign(g >> sc.input_of(x, k) & 1)
                    }
                }));
            }
        }
    }
    out
}

/// Correlators `(⟨A_x⟩, ⟨B_y⟩, ⟨A_x B_y⟩)` of the 24 extreme nonsignalling boxes
/// with two inputs and two outputs: 16 deterministic and 8 PR boxes.
fn ns_boxes() -> Vec<[[f64; 4]; 3]> {
    let mut out = Vec::with_capacity(24);
    for code in 0..16usize {
        let a = [sign(code & 1), sign(code >> 1 & 1)];
        let b = [sign(code >> 2 & 1), sign(code >> 3 & 1)];
        out.push([
            [a[0], a[1], 0.0, 0.0],
            [b[0], b[1], 0.0, 0.0],
            std::array::from_fn(|xy| a[xy >> 1] * b[xy & 1]),
        ]);
    }
    for code in 0..8usize {
        let (al, be, ga) = (code & 1, code >> 1 & 1, code >> 2 & 1);
        out.push([[0.0; 4], [0.0; 4], std::array::from_fn(|xy| {
            let (x, y) = (xy >> 1, xy & 1);
            sign((x * y) ^ (al * x) ^ (be * y) ^ ga)
        })]);
    }
    out
}

fn ns2_columns(sc: &Scenario) -> Vec<Vec<f64>> {
    let boxes = ns_boxes();
    let mut out = Vec::new();
    for &(i, j, k) in &BIPARTITIONS {
        for bx in &boxes {
            for g in 0..1usize << sc.m {
                let mut col = vec![0.0; sc.n_correlators() + 1];
                for x in 0..sc.n_inputs() {
                    let (xi, xj, xk) = (sc.input_of(x, i), sc.input_of(x, j), sc.input_of(x, k));
                    let c = sign(g >> xk & 1);
                    for s in 1..sc.n_outputs() {
                        let pair = match (s >> i & 1, s >> j & 1) {
                            (0, 0) => 1.0,
                            (1, 0) => bx[0][xi],
                            (0, 1) => bx[1][xj],
                            _ => bx[2][xi * 2 + xj],
                        };
                        col[sc.row(x, s)] = pair * if s >> k & 1 == 1 { c } else { 1.0 };
                    }
                }
                col[sc.n_correlators()] = 1.0;
                out.push(col);
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LP membership against precomputed columns.
pub(crate) fn membership_with(b: &BehaviorTable, cols: &Columns) -> Result<Membership> {
    if b.scenario != cols.scenario {
        return Err(Error::DimensionMismatch("behaviour and columns from different scenarios".into()));
    }
    let mut rhs = b.correlators();
    rhs.push(1.0);
    match lp::feasibility(&cols.cols, &rhs) {
        Feasibility::Feasible { .. } => Ok(Membership { feasible: true, functional: None, failed: false }),
        Feasibility::IterationLimit => Ok(Membership { feasible: true, functional: None, failed: true }),
        Feasibility::Infeasible { certificate, .. } => {
            let r = rhs.len() - 1;
            let scale = certificate[..r].iter().fold(0.0f64, |a, y| a.max(y.abs()));
            let coefficients: Vec<f64> = certificate[..r].iter().map(|y| y / scale).collect();
            let bound = cols.cols.iter().map(|c| dot(&coefficients, &c[..r])).fold(f64::NEG_INFINITY, f64::max);
            let value = dot(&coefficients, &rhs[..r]);
            Ok(Membership { feasible: false, functional: Some(BellFunctional { set: cols.set, coefficients, bound, value }), failed: false })
        }
    }
}

/// LP membership test in `set`, without the CHSH shortcut.
pub fn membership(b: &BehaviorTable, set: BellSet) -> Result<Membership> {
    membership_with(b, &Columns::new(&b.scenario, set)?)
}

/// Exhaustive CHSH test for nonsignalling behaviours with `n = m = 2`.
pub(crate) fn chsh_membership(b: &BehaviorTable) -> Result<Membership> {
    let (best, k) = chsh_best(b)?;
    if best <= 2.0 + LP_TOL {
        return Ok(Membership { feasible: true, functional: None, failed: false });
    }
    let sc = &b.scenario;
    let mut coefficients = vec![0.0; sc.n_correlators()];
    for (xy, s) in CHSH_PATTERNS[k].iter().enumerate() {
        coefficients[sc.row(xy, 3)] = *s;
    }
    Ok(Membership { feasible: false, functional: Some(BellFunctional { set: BellSet::L, coefficients, bound: 2.0, value: best }), failed: false })
}

/// Bell-local membership. For two parties with two settings and a
/// nonsignalling behaviour the 16 CHSH inequalities decide exactly; otherwise
/// an LP over all `(2^m)ⁿ` deterministic strategies is solved.
pub fn local_polytope_feasible(b: &BehaviorTable) -> Result<Membership> {
    if b.scenario.n == 2 && b.scenario.m == 2 && b.signalling_residual() < LP_TOL {
        return chsh_membership(b);
    }
    membership(b, BellSet::L)
}

/// Membership in S₂ or NS₂ for three parties.
pub fn gmnl_feasible(b: &BehaviorTable, set: BellSet) -> Result<Membership> {
    if set == BellSet::L {
        return Err(Error::InvalidParameter("gmnl_feasible tests S2 or NS2; use local_polytope_feasible for L".into()));
    }
    membership(b, set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{behavior_from_state, chsh_optimal_settings, BlochSettings};
    use crate::designs::{haar_bloch_vector, rng_from_seed};
    use crate::qstate::{random_mixed, state_factory, DensityMatrix, StateSpec};

    fn st(s: &str) -> DensityMatrix {
        state_factory(&StateSpec::parse(s).unwrap()).unwrap()
    }

    fn random_settings(n: usize, m: usize, seed: u64) -> BlochSettings {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| (0..m).map(|_| haar_bloch_vector(&mut rng)).collect()).collect()
    }

    #[test]
    fn column_counts() {
        let sc = Scenario::new(3, 2).unwrap();
        assert_eq!(Columns::new(&sc, BellSet::L).unwrap().cols.len(), 64);
        assert_eq!(Columns::new(&sc, BellSet::S2).unwrap().cols.len(), 3072);
        assert_eq!(Columns::new(&sc, BellSet::NS2).unwrap().cols.len(), 288);
        let big = Scenario::new(3, 3).unwrap();
        assert!(Columns::new(&big, BellSet::S2).unwrap_err().is_unsupported());
        assert!(Columns::new(&big, BellSet::NS2).unwrap_err().is_unsupported());
        assert!(Columns::new(&Scenario::new(2, 2).unwrap(), BellSet::S2).unwrap_err().is_unsupported());
    }

    #[test]
    fn deterministic_and_mixed_behaviours_are_local() {
        for (n, m) in [(2, 2), (2, 3), (3, 2)] {
            let sc = Scenario::new(n, m).unwrap();
            for code in [0usize, 5, 17, 42] {
                let resp: Vec<Vec<u8>> = (0..n).map(|j| (0..m).map(|x| ((code >> (j * m + x)) & 1) as u8).collect()).collect();
                let b = BehaviorTable::deterministic(sc.clone(), &resp).unwrap();
                assert!(membership(&b, BellSet::L).unwrap().feasible);
                if n == 3 {
                    assert!(gmnl_feasible(&b, BellSet::NS2).unwrap().feasible);
                    assert!(gmnl_feasible(&b, BellSet::S2).unwrap().feasible);
                }
            }
            let r = DensityMatrix::maximally_mixed(vec![2; n]);
            for seed in 0..5 {
                let b = behavior_from_state(&r, &random_settings(n, m, seed)).unwrap();
                assert!(local_polytope_feasible(&b).unwrap().feasible);
            }
        }
    }

    #[test]
    fn optimal_chsh_settings_are_nonlocal_with_certificate() {
        let r = st("bell:phi+");
        let b = behavior_from_state(&r, &chsh_optimal_settings(&r).unwrap()).unwrap();
        let lp = membership(&b, BellSet::L).unwrap();
        assert!(!lp.feasible);
        let f = lp.functional.unwrap();
        assert!(f.gap() > 1e-7);
        assert!((f.evaluate(&b) - f.value).abs() < 1e-12);
        // The certificate and CHSH agree on the same behaviour.
        let c = chsh_membership(&b).unwrap().functional.unwrap();
        assert!((c.value - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        // Scaled to unit coefficients, no local functional exceeds the CHSH gap.
        assert!(f.gap() <= c.gap() + 1e-9);
    }

    #[test]
    fn lp_agrees_with_chsh_check() {
        let mut rng = rng_from_seed(11);
        let mut violations = 0;
        for seed in 0..300 {
            let r = random_mixed(&[2, 2], 1 + seed as usize % 2, &mut rng);
            let b = behavior_from_state(&r, &random_settings(2, 2, 1000 + seed)).unwrap();
            let lp = membership(&b, BellSet::L).unwrap();
            let ch = chsh_membership(&b).unwrap();
            assert_eq!(lp.feasible, ch.feasible, "seed {seed}");
            if let Some(f) = lp.functional {
                violations += 1;
                assert!(f.gap() >= 1e-7);
            }
        }
        assert!(violations > 0);
    }

    #[test]
    fn svetlichny_optimal_ghz_is_genuinely_nonlocal() {
        // Svetlichny-optimal settings on GHZ₃: the Svetlichny functional reaches 4√2 > 4.
        let ghz = st("ghz:3");
        let (x, y) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let b_dirs = vec![[d, -d, 0.0], [d, d, 0.0]];
        let settings = vec![vec![x, y], vec![x, y], b_dirs];
        let b = behavior_from_state(&ghz, &settings).unwrap();
        // S = Σ_{xyz} (−1)^{⌊(x+y+z)/2⌋}·E_xyz·(sign pattern) evaluated by brute force over relabellings.
        let sc = &b.scenario;
        let mut best = 0.0f64;
        for flip in 0..8usize {
            let mut s = 0.0;
            for xt in 0..8 {
                let (a, bb, c) = (sc.input_of(xt, 0), sc.input_of(xt, 1), sc.input_of(xt, 2));
                let idx = [a, bb, c];
                let eff: usize = (0..3).map(|j| idx[j] ^ (flip >> j & 1)).sum();
                let coeff = if (eff / 2) % 2 == 0 { 1.0 } else { -1.0 };
                s += coeff * b.correlator(xt, 7);
            }
            best = best.max(s.abs());
        }
        assert!(best > 4.0 + 1e-6, "Svetlichny value {best}");
        let s2 = gmnl_feasible(&b, BellSet::S2).unwrap();
        assert!(!s2.feasible && s2.functional.unwrap().gap() > 1e-7);
        assert!(!gmnl_feasible(&b, BellSet::NS2).unwrap().feasible);
        assert!(!membership(&b, BellSet::L).unwrap().feasible);
    }

    #[test]
    fn inclusion_chain_on_random_behaviours() {
        let ghz = st("ghz:3");
        let w = st("w:3");
        for seed in 0..60 {
            let r = if seed % 2 == 0 { &ghz } else { &w };
            let b = behavior_from_state(r, &random_settings(3, 2, 500 + seed)).unwrap();
            let l = membership(&b, BellSet::L).unwrap().feasible;
            let ns = gmnl_feasible(&b, BellSet::NS2).unwrap().feasible;
            let s = gmnl_feasible(&b, BellSet::S2).unwrap().feasible;
            assert!(!s <= !ns && !ns <= !l, "seed {seed}: L {l}, NS2 {ns}, S2 {s}");
        }
    }

    #[test]
    fn pr_box_columns_are_nonsignalling_but_nonlocal() {
        let sc = Scenario::new(3, 2).unwrap();
        let ns = Columns::new(&sc, BellSet::NS2).unwrap();
        for col in &ns.cols {
            let mut probs = vec![0.0; 64];
            for x in 0..8 {
                for a in 0..8 {
                    let mut p = 1.0;
                    for s in 1..8 {
                        let flips = (0..3).filter(|&j| s >> j & 1 == 1 && sc.output_of(a, j) == 1).count();
                        p += if flips % 2 == 0 { col[sc.row(x, s)] } else { -col[sc.row(x, s)] };
                    }
                    probs[x * 8 + a] = p / 8.0;
                }
            }
            let b = BehaviorTable::new(sc.clone(), probs).unwrap();
            assert!(b.signalling_residual() < 1e-12);
            assert!(gmnl_feasible(&b, BellSet::S2).unwrap().feasible);
        }
    }
}
