//! Soundness of the polytope membership tests and invariances of the
//! probability of violation.

use std::f64::consts::PI;

use proptest::prelude::*;

use randmeas::bell::{
    behavior_from_state, gmnl_feasible, local_polytope_feasible, membership, pv_estimate, sample_settings, BehaviorTable, BellSet,
    Scenario,
};
use randmeas::designs::{haar_unitary, rng_from_seed};
use randmeas::linalg::CMat;
use randmeas::qstate::{random_mixed, random_pure, state_factory, DensityMatrix, StateSpec};

fn st(s: &str) -> DensityMatrix {
    state_factory(&StateSpec::parse(s).unwrap()).unwrap()
}

/// Every deterministic local behaviour of the scenario.
fn deterministic_behaviours(sc: &Scenario) -> Vec<BehaviorTable> {
    let per_party = 1usize << sc.m;
    (0..per_party.pow(sc.n as u32))
        .map(|code| {
            let responses: Vec<Vec<u8>> =
                (0..sc.n).map(|j| (0..sc.m).map(|x| ((code / per_party.pow(j as u32)) >> x & 1) as u8).collect()).collect();
            BehaviorTable::deterministic(sc.clone(), &responses).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// An infeasible verdict carries a functional whose bound really is the
    /// local maximum and which the behaviour exceeds by at least 1e−7.
    #[test]
    fn infeasible_local_verdicts_carry_separating_functionals(n in 2usize..=3, m in 2usize..=3, pure in any::<bool>(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = if pure { random_pure(&vec![2; n], &mut rng) } else { random_mixed(&vec![2; n], 2, &mut rng) };
        let b = behavior_from_state(&rho, &sample_settings(n, m, &mut rng)).unwrap();
        let r = membership(&b, BellSet::L).unwrap();
        prop_assert!(!r.failed);
        if let Some(f) = r.functional {
            prop_assert!(!r.feasible);
            prop_assert!(f.gap() >= 1e-7);
            prop_assert!((f.evaluate(&b) - f.value).abs() < 1e-9);
            let local_max = deterministic_behaviours(&b.scenario).iter().map(|d| f.evaluate(d)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((local_max - f.bound).abs() < 1e-9);
        } else {
            prop_assert!(r.feasible);
        }
    }

    #[test]
    fn infeasible_tripartite_verdicts_separate(set in prop_oneof![Just(BellSet::NS2), Just(BellSet::S2)], seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let b = behavior_from_state(&random_pure(&[2, 2, 2], &mut rng), &sample_settings(3, 2, &mut rng)).unwrap();
        let r = gmnl_feasible(&b, set).unwrap();
        if let Some(f) = r.functional {
            prop_assert!(f.gap() >= 1e-7);
            // Deterministic local strategies lie in every set.
            for d in deterministic_behaviours(&b.scenario) {
                prop_assert!(f.evaluate(&d) <= f.bound + 1e-9);
            }
        }
    }

    /// Mixtures of local deterministic behaviours are always found feasible.
    #[test]
    fn local_mixtures_are_feasible(n in 2usize..=3, weights in proptest::collection::vec(0.0f64..1.0, 1..6), offset in 0usize..1000) {
        let sc = Scenario::new(n, 2).unwrap();
        let det = deterministic_behaviours(&sc);
        let total: f64 = weights.iter().sum::<f64>() + 1e-3;
        let mut probs = vec![0.0; det[0].probs.len()];
        for (i, w) in weights.iter().enumerate() {
            for (p, q) in probs.iter_mut().zip(&det[(offset + 7 * i) % det.len()].probs) {
                *p += (w + 1e-3 / weights.len() as f64) / total * q;
            }
        }
        let b = BehaviorTable::new(sc, probs).unwrap();
        prop_assert!(local_polytope_feasible(&b).unwrap().feasible);
        prop_assert!(membership(&b, BellSet::L).unwrap().feasible);
    }
}

#[test]
fn violation_probability_is_lu_invariant() {
    let mut rng = rng_from_seed(21);
    let sc2 = Scenario::new(2, 2).unwrap();
    let sc3 = Scenario::new(3, 2).unwrap();
    for (rho, sc, samples) in [(st("bell:phi+"), &sc2, 40_000), (random_pure(&[2, 2], &mut rng), &sc2, 40_000), (st("w:3"), &sc3, 1500)] {
        let us: Vec<CMat> = (0..rho.n_sites()).map(|_| haar_unitary(2, &mut rng).matrix().clone()).collect();
        let rot = rho.apply_local_unitaries(&us).unwrap();
        let a = pv_estimate(&rho, sc, samples, 1, BellSet::L).unwrap();
        let b = pv_estimate(&rot, sc, samples, 2, BellSet::L).unwrap();
        let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.pv - b.pv).abs() < 3.0 * sigma, "{} vs {} (σ = {sigma})", a.pv, b.pv);
    }
}

/// Two Bell pairs held by four parties: the behaviour is local iff both pair
/// marginals are, so `1 − P_V = (1 − P_V(φ⁺))² = (7 − 2π)²`.
#[test]
fn violation_probability_is_multiplicative_for_two_bell_pairs() {
    let phi = st("bell:phi+");
    let rho = DensityMatrix::product(&[phi.clone(), phi]).unwrap();
    let samples = 1200;
    let r = pv_estimate(&rho, &Scenario::new(4, 2).unwrap(), samples, 33, BellSet::L).unwrap();
    let expected = 1.0 - (7.0 - 2.0 * PI).powi(2);
    let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
    assert_eq!(r.status.failed, 0);
    assert!((r.pv - expected).abs() < 3.0 * sigma, "{} vs {expected}", r.pv);
}
