//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines are always shown; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use randmeas::bell::{self, BellSet, Scenario};
use randmeas::designs::{haar_frame_potential_mc, rng_from_seed, unitary_frame_potential_haar};
use randmeas::entdetect::{crit_r2, crit_r2_statistical, product_state_delta};
use randmeas::moments::{moment_exact_design, moment_mc, sector_lengths, MomentConfig, Normalisation, Observable};
use randmeas::ptmoments::{log_negativity, p3_oppt_check, p3_ppt_check, pt_moments_exact};
use randmeas::qstate::{random_mixed, random_pure, random_separable, state_factory, DensityMatrix, StateSpec};
use randmeas::rmprotocols::{purity_from_rm, simulate_records, PauliBasis, RecordSampler, ShadowCollection};

type Outcome = (bool, String);

fn st(s: &str) -> DensityMatrix {
    state_factory(&StateSpec::parse(s).unwrap()).unwrap()
}

fn werner(p: f64) -> DensityMatrix {
    state_factory(&StateSpec::Werner { p }).unwrap()
}

/// Smallest `p ∈ [0, 1]` at which the monotone predicate switches on.
fn threshold(pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn sector_length_values() -> Outcome {
    let s = sector_lengths(&st("ghz:3"));
    let mut ok = [0.0, 3.0, 4.0].iter().zip(&s[1..]).all(|(a, b)| (a - b).abs() < 1e-10);
    let mut full = Vec::new();
    for n in 2..=6 {
        let v = sector_lengths(&st(&format!("ghz:{n}")))[n];
        let expect = 2f64.powi(n as i32 - 1) + if n % 2 == 0 { 1.0 } else { 0.0 };
        ok &= (v - expect).abs() < 1e-10;
        full.push(format!("{v:.0}"));
    }
    (ok, format!("GHZ3 (S1,S2,S3) = ({:.3},{:.3},{:.3}); GHZ2..6 full sector = [{}]", s[1], s[2], s[3], full.join(",")))
}

fn werner_thresholds() -> Outcome {
    let r2 = threshold(|p| crit_r2(&werner(p)).unwrap().detected);
    let ln = threshold(|p| log_negativity(&werner(p), &[1]).unwrap() > 0.0);
    let band = [0.34, 0.45, 0.55, 1.0 / 3f64.sqrt()]
        .iter()
        .all(|&p| log_negativity(&werner(p), &[1]).unwrap() > 0.0 && !crit_r2(&werner(p)).unwrap().detected);
    let ok = (r2 - 1.0 / 3f64.sqrt()).abs() <= 1e-9 && (ln - 1.0 / 3.0).abs() <= 1e-9 && band;
    (ok, format!("R2 threshold {r2:.10}, log-negativity threshold {ln:.10}, undetected band reproduced: {band}"))
}

fn bell_pair_pv() -> Outcome {
    let r = bell::pv_estimate(&st("bell:phi+"), &Scenario::new(2, 2).unwrap(), 100_000, 31, BellSet::L).unwrap();
    let target = 2.0 * (PI - 3.0);
    ((r.pv - target).abs() <= 0.01, format!("P_V = {:.5} ± {:.5} (target {target:.5}, ±0.01)", r.pv, r.stderr))
}

fn tripartite_pv() -> Outcome {
    let sc = Scenario::new(3, 2).unwrap();
    let n = 20_000;
    let cases = [("ghz:3", BellSet::L, 0.7469, 0.015), ("w:3", BellSet::L, 0.5489, 0.015), ("ghz:3", BellSet::NS2, 0.1157, 0.01), ("w:3", BellSet::NS2, 0.0373, 0.01)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (state, set, target, tol) in cases {
        let r = bell::pv_estimate(&st(state), &sc, n, 47, set).unwrap();
        ok &= (r.pv - target).abs() <= tol && r.status.failed == 0;
        parts.push(format!("{state} {set}: {:.4}±{:.4} (target {target})", r.pv, r.stderr));
    }
    (ok, parts.join("; "))
}

fn single_setting_detection() -> Outcome {
    let delta = product_state_delta(3, Some(1000), 1).unwrap();
    let cfg = MomentConfig::new(2, 1).shots(1000);
    let obs = Observable::pauli_z(3);
    let rate = |state: &DensityMatrix, base: u64, runs: u64| {
        let hits = (0..runs)
            .filter(|&i| {
                let est = moment_mc(state, &obs, &cfg, base + i).unwrap();
                crit_r2_statistical(est.value, delta, 2.0).detected
            })
            .count();
        hits as f64 / runs as f64
    };
    let ghz = rate(&st("ghz:3"), 1_000_000, 10_000);
    // The exact rate (4.84%) sits close to the 5% bound, so this side uses 10⁵ runs.
    let product = rate(&st("product:3"), 2_000_000, 100_000);
    let ok = (ghz - 0.26).abs() <= 0.03 && product <= 0.05;
    (ok, format!("Δ = {delta:.4}; GHZ3 detection {ghz:.4} (26% ± 3%), |000⟩ false detections {product:.4} (≤ 5%)"))
}

fn purity_estimates() -> Outcome {
    let mut rng = rng_from_seed(606);
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let n = if i < 10 { 2 } else { 3 };
        let rho = random_mixed(&vec![2; n], 1 + (i as usize % 4), &mut rng);
        let rec = simulate_records(&rho, RecordSampler::Haar, 500, 150, 7000 + i).unwrap();
        let est = purity_from_rm(&rec, None).unwrap();
        worst = worst.max((est.value - rho.purity()).abs() / est.stderr);
    }
    (worst <= 3.0, format!("largest |estimate − tr ρ²| / σ over 20 states: {worst:.2} (≤ 3)"))
}

fn shadow_checks() -> Outcome {
    let mut rng = rng_from_seed(707);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rho = random_mixed(&[2], 2, &mut rng);
        let mut mean = randmeas::linalg::CMat::zeros(2, 2);
        for b in PauliBasis::ALL {
            for o in 0..2u8 {
                let p = rho.expectation(&b.projector(o)).unwrap();
                mean += b.shadow_factor(o) * randmeas::linalg::c(p / 3.0, 0.0);
            }
        }
        worst = worst.max(randmeas::linalg::max_abs_diff(&mean, rho.matrix()));
    }
    let rho = random_mixed(&[2, 2], 2, &mut rng);
    let rec = simulate_records(&rho, RecordSampler::Pauli, 100_000, 1, 708).unwrap();
    let mean = ShadowCollection::from_records(&rec).unwrap().mean_state().unwrap();
    let dist = 0.5 * randmeas::linalg::trace_norm_hermitian(&(&mean - rho.matrix())).unwrap();
    (worst <= 1e-10 && dist <= 0.05, format!("single-qubit analytic mean error {worst:.1e}; two-qubit trace distance {dist:.4} at M=1e5"))
}

fn pt_moment_criteria() -> Outcome {
    let mut rng = rng_from_seed(808);
    let (mut npt, mut ppt_hits, mut oppt_hits, mut counterexamples) = (0, 0, 0, 0);
    let mut k = 0usize;
    while npt < 1000 {
        let rho = random_mixed(&[2, 2], 1 + k % 4, &mut rng);
        k += 1;
        if rho.negativity(&[1]).unwrap() <= 1e-9 {
            continue;
        }
        npt += 1;
        let p = pt_moments_exact(&rho, &[1], 3).unwrap();
        let a = p3_ppt_check(p.p(2), p.p(3)).unwrap().detected;
        let b = p3_oppt_check(p.p(2), p.p(3)).unwrap().detected;
        ppt_hits += a as usize;
        oppt_hits += b as usize;
        counterexamples += (a && !b) as usize;
    }
    let mut false_hits = 0;
    for i in 0..1000 {
        let dims: &[usize] = if i % 2 == 0 { &[2, 2] } else { &[2, 3] };
        let rho = random_separable(dims, 1 + i % 6, &mut rng);
        let p = pt_moments_exact(&rho, &[1], 3).unwrap();
        false_hits += p3_oppt_check(p.p(2), p.p(3)).unwrap().detected as usize;
    }
    (
        counterexamples == 0 && false_hits == 0,
        format!("1000 NPT states: p3-PPT {ppt_hits}, p3-OPPT {oppt_hits}, counterexamples {counterexamples}; separable OPPT detections {false_hits}"),
    )
}

fn chsh_checks() -> Outcome {
    let max = bell::chsh_max(&st("bell:phi+")).unwrap();
    let mut rng = rng_from_seed(909);
    let (mut disagreements, mut violations) = (0, 0);
    for i in 0..10_000 {
        let rho = if i % 2 == 0 { random_pure(&[2, 2], &mut rng) } else { random_mixed(&[2, 2], 2, &mut rng) };
        let settings = bell::sample_settings(2, 2, &mut rng);
        let b = bell::behavior_from_state(&rho, &settings).unwrap();
        let chsh = bell::local_polytope_feasible(&b).unwrap().feasible;
        let lp = bell::membership(&b, BellSet::L).unwrap().feasible;
        disagreements += (chsh != lp) as usize;
        violations += (!chsh) as usize;
    }
    let ok = (max - 2.0 * 2f64.sqrt()).abs() <= 1e-10 && disagreements == 0;
    (ok, format!("chsh_max(φ+) = {max:.12}; LP vs CHSH disagreements {disagreements} / 10000 ({violations} violations)"))
}

fn w_class_saturation() -> Outcome {
    let mut ok = true;
    let mut vals = Vec::new();
    for n in 3..=6 {
        let s = sector_lengths(&st(&format!("w:{n}")))[n];
        ok &= (s - (5.0 - 4.0 / n as f64)).abs() <= 1e-10;
        vals.push(format!("{s:.6}"));
    }
    (ok, format!("S_n(W_n), n=3..6: [{}]", vals.join(", ")))
}

fn mabk_planar() -> Outcome {
    let eps = [0.0, 0.25, 0.5, 0.75, 0.85, 0.95];
    let pts = bell::planar_mc_check(2, 100_000, &eps, 1111).unwrap();
    let ok = pts.iter().all(|p| (p.empirical - p.analytic).abs() <= 0.02);
    let parts: Vec<String> = pts.iter().map(|p| format!("ε={}: {:.4} vs {:.4}", p.eps, p.empirical, p.analytic)).collect();
    (ok, parts.join("; "))
}

fn design_equivalence() -> Outcome {
    let mut rng = rng_from_seed(1212);
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let n = 1 + (i as usize % 4);
        let rho = random_mixed(&vec![2; n], 1 + (i as usize % 3), &mut rng);
        let exact = moment_exact_design(&rho, 2, Normalisation::SectorLength).unwrap().value;
        let mc = moment_mc(&rho, &Observable::pauli_z(n), &MomentConfig::new(2, 4000), 1300 + i).unwrap();
        worst = worst.max((mc.value - exact).abs() / mc.stderr);
    }
    let (fp, se) = haar_frame_potential_mc(2, 3, 200_000, &mut rng);
    let target = unitary_frame_potential_haar(2, 3).unwrap();
    let ok = worst <= 3.0 && (fp - target).abs() <= 3.0 * se && target == 5.0;
    (ok, format!("largest design/MC deviation {worst:.2}σ over 20 states; Haar frame potential (t=3,d=2) {fp:.4} ± {se:.4} vs {target}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("sector lengths of GHZ states", sector_length_values),
        ("Werner thresholds", werner_thresholds),
        ("P_V of a Bell pair (CHSH)", bell_pair_pv),
        ("P_V of GHZ3 and W3 (L, NS2)", tripartite_pv),
        ("single-setting GHZ3 detection", single_setting_detection),
        ("purity estimator", purity_estimates),
        ("classical shadows", shadow_checks),
        ("PT-moment criteria", pt_moment_criteria),
        ("CHSH maximum and LP agreement", chsh_checks),
        ("W-class sector length", w_class_saturation),
        ("MABK planar violation", mabk_planar),
        ("design/MC equivalence", design_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f();
        failed += (!ok) as usize;
        println!("{} criterion {:>2} ({name}) [{:.1}s]: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
