//! Random sampling on the unitary group and the Bloch sphere, exact design sets,
//! frame potentials, the two-fold twirl and permutation operators.
//!
//! Reproducibility: every stochastic routine takes its RNG explicitly. Parallel
//! loops derive one ChaCha stream per task from a master seed with [`task_rng`],
//! so results depend on `(seed, task index)` only, never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, C64, ONE};
use crate::{Error, Result};

pub type SimRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `task` of the master seed.
pub fn task_rng(seed: u64, task: u64) -> SimRng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(task);
    r
}

/// A `d × d` unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    mat: CMat,
}

impl LocalUnitary {
    pub fn new(mat: CMat) -> Result<Self> {
        if !linalg::is_unitary(&mat, 1e-10) {
            return Err(Error::InvalidParameter("matrix is not unitary".into()));
        }
        Ok(Self { mat })
    }

    pub fn identity(d: usize) -> Self {
        Self { mat: CMat::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    CMat::from_fn(d, d, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> LocalUnitary {
    assert!(d >= 1);
    let qr = ginibre(d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for k in 0..d {
        let rk = r[(k, k)];
        let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { ONE };
        for i in 0..d {
            u[(i, k)] *= phase;
        }
    }
    LocalUnitary { mat: u }
}

/// Uniform point on S².
pub fn haar_bloch_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Qubit unitary with `U|0⟩ = |u⟩`, hence `U σ_z U† = u·σ`.
pub fn rotation_to(u: &[f64; 3]) -> CMat {
    let theta = u[2].clamp(-1.0, 1.0).acos();
    let phi = u[1].atan2(u[0]);
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::from_polar(1.0, phi);
    CMat::from_row_slice(2, 2, &[c(ch, 0.0), -e.conj() * sh, e * sh, c(ch, 0.0)])
}

/// Measurement setting of one party.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    /// Rotation `U`: a local observable `M` is measured as `U M U†`.
    Unitary(LocalUnitary),
    /// Qubit direction `u`: `σ_z` is measured as `u·σ`.
    Bloch([f64; 3]),
}

impl Setting {
    pub fn bloch(u: [f64; 3]) -> Result<Self> {
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("Bloch vector norm {n} ≠ 1")));
        }
        Ok(Setting::Bloch(u))
    }

    pub fn dim(&self) -> usize {
        match self {
            Setting::Unitary(u) => u.dim(),
            Setting::Bloch(_) => 2,
        }
    }

    /// The rotation applied to observables.
    pub fn unitary(&self) -> CMat {
        match self {
            Setting::Unitary(u) => u.matrix().clone(),
            Setting::Bloch(v) => rotation_to(v),
        }
    }

    /// `U M U†`. For Bloch settings and `M = σ_z` this is exactly `u·σ`.
    pub fn rotate(&self, m: &CMat) -> CMat {
        let u = self.unitary();
        &u * m * u.adjoint()
    }
}

/// One setting per party.
pub type SettingTuple = Vec<Setting>;

/// Haar-random unitary settings for the given local dims.
pub fn random_settings<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> SettingTuple {
    dims.iter().map(|&d| Setting::Unitary(haar_unitary(d, rng))).collect()
}

/// Uniform Bloch-vector settings for `n` qubits.
pub fn random_bloch_settings<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SettingTuple {
    (0..n).map(|_| Setting::Bloch(haar_bloch_vector(rng))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Spherical,
    State,
    Unitary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignElements {
    Vectors(Vec<[f64; 3]>),
    States(Vec<CVec>),
    Unitaries(Vec<CMat>),
}

/// A finite set whose averages reproduce Haar averages up to degree `strength`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSet {
    pub kind: DesignKind,
    pub strength: usize,
    pub elements: DesignElements,
}

#[derive(Serialize)]
struct DesignExport {
    kind: DesignKind,
    strength: usize,
    vectors: Option<Vec<[f64; 3]>>,
    states: Option<Vec<Vec<[f64; 2]>>>,
    unitaries: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl DesignSet {
    /// JSON export for audit.
    pub fn to_json(&self) -> String {
        let pair = |z: &C64| [z.re, z.im];
        let mut e = DesignExport { kind: self.kind, strength: self.strength, vectors: None, states: None, unitaries: None };
        match &self.elements {
            DesignElements::Vectors(v) => e.vectors = Some(v.clone()),
            DesignElements::States(s) => e.states = Some(s.iter().map(|v| v.iter().map(pair).collect()).collect()),
            DesignElements::Unitaries(u) => {
                e.unitaries = Some(
                    u.iter()
                        .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()).collect())
                        .collect(),
                )
            }
        }
        serde_json::to_string(&e).expect("design export is serialisable")
    }

    /// Frame potential of the set at its declared strength.
    pub fn frame_potential(&self) -> f64 {
        self.frame_potential_at(self.strength)
    }

    pub fn frame_potential_at(&self, t: usize) -> f64 {
        match &self.elements {
            DesignElements::Vectors(v) => spherical_frame_potential(v, t),
            DesignElements::States(s) => frame_potential_states(s, t),
            DesignElements::Unitaries(u) => frame_potential_unitaries(u, t),
        }
    }
}

/// `±e_x, ±e_y, ±e_z`, a spherical 3-design.
pub fn spherical_design_23() -> DesignSet {
    let v = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    DesignSet { kind: DesignKind::Spherical, strength: 3, elements: DesignElements::Vectors(v) }
}

fn is_prime(d: usize) -> bool {
    d >= 2 && (2..d).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Complete set of `d + 1` mutually unbiased bases for prime `d`, flattened to
/// `d(d+1)` vectors (basis-major). This is a complex projective 2-design.
pub fn mub_set(d: usize) -> Result<DesignSet> {
    if !is_prime(d) {
        return Err(Error::Unsupported(format!("MUBs implemented for prime d only, got {d}")));
    }
    let mut states = Vec::with_capacity(d * (d + 1));
    for j in 0..d {
        let mut e = CVec::zeros(d);
        e[j] = ONE;
        states.push(e);
    }
    let norm = 1.0 / (d as f64).sqrt();
    if d == 2 {
        // Eigenbases of σ_x and σ_x σ_z.
        let h = norm;
        for v in [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)], [c(h, 0.0), c(0.0, h)], [c(h, 0.0), c(0.0, -h)]] {
            states.push(CVec::from_row_slice(&v));
        }
    } else {
        // |ψ_{a,b}⟩ = d^{-1/2} Σ_j ω^{a j² + b j} |j⟩.
        for a in 0..d {
            for b in 0..d {
                states.push(CVec::from_fn(d, |j, _| {
                    let k = (a * j * j + b * j) % d;
                    C64::from_polar(norm, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
                }));
            }
        }
    }
    Ok(DesignSet { kind: DesignKind::State, strength: 2, elements: DesignElements::States(states) })
}

fn spherical_frame_potential(v: &[[f64; 3]], t: usize) -> f64 {
    let n = v.len() as f64;
    let mut s = 0.0;
    for a in v {
        for b in v {
            s += (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).powi(2 * t as i32);
        }
    }
    s / (n * n)
}

/// `|S|⁻² Σ_{i,j} |⟨ψ_i|ψ_j⟩|^{2t}`.
pub fn frame_potential_states(states: &[CVec], t: usize) -> f64 {
    assert!(!states.is_empty());
    let n = states.len() as f64;
    let mut s = 0.0;
    for a in states {
        for b in states {
            s += a.dotc(b).norm_sqr().powi(t as i32);
        }
    }
    s / (n * n)
}

/// `|S|⁻² Σ_{i,j} |tr(U_i† U_j)|^{2t}`.
pub fn frame_potential_unitaries(us: &[CMat], t: usize) -> f64 {
    assert!(!us.is_empty());
    let n = us.len() as f64;
    let mut s = 0.0;
    for a in us {
        for b in us {
            s += linalg::trace_product(&a.adjoint(), b).norm_sqr().powi(t as i32);
        }
    }
    s / (n * n)
}

/// Generic entry point: states or unitaries.
pub fn frame_potential(elements: &DesignElements, t: usize) -> f64 {
    match elements {
        DesignElements::Vectors(v) => spherical_frame_potential(v, t),
        DesignElements::States(s) => frame_potential_states(s, t),
        DesignElements::Unitaries(u) => frame_potential_unitaries(u, t),
    }
}

/// Minimal state frame potential `1 / C(d+t−1, t)`.
pub fn state_frame_potential_min(d: usize, t: usize) -> f64 {
    1.0 / linalg::binomial(d + t - 1, t)
}

/// Haar unitary frame potential: `t!` for `d ≥ t`, `(2t)!/(t!(t+1)!)` for `d = 2`.
pub fn unitary_frame_potential_haar(d: usize, t: usize) -> Option<f64> {
    if d >= t {
        Some(linalg::factorial(t))
    } else if d == 2 {
        Some(linalg::factorial(2 * t) / (linalg::factorial(t) * linalg::factorial(t + 1)))
    } else {
        None
    }
}

/// Monte Carlo estimate of the Haar frame potential, `E |tr W|^{2t}` with `W`
/// Haar (equal to `E |tr(U†V)|^{2t}` by invariance). Returns `(mean, stderr)`.
pub fn haar_frame_potential_mc<R: Rng + ?Sized>(d: usize, t: usize, samples: usize, rng: &mut R) -> (f64, f64) {
    let xs: Vec<f64> = (0..samples)
        .map(|_| linalg::trace(haar_unitary(d, rng).matrix()).norm_sqr().powi(t as i32))
        .collect();
    mean_stderr(&xs)
}

pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `W_π |i_1 … i_t⟩ = |i_{π(1)} … i_{π(t)}⟩` on `(C^d)^{⊗t}`; `perm` is 0-based.
pub fn permutation_operator(perm: &[usize], d: usize) -> Result<CMat> {
    let t = perm.len();
    let mut seen = vec![false; t];
    for &p in perm {
        if p >= t || seen[p] {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let dims = vec![d; t];
    let dim = d.pow(t as u32);
    let mut w = CMat::zeros(dim, dim);
    for input in 0..dim {
        let ds = linalg::digits(input, &dims);
        let out: Vec<usize> = perm.iter().map(|&p| ds[p]).collect();
        w[(linalg::undigits(&out, &dims), input)] = ONE;
    }
    Ok(w)
}

/// SWAP on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> CMat {
    permutation_operator(&[1, 0], d).expect("valid permutation")
}

/// Cyclic shift with `tr[(X_1 ⊗ … ⊗ X_t) W_cyc] = tr(X_1 X_2 … X_t)`.
pub fn cyclic_operator(d: usize, t: usize) -> CMat {
    let perm: Vec<usize> = (0..t).map(|k| (k + 1) % t).collect();
    permutation_operator(&perm, d).expect("valid permutation")
}

/// Closed-form `∫ dU (U⊗U) X (U⊗U)†` for `X` on `C^d ⊗ C^d`.
pub fn twirl_exact_2(x: &CMat, d: usize) -> Result<CMat> {
    if x.nrows() != d * d || !x.is_square() {
        return Err(Error::DimensionMismatch("twirl input must be d²×d²".into()));
    }
    let s = swap_operator(d);
    let trx = linalg::trace(x);
    let trxs = linalg::trace_product(x, &s);
    let df = c(d as f64, 0.0);
    let norm = c(1.0 / (d * d - 1) as f64, 0.0);
    let id = CMat::identity(d * d, d * d);
    Ok((id * (trx - trxs / df) - s * (trx / df - trxs)) * norm)
}

/// Monte Carlo two-fold twirl over `samples` Haar unitaries.
pub fn twirl_mc_2<R: Rng + ?Sized>(x: &CMat, d: usize, samples: usize, rng: &mut R) -> CMat {
    let mut acc = CMat::zeros(d * d, d * d);
    for _ in 0..samples {
        let u = haar_unitary(d, rng);
        let uu = linalg::kron(u.matrix(), u.matrix());
        acc += &uu * x * uu.adjoint();
    }
    acc / c(samples as f64, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{bloch_operator, max_abs_diff, pauli_z, trace_product};

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = rng_from_seed(1);
        for d in 2..=5 {
            for _ in 0..20 {
                assert!(linalg::is_unitary(haar_unitary(d, &mut rng).matrix(), 1e-12));
            }
        }
    }

    #[test]
    fn first_moment_of_conjugation() {
        let mut rng = rng_from_seed(2);
        let x = CMat::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64));
        let n = 20_000;
        let mut acc = CMat::zeros(3, 3);
        for _ in 0..n {
            let u = haar_unitary(3, &mut rng);
            acc += u.matrix() * &x * u.matrix().adjoint();
        }
        acc /= c(n as f64, 0.0);
        let target = CMat::identity(3, 3) * (linalg::trace(&x) / c(3.0, 0.0));
        // Per-entry standard deviation is bounded by ‖X‖_F/√n ≈ 0.07; 3σ ≈ 0.2.
        assert!(max_abs_diff(&acc, &target) < 0.2);
    }

    #[test]
    fn bloch_component_moments() {
        let mut rng = rng_from_seed(3);
        let n = 30_000;
        let mut m1 = [0.0; 3];
        let mut m2 = [0.0; 3];
        for _ in 0..n {
            let v = haar_bloch_vector(&mut rng);
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0).abs() < 1e-12);
            for k in 0..3 {
                m1[k] += v[k] / n as f64;
                m2[k] += v[k] * v[k] / n as f64;
            }
        }
        // sd of v_k is 1/√3, of v_k² is √(1/5 − 1/9) ≈ 0.298.
        for k in 0..3 {
            assert!(m1[k].abs() < 3.0 * (1.0f64 / 3.0).sqrt() / (n as f64).sqrt());
            assert!((m2[k] - 1.0 / 3.0).abs() < 3.0 * 0.2981 / (n as f64).sqrt());
        }
    }

    #[test]
    fn rotation_maps_z_to_direction() {
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let u = haar_bloch_vector(&mut rng);
            let s = Setting::bloch(u).unwrap();
            assert!(max_abs_diff(&s.rotate(&pauli_z()), &bloch_operator(&u)) < 1e-12);
        }
        let down = Setting::Bloch([0.0, 0.0, -1.0]);
        assert!(max_abs_diff(&down.rotate(&pauli_z()), &(pauli_z() * c(-1.0, 0.0))) < 1e-12);
        assert!(Setting::bloch([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn spherical_design_polynomials() {
        let design = spherical_design_23();
        let DesignElements::Vectors(v) = &design.elements else { unreachable!() };
        let a = [0.3, -1.2, 0.7];
        let n2 = a.iter().map(|x| x * x).sum::<f64>();
        let dot = |x: &[f64; 3]| x[0] * a[0] + x[1] * a[1] + x[2] * a[2];
        let mean2 = v.iter().map(|x| dot(x).powi(2)).sum::<f64>() / 6.0;
        assert!((mean2 - n2 / 3.0).abs() < 1e-14);
        let mean3 = v.iter().map(|x| dot(x).powi(3)).sum::<f64>() / 6.0;
        assert!(mean3.abs() < 1e-14);
        // Uniform-measure value E[(a·b)²] = 1/3.
        assert!((design.frame_potential_at(1) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn mub_overlaps_and_frame_potential() {
        for d in [2, 3, 5, 7] {
            let set = mub_set(d).unwrap();
            let DesignElements::States(s) = &set.elements else { unreachable!() };
            assert_eq!(s.len(), d * (d + 1));
            for b1 in 0..=d {
                for b2 in 0..=d {
                    for i in 0..d {
                        for j in 0..d {
                            let ov = s[b1 * d + i].dotc(&s[b2 * d + j]).norm_sqr();
                            let expect = if b1 != b2 { 1.0 / d as f64 } else if i == j { 1.0 } else { 0.0 };
                            assert!((ov - expect).abs() < 1e-10, "d={d}");
                        }
                    }
                }
            }
            assert!((set.frame_potential() - state_frame_potential_min(d, 2)).abs() < 1e-9);
        }
        assert!((state_frame_potential_min(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(mub_set(6).unwrap_err().is_unsupported());
    }

    #[test]
    fn qubit_mubs_are_pauli_eigenbases() {
        let set = mub_set(2).unwrap();
        let DesignElements::States(s) = &set.elements else { unreachable!() };
        let ops = [pauli_z(), linalg::pauli_x(), linalg::pauli_x() * pauli_z()];
        for (b, op) in ops.iter().enumerate() {
            for k in 0..2 {
                let v = &s[2 * b + k];
                let w = op * v;
                // v is an eigenvector: |⟨v|w⟩| = ‖w‖.
                assert!((v.dotc(&w).norm() - w.norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_frame_potential_values() {
        assert_eq!(unitary_frame_potential_haar(2, 3), Some(5.0));
        assert_eq!(unitary_frame_potential_haar(4, 3), Some(6.0));
        let u = haar_unitary(3, &mut rng_from_seed(5));
        assert!((frame_potential_unitaries(&[u.matrix().clone()], 1) - 9.0).abs() < 1e-10);
    }

    #[test]
    fn permutation_trace_identities() {
        let mut rng = rng_from_seed(6);
        let rnd = |rng: &mut SimRng| CMat::from_fn(3, 3, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        let (a, b, cc) = (rnd(&mut rng), rnd(&mut rng), rnd(&mut rng));
        let s = swap_operator(3);
        assert!((trace_product(&linalg::kron(&a, &b), &s) - trace_product(&a, &b)).norm() < 1e-10);
        let w = cyclic_operator(3, 3);
        let abc = linalg::kron_all([&a, &b, &cc]);
        assert!((trace_product(&abc, &w) - linalg::trace(&(&a * &b * &cc))).norm() < 1e-9);
        assert!(max_abs_diff(&(&w * &w * &w), &CMat::identity(27, 27)) < 1e-15);
        assert!(permutation_operator(&[0, 0], 2).is_err());
    }

    #[test]
    fn twirl_fixed_points_and_covariance() {
        let d = 3;
        let s = swap_operator(d);
        assert!(max_abs_diff(&twirl_exact_2(&s, d).unwrap(), &s) < 1e-12);
        let id = CMat::identity(9, 9);
        assert!(max_abs_diff(&twirl_exact_2(&id, d).unwrap(), &id) < 1e-12);
        let mut rng = rng_from_seed(7);
        let x = CMat::from_fn(9, 9, |_, _| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
        let tw = twirl_exact_2(&x, d).unwrap();
        let v = haar_unitary(d, &mut rng);
        let vv = linalg::kron(v.matrix(), v.matrix());
        assert!(max_abs_diff(&(&vv * &tw), &(&tw * &vv)) < 1e-9);
    }

    #[test]
    fn twirl_matches_monte_carlo() {
        let d = 2;
        let basis = crate::qstate::gell_mann_basis(d).unwrap();
        let mut x = CMat::zeros(4, 4);
        for j in 1..4 {
            x += linalg::kron(basis.get(j), basis.get(j));
        }
        let exact = twirl_exact_2(&x, d).unwrap();
        let mc = twirl_mc_2(&x, d, 20_000, &mut rng_from_seed(8));
        // Entries of (U⊗U)X(U⊗U)† are bounded by ‖X‖ = 3; 3σ/√n ≈ 0.07.
        assert!(max_abs_diff(&exact, &mc) < 0.07);
    }

    #[test]
    fn qubit_eigenphases_are_uniform() {
        // Kolmogorov-Smirnov against the uniform law on (−π, π] at the 1% level.
        let mut rng = rng_from_seed(9);
        let n = 10_000;
        let mut phases: Vec<f64> = (0..n)
            .map(|_| {
                let u = haar_unitary(2, &mut rng);
                let m = u.matrix();
                let tr = m[(0, 0)] + m[(1, 1)];
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                let disc = (tr * tr - det * 4.0).sqrt();
                let lam = if rng.random::<bool>() { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
                lam.arg()
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        let ks = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let f = (p + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn task_streams_are_independent_and_reproducible() {
        let a: u64 = task_rng(1, 0).random();
        let b: u64 = task_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, task_rng(1, 0).random::<u64>());
    }

    #[test]
    fn design_export_is_json() {
        let v: serde_json::Value = serde_json::from_str(&mub_set(3).unwrap().to_json()).unwrap();
        assert_eq!(v["kind"], "state");
        assert_eq!(v["states"].as_array().unwrap().len(), 12);
    }
}
