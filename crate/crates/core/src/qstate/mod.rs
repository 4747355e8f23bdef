//! Exact density-matrix representation on a tensor product of local spaces.
//!
//! Subsystems are indexed left to right starting at 0. Every partial operation
//! takes an explicit index set.

mod basis;
mod bloch;
mod factory;
mod io;
mod random;

pub use basis::{gell_mann_basis, OperatorBasis};
pub use bloch::{bloch_decompose, bloch_reconstruct, CorrelationTensor};
pub use factory::{state_factory, StateSpec};
pub use io::{read_state_file, write_state_file, StateFile};
pub use random::{
    random_biseparable, random_mixed, random_product_pure, random_pure, random_pure_vector,
    random_separable,
};

use crate::linalg::{self, c, CMat, CVec};
use crate::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive semidefinite operator on `⊗ C^{d_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates and wraps a matrix. Nothing is repaired: a matrix that is not
    /// Hermitian, not unit trace or has eigenvalues below `-1e-10` is rejected.
    pub fn new(dims: Vec<usize>, mat: CMat) -> Result<Self> {
        check_dims(&dims, &mat)?;
        let herm = linalg::hermiticity_residual(&mat);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = linalg::trace(&mat).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = *linalg::hermitian_eigenvalues(&mat)?.last().unwrap();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { dims, mat })
    }

    /// Wraps a matrix produced by an exact internal construction. Only the
    /// Hermitian part is kept, which removes round-off asymmetry.
    pub(crate) fn from_trusted(dims: Vec<usize>, mat: CMat) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mat.nrows());
        let mat = (&mat + mat.adjoint()) * c(0.5, 0.0);
        Self { dims, mat }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector.
    pub fn pure(dims: Vec<usize>, psi: &CVec) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if psi.len() != dim {
            return Err(Error::DimensionMismatch(format!("vector length {} vs dims product {dim}", psi.len())));
        }
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / c(norm, 0.0);
        Ok(Self::from_trusted(dims, &v * v.adjoint()))
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let dim: usize = dims.iter().product();
        Self { mat: CMat::identity(dim, dim) * c(1.0 / dim as f64, 0.0), dims }
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn ground(dims: Vec<usize>) -> Self {
        let dim: usize = dims.iter().product();
        let mut mat = CMat::zeros(dim, dim);
        mat[(0, 0)] = linalg::ONE;
        Self { dims, mat }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Local dimension when all sites share it.
    pub fn uniform_local_dim(&self) -> Option<usize> {
        let d = self.dims[0];
        self.dims.iter().all(|&x| x == d).then_some(d)
    }

    pub fn is_qubits(&self) -> bool {
        self.uniform_local_dim() == Some(2)
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// `ρ ⊗ σ`, dims concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, mat: self.mat.kronecker(&other.mat) }
    }

    pub fn product(factors: &[DensityMatrix]) -> Result<DensityMatrix> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        Ok(rest.iter().fold(first.clone(), |acc, f| acc.tensor(f)))
    }

    /// Reduced state on `keep` (sorted ascending in the output).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = normalise_sites(keep, self.n_sites())?;
        if keep.is_empty() {
            return Err(Error::InvalidSubsystems("keep set is empty".into()));
        }
        let traced: Vec<usize> = (0..self.n_sites()).filter(|s| !keep.contains(s)).collect();
        let kdims: Vec<usize> = keep.iter().map(|&s| self.dims[s]).collect();
        let st = linalg::strides(&self.dims);
        let offsets = |sites: &[usize]| -> Vec<usize> {
            let sub: Vec<usize> = sites.iter().map(|&s| self.dims[s]).collect();
            let count: usize = sub.iter().product();
            (0..count)
                .map(|i| {
                    linalg::digits(i, &sub)
                        .iter()
                        .zip(sites)
                        .map(|(&x, &s)| x * st[s])
                        .sum()
                })
                .collect()
        };
        let ko = offsets(&keep);
        let to = offsets(&traced);
        let kd = ko.len();
        let out = CMat::from_fn(kd, kd, |r, cc| to.iter().map(|&t| self.mat[(ko[r] + t, ko[cc] + t)]).sum());
        Ok(Self::from_trusted(kdims, out))
    }

    /// `ρ^{Γ_S}` for the site set `S`. The result is Hermitian with unit trace
    /// but need not be positive.
    pub fn partial_transpose(&self, sites: &[usize]) -> Result<CMat> {
        let sites = normalise_sites(sites, self.n_sites())?;
        Ok(partial_transpose_matrix(&self.mat, &self.dims, &sites))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.mat).expect("density matrix is Hermitian")
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.mat, &self.mat).re
    }

    /// Rényi entropy `log(tr ρ^α)/(1 − α)` (natural log).
    pub fn renyi_entropy(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) || (alpha - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidParameter(format!("Rényi order {alpha} must be positive and ≠ 1")));
        }
        let s: f64 = self.eigenvalues().iter().filter(|&&x| x > 0.0).map(|x| x.powf(alpha)).sum();
        Ok(s.ln() / (1.0 - alpha))
    }

    /// `U ρ U†` for a global unitary.
    pub fn apply_unitary(&self, u: &CMat) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch("unitary size".into()));
        }
        Ok(Self::from_trusted(self.dims.clone(), u * &self.mat * u.adjoint()))
    }

    /// `(⊗U_i) ρ (⊗U_i)†`.
    pub fn apply_local_unitaries(&self, us: &[CMat]) -> Result<DensityMatrix> {
        if us.len() != self.n_sites() || us.iter().zip(&self.dims).any(|(u, &d)| u.nrows() != d) {
            return Err(Error::DimensionMismatch("local unitaries do not match dims".into()));
        }
        self.apply_unitary(&linalg::kron_all(us))
    }

    /// `tr(ρ X)`, real part.
    pub fn expectation(&self, x: &CMat) -> Result<f64> {
        if x.nrows() != self.dim() || !x.is_square() {
            return Err(Error::DimensionMismatch("observable size".into()));
        }
        Ok(linalg::trace_product(&self.mat, x).re)
    }

    /// `p ρ + (1 − p) σ`.
    pub fn mix(&self, p: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("mixing states of different dims".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("mixing weight {p} outside [0,1]")));
        }
        Ok(Self { dims: self.dims.clone(), mat: &self.mat * c(p, 0.0) + &other.mat * c(1.0 - p, 0.0) })
    }

    /// `v ρ + (1 − v) 𝟙/D`.
    pub fn with_white_noise(&self, v: f64) -> Result<DensityMatrix> {
        self.mix(v, &Self::maximally_mixed(self.dims.clone()))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("trace distance of different dims".into()));
        }
        Ok(0.5 * linalg::trace_norm_hermitian(&(&self.mat - &other.mat))?)
    }

    /// Trace norm of `ρ^{Γ_S}`.
    pub fn pt_trace_norm(&self, sites: &[usize]) -> Result<f64> {
        linalg::trace_norm_hermitian(&self.partial_transpose(sites)?)
    }

    /// `(‖ρ^{Γ_S}‖₁ − 1)/2`, the summed magnitude of negative eigenvalues of
    /// `ρ^{Γ_S}`. Eigenvalues above `−NEGATIVITY_TOL` count as round-off, so PPT
    /// states give exactly 0.
    pub fn negativity(&self, sites: &[usize]) -> Result<f64> {
        let ev = linalg::hermitian_eigenvalues(&self.partial_transpose(sites)?)?;
        Ok(ev.iter().filter(|&&l| l < -NEGATIVITY_TOL).map(|l| -l).sum())
    }
}

/// Round-off allowance for eigenvalues of a partially transposed state.
pub const NEGATIVITY_TOL: f64 = 1e-13;

/// Kronecker product of two matrices (dims concatenate in the caller).
pub fn tensor_product(a: &CMat, b: &CMat) -> CMat {
    linalg::kron(a, b)
}

/// `F = tr(ρ₁ρ₂) / max(tr ρ₁², tr ρ₂²)`.
pub fn fidelity_mixed(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch("fidelity of different dims".into()));
    }
    let overlap = linalg::trace_product(&a.mat, &b.mat).re;
    Ok(overlap / a.purity().max(b.purity()))
}

/// Partial transpose of a raw matrix with the given local dims. `sites` must be valid.
pub fn partial_transpose_matrix(m: &CMat, dims: &[usize], sites: &[usize]) -> CMat {
    let dim = m.nrows();
    let st = linalg::strides(dims);
    // Contribution of the selected sites to each flat index.
    let part: Vec<usize> = (0..dim)
        .map(|x| sites.iter().map(|&s| (x / st[s]) % dims[s] * st[s]).sum())
        .collect();
    CMat::from_fn(dim, dim, |r, cc| {
        let (pr, pc) = (part[r], part[cc]);
        m[(r - pr + pc, cc - pc + pr)]
    })
}

fn check_dims(dims: &[usize], mat: &CMat) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidParameter("local dimensions must be ≥ 2".into()));
    }
    let dim: usize = dims.iter().product();
    if !mat.is_square() || mat.nrows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}×{} vs dims product {dim}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    Ok(())
}

/// Sorted, deduplicated, range-checked copy of a site set.
pub(crate) fn normalise_sites(sites: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut v = sites.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != sites.len() {
        return Err(Error::InvalidSubsystems(format!("repeated index in {sites:?}")));
    }
    if let Some(&bad) = v.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidSubsystems(format!("site {bad} out of range for {n} sites")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli_x, pauli_z};

    fn singlet() -> DensityMatrix {
        state_factory(&StateSpec::parse("bell:psi-").unwrap()).unwrap()
    }

    #[test]
    fn tensor_of_basis_projectors() {
        let z = DensityMatrix::ground(vec![2]);
        let zz = z.tensor(&z);
        assert_eq!(zz, DensityMatrix::ground(vec![2, 2]));
        let m = DensityMatrix::maximally_mixed(vec![2]);
        assert_eq!(m.tensor(&m), DensityMatrix::maximally_mixed(vec![2, 2]));
        let k = tensor_product(&pauli_x(), &pauli_z());
        assert_eq!(k[(0, 2)], c(1.0, 0.0));
        assert_eq!(k[(1, 3)], c(-1.0, 0.0));
        assert_eq!(k[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn singlet_marginal_is_maximally_mixed() {
        let r = singlet().partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(r.matrix(), DensityMatrix::maximally_mixed(vec![2]).matrix()) < 1e-14);
    }

    #[test]
    fn w3_two_site_marginal() {
        let w = state_factory(&StateSpec::parse("w:3").unwrap()).unwrap();
        let r = w.partial_trace(&[0, 1]).unwrap();
        // Amplitudes 1/√3 on 001, 010, 100: tracing site 2 gives
        // |00⟩⟨00|/3 + |ψ⁺⟩⟨ψ⁺|·2/3 with |ψ⁺⟩ = (|01⟩+|10⟩)/√2.
        let third = 1.0 / 3.0;
        let mut expect = CMat::zeros(4, 4);
        expect[(0, 0)] = c(third, 0.0);
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            expect[(i, j)] = c(third, 0.0);
        }
        assert!(max_abs_diff(r.matrix(), &expect) < 1e-14);
        // ⟨σz⊗σz⟩ = 1/3 − 2/3 and ⟨σx⊗σx⟩ = ⟨σy⊗σy⟩ = 2/3.
        let t = bloch_decompose(&r);
        assert!((t.get(&[3, 3]) + third).abs() < 1e-14);
        assert!((t.get(&[1, 1]) - 2.0 * third).abs() < 1e-14);
        assert!((t.get(&[2, 2]) - 2.0 * third).abs() < 1e-14);
    }

    #[test]
    fn product_marginal_recovers_factor() {
        let mut rng = crate::designs::rng_from_seed(3);
        let a = random_mixed(&[2], 2, &mut rng);
        let b = random_mixed(&[3], 3, &mut rng);
        let ab = a.tensor(&b);
        assert!(max_abs_diff(ab.partial_trace(&[0]).unwrap().matrix(), a.matrix()) < 1e-13);
        assert!(max_abs_diff(ab.partial_trace(&[1]).unwrap().matrix(), b.matrix()) < 1e-13);
    }

    #[test]
    fn partial_trace_rejects_bad_sets() {
        let s = singlet();
        assert!(s.partial_trace(&[]).is_err());
        assert!(s.partial_trace(&[2]).is_err());
        assert!(s.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn singlet_partial_transpose_spectrum() {
        let ev = linalg::hermitian_eigenvalues(&singlet().partial_transpose(&[1]).unwrap()).unwrap();
        for (x, y) in ev.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_transpose_is_involution() {
        let mut rng = crate::designs::rng_from_seed(5);
        let r = random_mixed(&[2, 3, 2], 4, &mut rng);
        let once = r.partial_transpose(&[1, 2]).unwrap();
        let twice = partial_transpose_matrix(&once, r.dims(), &[1, 2]);
        assert!(max_abs_diff(&twice, r.matrix()) < 1e-15);
    }

    #[test]
    fn purity_and_renyi() {
        assert!((singlet().purity() - 1.0).abs() < 1e-14);
        assert!(singlet().renyi_entropy(2.0).unwrap().abs() < 1e-12);
        let m = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!((m.purity() - 0.25).abs() < 1e-15);
        assert!((m.renyi_entropy(2.0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(m.renyi_entropy(1.0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let phi = state_factory(&StateSpec::parse("bell:phi+").unwrap()).unwrap();
        assert!((fidelity_mixed(&phi, &phi).unwrap() - 1.0).abs() < 1e-14);
        let m = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!((fidelity_mixed(&phi, &m).unwrap() - 0.25).abs() < 1e-14);
        assert!(fidelity_mixed(&phi, &singlet()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn validation_rejects_non_states() {
        let mut m = CMat::identity(2, 2) * c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(vec![2], m.clone()).is_err());
        m[(1, 0)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(vec![2], m).is_ok());
        let neg = CMat::from_diagonal_element(2, 2, c(0.5, 0.0)) + CMat::from_fn(2, 2, |i, j| c(if i != j { 0.9 } else { 0.0 }, 0.0));
        assert!(DensityMatrix::new(vec![2], neg).is_err());
        assert!(DensityMatrix::new(vec![2, 2], CMat::identity(2, 2)).is_err());
    }
}
