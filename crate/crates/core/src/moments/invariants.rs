//! Local-unitary invariants computed from the correlation tensor.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::qstate::{bloch_decompose, state_factory, DensityMatrix, StateSpec};
use crate::{error::invalid, Error, Result};

/// `S_0 … S_n` of `ρ`.
pub fn sector_lengths(rho: &DensityMatrix) -> Vec<f64> {
    bloch_decompose(rho).sector_lengths()
}

/// Moments of the singular values `τ_i` of the two-body correlation block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoBlochMoments {
    /// `S⁽²⁾ = Σ τ_i²`.
    pub s2: f64,
    /// `S⁽⁴⁾ = 2 Σ τ_i⁴ + (S⁽²⁾)²`.
    pub s4: f64,
    /// Singular values, descending.
    pub tau: Vec<f64>,
}

/// `S⁽²⁾, S⁽⁴⁾` of a bipartite state, from the `(d_A²−1) × (d_B²−1)` block of
/// `T_{ij} = tr[ρ λ_i ⊗ λ_j]` with `tr λ² = d`.
pub fn pseudo_bloch_moments(rho: &DensityMatrix) -> Result<PseudoBlochMoments> {
    if rho.n_sites() != 2 {
        return Err(Error::DimensionMismatch("pseudo-Bloch moments need a bipartite state".into()));
    }
    let t = bloch_decompose(rho).correlation_matrix()?;
    let mut tau: Vec<f64> = t.svd(false, false).singular_values.iter().copied().collect();
    tau.sort_by(|a, b| b.total_cmp(a));
    let s2: f64 = tau.iter().map(|x| x * x).sum();
    let s4 = 2.0 * tau.iter().map(|x| x.powi(4)).sum::<f64>() + s2 * s2;
    Ok(PseudoBlochMoments { s2, s4, tau })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MakhlinInvariants {
    /// `det T`.
    pub i1: f64,
    /// `tr(T Tᵀ)`.
    pub i2: f64,
    /// `tr(T Tᵀ T Tᵀ)`.
    pub i3: f64,
    /// `tr(H_a T H_bᵀ Tᵀ)` with `(H_x)_{ij} = Σ_k ε_{ijk} x_k`.
    pub i14: f64,
}

struct TwoQubitTensor {
    t: Matrix3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
}

fn two_qubit_tensor(rho: &DensityMatrix) -> Result<TwoQubitTensor> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch("two-qubit state required".into()));
    }
    let ct = bloch_decompose(rho);
    let m: DMatrix<f64> = ct.correlation_matrix()?;
    let a = ct.local_vector(0)?;
    let b = ct.local_vector(1)?;
    Ok(TwoQubitTensor {
        t: Matrix3::from_fn(|i, j| m[(i, j)]),
        a: Vector3::new(a[0], a[1], a[2]),
        b: Vector3::new(b[0], b[1], b[2]),
    })
}

/// Skew-symmetric `(H_x)_{ij} = Σ_k ε_{ijk} x_k`.
fn hodge(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, x[2], -x[1], -x[2], 0.0, x[0], x[1], -x[0], 0.0)
}

/// Makhlin invariants of a two-qubit state.
pub fn makhlin_invariants(rho: &DensityMatrix) -> Result<MakhlinInvariants> {
    let TwoQubitTensor { t, a, b } = two_qubit_tensor(rho)?;
    let ttt = t * t.transpose();
    Ok(MakhlinInvariants {
        i1: t.determinant(),
        i2: ttt.trace(),
        i3: (ttt * ttt).trace(),
        i14: (hodge(&a) * t * hodge(&b).transpose() * t.transpose()).trace(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPolynomials {
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
}

/// `Q₂ = S₂`, `Q₃ = −I₁`, `Q₄ = I₂² − I₃`, `Q₅ = −I₁ I₂`.
pub fn q_polynomials(rho: &DensityMatrix) -> Result<QPolynomials> {
    let m = makhlin_invariants(rho)?;
    let s = sector_lengths(rho);
    Ok(QPolynomials { q2: s[2], q3: -m.i1, q4: m.i2 * m.i2 - m.i3, q5: -m.i1 * m.i2 })
}

/// `Q₃` written out as the six-term polynomial in the correlations `⟨σ_i σ_j⟩`.
pub fn q3_expansion(rho: &DensityMatrix) -> Result<f64> {
    let t = two_qubit_tensor(rho)?.t;
    let (x, y, z) = (0, 1, 2);
    let e = |i: usize, j: usize| t[(i, j)];
    Ok(e(x, z) * e(y, y) * e(z, x) - e(x, y) * e(y, z) * e(z, x) - e(x, z) * e(y, x) * e(z, y)
        + e(x, x) * e(y, z) * e(z, y)
        + e(x, y) * e(y, x) * e(z, z)
        - e(x, x) * e(y, y) * e(z, z))
}

/// `R⁽²⁾ = (1/9) Σ T_jj²` and `R⁽⁴⁾ = (2/75) Σ T_jj⁴ + (27/25) (R⁽²⁾)²` of the
/// Bell-diagonal state with correlations `t`, for `σ_z ⊗ σ_z` and `N = 1`.
pub fn bell_diagonal_moments(t: [f64; 3]) -> Result<(f64, f64)> {
    state_factory(&StateSpec::BellDiagonal { t }).map_err(|e| invalid(e.to_string()))?;
    Ok(bell_diagonal_moments_unchecked(t))
}

pub(crate) fn bell_diagonal_moments_unchecked(t: [f64; 3]) -> (f64, f64) {
    let r2 = t.iter().map(|x| x * x).sum::<f64>() / 9.0;
    let r4 = 2.0 / 75.0 * t.iter().map(|x| x.powi(4)).sum::<f64>() + 27.0 / 25.0 * r2 * r2;
    (r2, r4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::rng_from_seed;
    use crate::qstate::random_mixed;

    fn named(s: &str) -> DensityMatrix {
        state_factory(&StateSpec::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn ghz_full_sector() {
        for n in 2..=6 {
            let s = sector_lengths(&named(&format!("ghz:{n}")));
            let expect = 2f64.powi(n as i32 - 1) + if n % 2 == 0 { 1.0 } else { 0.0 };
            assert!((s[n] - expect).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn sector_convolution() {
        let mut rng = rng_from_seed(1);
        let p = random_mixed(&[2, 2], 2, &mut rng);
        let q = random_mixed(&[2], 2, &mut rng);
        let (sp, sq, spq) = (sector_lengths(&p), sector_lengths(&q), sector_lengths(&p.tensor(&q)));
        for k in 0..=3 {
            let conv: f64 = (0..=k).filter(|&i| i < sp.len() && k - i < sq.len()).map(|i| sp[i] * sq[k - i]).sum();
            assert!((spq[k] - conv).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_bloch_examples() {
        let m = pseudo_bloch_moments(&named("bell:phi+")).unwrap();
        assert!((m.s2 - 3.0).abs() < 1e-12 && (m.s4 - 15.0).abs() < 1e-12);
        let p = pseudo_bloch_moments(&named("product:2")).unwrap();
        assert!((p.s2 - 1.0).abs() < 1e-12 && (p.s4 - 3.0).abs() < 1e-12);
        let z = pseudo_bloch_moments(&named("maxmixed:2")).unwrap();
        assert!(z.s2.abs() < 1e-14 && z.s4.abs() < 1e-14);
        let q = pseudo_bloch_moments(&named("ghz:2:3")).unwrap();
        assert!(q.tau.iter().all(|t| (t - 1.0).abs() < 1e-12) && q.tau.len() == 8);
    }

    #[test]
    fn makhlin_examples() {
        let m = makhlin_invariants(&named("bell:psi-")).unwrap();
        assert!((m.i1 + 1.0).abs() < 1e-12 && (m.i2 - 3.0).abs() < 1e-12 && (m.i3 - 3.0).abs() < 1e-12);
        assert!(makhlin_invariants(&named("product:2")).unwrap().i1.abs() < 1e-14);
        let z = makhlin_invariants(&named("maxmixed:2")).unwrap();
        assert_eq!((z.i1, z.i2, z.i3, z.i14), (0.0, 0.0, 0.0, 0.0));
        assert!(makhlin_invariants(&named("ghz:3")).is_err());
    }

    #[test]
    fn partial_transpose_flips_i1_and_i14() {
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let r = random_mixed(&[2, 2], 2, &mut rng);
            let pt = r.partial_transpose(&[1]).unwrap();
            // A two-qubit partial transpose of a PPT state is itself a state; use the
            // unchecked tensor of the transposed operator for the comparison.
            let rt = DensityMatrix::from_trusted(vec![2, 2], pt);
            let (a, b) = (makhlin_invariants(&r).unwrap(), makhlin_invariants(&rt).unwrap());
            assert!((a.i1 + b.i1).abs() < 1e-12);
            assert!((a.i14 + b.i14).abs() < 1e-12);
            assert!((a.i2 - b.i2).abs() < 1e-12 && (a.i3 - b.i3).abs() < 1e-12);
        }
    }

    #[test]
    fn q_polynomials_match_expansion() {
        assert!((q_polynomials(&named("bell:psi-")).unwrap().q3 - 1.0).abs() < 1e-12);
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let r = random_mixed(&[2, 2], 3, &mut rng);
            let q = q_polynomials(&r).unwrap();
            assert!((q.q3 - q3_expansion(&r).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_diagonal_closed_form() {
        let (r2, r4) = bell_diagonal_moments([-1.0, -1.0, -1.0]).unwrap();
        assert!((r2 - 1.0 / 3.0).abs() < 1e-15 && (r4 - 0.2).abs() < 1e-15);
        assert_eq!(bell_diagonal_moments([0.0, 0.0, 0.0]).unwrap(), (0.0, 0.0));
        assert!((bell_diagonal_moments([1.0, 0.0, 0.0]).unwrap().0 - 1.0 / 9.0).abs() < 1e-15);
        assert!(bell_diagonal_moments([1.0, 1.0, 1.0]).is_err());
    }
}
