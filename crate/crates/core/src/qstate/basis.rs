
use crate::linalg::{c, trace_product, CMat, C64, ZERO};
use crate::{Error, Result};

/// Hermitian operator basis `λ_0 = 𝟙, λ_1 … λ_{d²−1}` with `tr(λ_j λ_k) = d δ_jk`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    d: usize,
    mats: Vec<CMat>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn get(&self, j: usize) -> &CMat {
        &self.mats[j]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.mats
    }

    /// Coefficients `tr(X λ_j)`.
    pub fn coefficients(&self, x: &CMat) -> Vec<C64> {
        self.mats.iter().map(|l| trace_product(x, l)).collect()
    }

    /// Inverse of [`Self::coefficients`]: `X = (1/d) Σ_j a_j λ_j`.
    pub fn reconstruct(&self, coeffs: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.d, self.d);
        for (a, l) in coeffs.iter().zip(&self.mats) {
            out += l * *a;
        }
        out / c(self.d as f64, 0.0)
    }
}

/// Generalised Gell-Mann matrices scaled to `tr(λ_j λ_k) = d δ_jk`.
///
/// Order: for each pair `j < k` the symmetric then the antisymmetric element,
/// followed by the `d − 1` diagonal elements. For `d = 2` this is `I, σx, σy, σz`.
pub fn gell_mann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("basis dimension {d} < 2")));
    }
    let scale = c((d as f64 / 2.0).sqrt(), 0.0);
    let mut mats = vec![CMat::identity(d, d)];
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMat::zeros(d, d);
            s[(j, k)] = c(1.0, 0.0);
            s[(k, j)] = c(1.0, 0.0);
            mats.push(s * scale);
            let mut a = CMat::zeros(d, d);
            a[(j, k)] = c(0.0, -1.0);
            a[(k, j)] = c(0.0, 1.0);
            mats.push(a * scale);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::from_element(d, d, ZERO);
        for i in 0..l {
            m[(i, i)] = c(norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * norm, 0.0);
        mats.push(m * scale);
    }
    Ok(OperatorBasis { d, mats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, paulis, trace};

    #[test]
    fn qubit_basis_is_pauli() {
        let b = gell_mann_basis(2).unwrap();
        for (m, p) in b.matrices().iter().zip(paulis().iter()) {
            assert!(max_abs_diff(m, p) < 1e-15);
        }
    }

    #[test]
    fn orthogonality_and_tracelessness() {
        for d in 2..=5 {
            let b = gell_mann_basis(d).unwrap();
            assert_eq!(b.len(), d * d);
            for j in 0..b.len() {
                if j > 0 {
                    assert!(trace(b.get(j)).norm() < 1e-14);
                }
                for k in 0..b.len() {
                    let t = trace_product(b.get(j), b.get(k));
                    let expect = if j == k { d as f64 } else { 0.0 };
                    assert!((t - c(expect, 0.0)).norm() < 1e-12, "d={d} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn completeness_roundtrip() {
        for d in 2..=4 {
            let b = gell_mann_basis(d).unwrap();
            let x = CMat::from_fn(d, d, |i, j| c((i * 3 + j) as f64 * 0.7 - 1.0, (i as f64 - j as f64) * 0.3));
            let back = b.reconstruct(&b.coefficients(&x));
            assert!(max_abs_diff(&back, &x) < 1e-12);
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(gell_mann_basis(1).is_err());
    }
}
