use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{gell_mann_basis, DensityMatrix, OperatorBasis};
use crate::linalg::{self, c, CMat, C64, ZERO};
use crate::{Error, Result};

/// Real coefficients `T_{j1…jn} = tr[ρ (λ_{j1} ⊗ … ⊗ λ_{jn})]`, so that
/// `ρ = D⁻¹ Σ T_{j1…jn} λ_{j1} ⊗ … ⊗ λ_{jn}`.
///
/// Entries are stored row-major over the multi-index, site 0 most significant,
/// with `j_i ∈ 0..d_i²` and index 0 the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl CorrelationTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().map(|d| d * d).product();
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!("tensor has {} entries, expected {len}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Range of each multi-index component (`d_i²`).
    pub fn index_dims(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d * d).collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[linalg::undigits(idx, &self.index_dims())]
    }

    /// `S_0 … S_n`, where `S_k` sums `T²` over multi-indices with exactly `k`
    /// non-identity components.
    pub fn sector_lengths(&self) -> Vec<f64> {
        let idims = self.index_dims();
        let mut out = vec![0.0; self.dims.len() + 1];
        for (flat, &t) in self.data.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let k = linalg::digits(flat, &idims).iter().filter(|&&j| j != 0).count();
            out[k] += t * t;
        }
        out
    }

    /// Tensor of the reduced state on `keep` (entries with identity elsewhere).
    pub fn marginal(&self, keep: &[usize]) -> Result<CorrelationTensor> {
        let keep = super::normalise_sites(keep, self.dims.len())?;
        let idims = self.index_dims();
        let kdims: Vec<usize> = keep.iter().map(|&s| self.dims[s]).collect();
        let kidims: Vec<usize> = kdims.iter().map(|d| d * d).collect();
        let count: usize = kidims.iter().product();
        let mut full = vec![0; self.dims.len()];
        let data = (0..count)
            .map(|i| {
                let ds = linalg::digits(i, &kidims);
                full.iter_mut().for_each(|x| *x = 0);
                for (&s, &j) in keep.iter().zip(&ds) {
                    full[s] = j;
                }
                self.data[linalg::undigits(&full, &idims)]
            })
            .collect();
        Ok(CorrelationTensor { dims: kdims, data })
    }

    /// For a bipartite tensor, the block `T_{ij}` with `i, j ≥ 1`
    /// (size `(d_A² − 1) × (d_B² − 1)`).
    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch("correlation matrix needs two sites".into()));
        }
        let (a, b) = (self.dims[0] * self.dims[0], self.dims[1] * self.dims[1]);
        Ok(DMatrix::from_fn(a - 1, b - 1, |i, j| self.data[(i + 1) * b + j + 1]))
    }

    /// Single-site Bloch vector `T_{0…j…0}`, `j ≥ 1`.
    pub fn local_vector(&self, site: usize) -> Result<Vec<f64>> {
        if site >= self.dims.len() {
            return Err(Error::InvalidSubsystems(format!("site {site} out of range")));
        }
        let idims = self.index_dims();
        let mut idx = vec![0; self.dims.len()];
        Ok((1..idims[site])
            .map(|j| {
                idx[site] = j;
                self.data[linalg::undigits(&idx, &idims)]
            })
            .collect())
    }
}

fn bases_for(dims: &[usize]) -> Vec<OperatorBasis> {
    dims.iter().map(|&d| gell_mann_basis(d).expect("dims validated ≥ 2")).collect()
}

/// Full correlation tensor of `ρ` by site-by-site contraction.
pub fn bloch_decompose(rho: &DensityMatrix) -> CorrelationTensor {
    let dims = rho.dims().to_vec();
    let bases = bases_for(&dims);
    let m = rho.matrix();
    let dim = rho.dim();
    // Layout: [done-prefix p][remaining row][remaining col].
    let mut buf: Vec<C64> = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
    let mut p = 1;
    let mut rem = dim;
    for (basis, &d) in bases.iter().zip(&dims) {
        let r2 = rem / d;
        let nb = d * d;
        let mut next = vec![ZERO; p * nb * r2 * r2];
        for pi in 0..p {
            for (j, lam) in basis.matrices().iter().enumerate() {
                let out0 = (pi * nb + j) * r2 * r2;
                for a in 0..d {
                    for b in 0..d {
                        let l = lam[(b, a)];
                        if l == ZERO {
                            continue;
                        }
                        for r in 0..r2 {
                            let src = (pi * rem + a * r2 + r) * rem + b * r2;
                            let dst = out0 + r * r2;
                            for cc in 0..r2 {
                                next[dst + cc] += buf[src + cc] * l;
                            }
                        }
                    }
                }
            }
        }
        buf = next;
        p *= nb;
        rem = r2;
    }
    CorrelationTensor { dims, data: buf.iter().map(|z| z.re).collect() }
}

/// Inverse of [`bloch_decompose`]. Fails if the result is not a valid state.
pub fn bloch_reconstruct(t: &CorrelationTensor) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new(t.dims.clone(), reconstruct_operator(t))?)
}

/// `D⁻¹ Σ T λ⊗…⊗λ` without any validity check.
pub(crate) fn reconstruct_operator(t: &CorrelationTensor) -> CMat {
    let dims = &t.dims;
    let bases = bases_for(dims);
    // Layout: [remaining prefix p][done row][done col], expanding the last site first.
    let mut buf: Vec<C64> = t.data.iter().map(|&x| c(x, 0.0)).collect();
    let mut p: usize = t.data.len();
    let mut done = 1;
    for (basis, &d) in bases.iter().zip(dims).rev() {
        let nb = d * d;
        let p2 = p / nb;
        let nd = done * d;
        let mut next = vec![ZERO; p2 * nd * nd];
        let inv = 1.0 / d as f64;
        for pi in 0..p2 {
            for (j, lam) in basis.matrices().iter().enumerate() {
                let src0 = (pi * nb + j) * done * done;
                for a in 0..d {
                    for b in 0..d {
                        let l = lam[(a, b)] * inv;
                        if l == ZERO {
                            continue;
                        }
                        for r in 0..done {
                            let dst = (pi * nd + a * done + r) * nd + b * done;
                            let src = src0 + r * done;
                            for cc in 0..done {
                                next[dst + cc] += buf[src + cc] * l;
                            }
                        }
                    }
                }
            }
        }
        buf = next;
        p = p2;
        done = nd;
    }
    CMat::from_fn(done, done, |r, cc| buf[r * done + cc])
}
