//! Random state generators used by property tests and soundness sweeps.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::DensityMatrix;
use crate::linalg::{self, c, CMat, CVec};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> linalg::C64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unit vector in `C^dim`.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    let dim = dims.iter().product();
    DensityMatrix::pure(dims.to_vec(), &random_pure_vector(dim, rng)).expect("nonzero vector")
}

/// Induced-measure mixed state `G G† / tr(G G†)` with `G` a `D × rank` Ginibre matrix.
pub fn random_mixed<R: Rng + ?Sized>(dims: &[usize], rank: usize, rng: &mut R) -> DensityMatrix {
    let dim: usize = dims.iter().product();
    let g = CMat::from_fn(dim, rank.max(1), |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::from_trusted(dims.to_vec(), m / c(tr, 0.0))
}

/// Product of Haar-random pure single-site states.
pub fn random_product_pure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    let blocks: Vec<Vec<usize>> = (0..dims.len()).map(|s| vec![s]).collect();
    block_product(dims, &blocks, rng)
}

/// Flat Dirichlet(1, …, 1) weights.
pub(crate) fn dirichlet<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Dirichlet-weighted mixture of `terms` random pure product states.
pub fn random_separable<R: Rng + ?Sized>(dims: &[usize], terms: usize, rng: &mut R) -> DensityMatrix {
    let w = dirichlet(terms.max(1), rng);
    let dim: usize = dims.iter().product();
    let mut m = CMat::zeros(dim, dim);
    for wk in w {
        m += random_product_pure(dims, rng).into_matrix() * c(wk, 0.0);
    }
    DensityMatrix::from_trusted(dims.to_vec(), m)
}

/// Dirichlet-weighted mixture of `terms` pure states, each a product of Haar-random
/// pure states on the two blocks of a uniformly random nontrivial bipartition.
pub fn random_biseparable<R: Rng + ?Sized>(dims: &[usize], terms: usize, rng: &mut R) -> DensityMatrix {
    let n = dims.len();
    assert!(n >= 2, "biseparable states need at least two sites");
    let w = dirichlet(terms.max(1), rng);
    let dim: usize = dims.iter().product();
    let mut m = CMat::zeros(dim, dim);
    for wk in w {
        // Nontrivial subset mask with site 0 fixed in block A.
        let mask = rng.random_range(0..(1usize << (n - 1)) - 1);
        let a: Vec<usize> = (0..n).filter(|&s| s == 0 || mask >> (s - 1) & 1 == 1).collect();
        let b: Vec<usize> = (0..n).filter(|s| !a.contains(s)).collect();
        m += block_product(dims, &[a, b], rng).into_matrix() * c(wk, 0.0);
    }
    DensityMatrix::from_trusted(dims.to_vec(), m)
}

/// Pure state that is a product of Haar-random pure states on the given blocks.
pub(crate) fn block_product<R: Rng + ?Sized>(dims: &[usize], blocks: &[Vec<usize>], rng: &mut R) -> DensityMatrix {
    let vecs: Vec<CVec> = blocks
        .iter()
        .map(|b| random_pure_vector(b.iter().map(|&s| dims[s]).product(), rng))
        .collect();
    let dim: usize = dims.iter().product();
    let psi = CVec::from_fn(dim, |i, _| {
        let ds = linalg::digits(i, dims);
        blocks.iter().zip(&vecs).fold(linalg::ONE, |acc, (b, v)| {
            let bd: Vec<usize> = b.iter().map(|&s| dims[s]).collect();
            let local: Vec<usize> = b.iter().map(|&s| ds[s]).collect();
            acc * v[linalg::undigits(&local, &bd)]
        })
    });
    DensityMatrix::pure(dims.to_vec(), &psi).expect("nonzero product vector")
}
