#![allow(dead_code)]

use chebshrink::DenseMat;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(m: usize, n: usize, seed: u64) -> DenseMat {
    let mut r = rng(seed);
    DenseMat::from_fn(m, n, |_, _| r.random_range(-1.0..1.0))
}

pub fn to_na(a: &DenseMat) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

pub fn from_na(a: &DMatrix<f64>) -> DenseMat {
    DenseMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Matrix with orthonormal columns from a QR of a random matrix.
pub fn orthonormal(m: usize, n: usize, seed: u64) -> DenseMat {
    from_na(&to_na(&uniform(m, n, seed)).qr().q())
}

/// `U·diag(σ)·Vᵀ` with `σ_i = s0·exp(−decay·i)`.
pub fn decaying(m: usize, n: usize, s0: f64, decay: f64, seed: u64) -> (DenseMat, Vec<f64>) {
    let u = orthonormal(m, n, seed);
    let v = orthonormal(n, n, seed ^ 0x9e37_79b9);
    let s: Vec<f64> = (0..n).map(|i| s0 * (-decay * i as f64).exp()).collect();
    let b = u
        .matmul(&DenseMat::from_diag(&s))
        .unwrap()
        .matmul(&v.transpose())
        .unwrap();
    (b, s)
}

/// Random PSD matrix `AᵀA`.
pub fn random_psd(n: usize, seed: u64) -> DenseMat {
    let a = uniform(n, n, seed);
    let mut g = a.t_matmul(&a).unwrap();
    g.symmetrize();
    g
}

/// Eigenvalues (ascending) and eigenvectors of a dense symmetric matrix.
pub fn eigh(a: &DenseMat) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(to_na(a));
    let mut idx: Vec<usize> = (0..a.rows()).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(a.rows(), a.rows(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `V·diag(f(λ))·Vᵀ` from a dense eigendecomposition.
pub fn spectral_apply(a: &DenseMat, f: impl Fn(f64) -> f64) -> DenseMat {
    let (vals, v) = eigh(a);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    from_na(&(&v * d * v.transpose()))
}

/// Descending singular values.
pub fn svals(a: &DenseMat) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: &str, name: &str, pass: bool, detail: &str) -> bool {
    println!("[{}] criterion {id}: {name} :: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
