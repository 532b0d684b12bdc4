//! Exact shrinkage through dense SVD and EVD. These are the references every
//! approximate backend is measured against; speed is not a concern here.

use nalgebra::SymmetricEigen;

use super::dense::{gram, DenseMat};
use crate::chebyshev::ShrinkageKernel;
use crate::error::{Error, Result};

/// Eigenvalues of `BᵀB` below this are treated as rounding noise.
const NEGATIVE_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub u: Vec<f64>,
    pub sigma: f64,
    pub v: Vec<f64>,
}

fn svd(b: &DenseMat) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if b.is_empty() {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    let d = b
        .to_nalgebra()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Decomposition("SVD did not converge".into()))?;
    if d.singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::Decomposition("SVD produced non-finite singular values".into()));
    }
    Ok(d)
}

/// Thin SVD as triplets sorted by decreasing σ.
pub fn singular_triplets(b: &DenseMat) -> Result<Vec<SingularTriplet>> {
    let d = svd(b)?;
    let (u, vt) = match (&d.u, &d.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Decomposition("SVD returned no singular vectors".into())),
    };
    let mut out: Vec<SingularTriplet> = d
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &sigma)| SingularTriplet {
            u: u.column(i).iter().copied().collect(),
            sigma,
            v: vt.row(i).iter().copied().collect(),
        })
        .collect();
    out.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    Ok(out)
}

/// Singular values in decreasing order.
pub fn singular_values(b: &DenseMat) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = svd(b)?.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `U·diag(g(σ_i))·Vᵀ`.
pub fn exact_svd_shrink(b: &DenseMat, kernel: &ShrinkageKernel) -> Result<DenseMat> {
    kernel.validate()?;
    let (m, n) = b.shape();
    let mut out = DenseMat::zeros(m, n);
    for t in singular_triplets(b)? {
        let g = kernel.singular(t.sigma);
        if g == 0.0 {
            continue;
        }
        for i in 0..m {
            let ui = g * t.u[i];
            for (o, vj) in out.row_mut(i).iter_mut().zip(&t.v) {
                *o += ui * vj;
            }
        }
    }
    Ok(out)
}

/// `B·V·diag(h(λ_i))·Vᵀ` from the eigendecomposition `BᵀB = V·diag(λ)·Vᵀ`.
///
/// Wide inputs are transposed first so the Gram matrix is the smaller one.
pub fn exact_evd_shrink(b: &DenseMat, kernel: &ShrinkageKernel) -> Result<DenseMat> {
    kernel.validate()?;
    if b.rows() < b.cols() {
        return Ok(exact_evd_shrink(&b.transpose(), kernel)?.transpose());
    }
    let g = gram(b)?;
    let scale = g.frobenius_norm().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::try_new(g.to_nalgebra(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().chain(eig.eigenvectors.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Decomposition("symmetric eigensolver produced non-finite values".into()));
    }
    let n = g.rows();
    let v = &eig.eigenvectors;
    let h: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| {
            if lam < -NEGATIVE_EIG_TOL * scale {
                // Not a rounding artifact; still clamp, the Gram matrix is PSD.
                0.0
            } else {
                kernel.response(lam.max(0.0))
            }
        })
        .collect();
    let mut hmat = DenseMat::zeros(n, n);
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = hk * v[(i, k)];
            for j in 0..n {
                hmat[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    b.matmul(&hmat)
}
