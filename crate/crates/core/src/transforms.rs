//! Orthogonal sparsifying transforms applied to Gram matrices by conjugation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::matcore::DenseMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    /// One-level Haar DWT, low-pass half first. With `zero_high_freq` the
    /// high-pass rows and columns of the conjugated matrix are zeroed.
    HaarDwt1 { zero_high_freq: bool },
    /// Orthonormal DCT-II.
    Dct,
    BlockDct { block: usize },
}

#[derive(Debug, Clone)]
pub struct SparsifyTransform {
    kind: TransformKind,
    dim: usize,
    /// Dense `T`; `None` for the identity.
    matrix: Option<DenseMat>,
}

/// Orthonormal DCT-II matrix: row `k` is `s_k cos(π(2j+1)k / 2n)`.
pub fn dct_matrix(n: usize) -> DenseMat {
    let nf = n as f64;
    DenseMat::from_fn(n, n, |k, j| {
        let s = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        s * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

fn haar_matrix(n: usize) -> DenseMat {
    let half = n / 2;
    let mut t = DenseMat::zeros(n, n);
    for i in 0..half {
        t[(i, 2 * i)] = FRAC_1_SQRT_2;
        t[(i, 2 * i + 1)] = FRAC_1_SQRT_2;
        t[(half + i, 2 * i)] = FRAC_1_SQRT_2;
        t[(half + i, 2 * i + 1)] = -FRAC_1_SQRT_2;
    }
    t
}

fn block_dct_matrix(n: usize, block: usize) -> DenseMat {
    let d = dct_matrix(block);
    let mut t = DenseMat::zeros(n, n);
    for b in 0..n / block {
        let o = b * block;
        for i in 0..block {
            for j in 0..block {
                t[(o + i, o + j)] = d[(i, j)];
            }
        }
    }
    t
}

pub fn build_transform(kind: TransformKind, dim: usize) -> Result<SparsifyTransform> {
    if dim < 2 {
        return Err(Error::Config(format!("transform dimension must be >= 2, got {dim}")));
    }
    let matrix = match kind {
        TransformKind::Identity => None,
        TransformKind::HaarDwt1 { .. } => {
            if dim % 2 != 0 {
                return Err(Error::Config(format!("Haar DWT needs an even dimension, got {dim}")));
            }
            Some(haar_matrix(dim))
        }
        TransformKind::Dct => Some(dct_matrix(dim)),
        TransformKind::BlockDct { block } => {
            if block == 0 || dim % block != 0 {
                return Err(Error::Config(format!(
                    "block size {block} does not divide dimension {dim}"
                )));
            }
            Some(block_dct_matrix(dim, block))
        }
    };
    Ok(SparsifyTransform { kind, dim, matrix })
}

impl SparsifyTransform {
    /// Identity of any dimension, including 1.
    pub(crate) fn identity(dim: usize) -> Self {
        Self {
            kind: TransformKind::Identity,
            dim,
            matrix: None,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `T`.
    pub fn dense(&self) -> DenseMat {
        self.matrix
            .clone()
            .unwrap_or_else(|| DenseMat::identity(self.dim))
    }

    fn zeroing(&self) -> bool {
        matches!(self.kind, TransformKind::HaarDwt1 { zero_high_freq: true })
    }

    fn check(&self, m: &DenseMat, what: &str) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!(
                "{what} is {}x{}, transform has dimension {}",
                m.rows(),
                m.cols(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `T·G·Tᵀ`, with the high-pass half masked to exact zeros when zeroing
    /// is enabled. The result is symmetrized to remove rounding asymmetry.
    pub fn to_spectral(&self, g: &DenseMat) -> Result<DenseMat> {
        self.check(g, "Gram matrix")?;
        let mut out = match &self.matrix {
            None => g.clone(),
            Some(t) => {
                let tg = t.matmul(g)?;
                let mut r = tg.matmul(&t.transpose())?;
                r.symmetrize();
                r
            }
        };
        if self.zeroing() {
            let half = self.dim / 2;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if i >= half || j >= half {
                        out[(i, j)] = 0.0;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Tᵀ·H·T`.
    pub fn from_spectral(&self, h: &DenseMat) -> Result<DenseMat> {
        self.check(h, "spectral matrix")?;
        match &self.matrix {
            None => Ok(h.clone()),
            Some(t) => {
                let mut r = t.t_matmul(h)?.matmul(t)?;
                r.symmetrize();
                Ok(r)
            }
        }
    }

    /// `B·Tᵀ` for `B` with `dim` columns.
    pub fn rows_forward(&self, b: &DenseMat) -> Result<DenseMat> {
        if b.cols() != self.dim {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, transform has dimension {}",
                b.cols(),
                self.dim
            )));
        }
        match &self.matrix {
            None => Ok(b.clone()),
            Some(t) => b.matmul(&t.transpose()),
        }
    }

    /// `Y·T` for `Y` with `dim` columns.
    pub fn rows_inverse(&self, y: &DenseMat) -> Result<DenseMat> {
        if y.cols() != self.dim {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, transform has dimension {}",
                y.cols(),
                self.dim
            )));
        }
        match &self.matrix {
            None => Ok(y.clone()),
            Some(t) => y.matmul(t),
        }
    }

    /// `T·x` for a single vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector has length {}, transform has dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(match &self.matrix {
            None => x.to_vec(),
            Some(t) => t.mul_vec(x),
        })
    }

    /// `Tᵀ·y` for a single vector.
    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector has length {}, transform has dimension {}",
                y.len(),
                self.dim
            )));
        }
        Ok(match &self.matrix {
            None => y.to_vec(),
            Some(t) => {
                let mut out = vec![0.0; self.dim];
                for (k, yk) in y.iter().enumerate() {
                    for (o, tkj) in out.iter_mut().zip(t.row(k)) {
                        *o += yk * tkj;
                    }
                }
                out
            }
        })
    }
}
