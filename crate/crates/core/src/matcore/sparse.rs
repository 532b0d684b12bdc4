//! Square compressed-row matrices.
//!
//! [`Csr`] is the general square storage; [`SparseSym`] wraps it and
//! guarantees structural and numerical symmetry. Products of two symmetric
//! matrices are only symmetric when the factors commute, so [`sparse_mul`]
//! returns a plain [`Csr`]; the Chebyshev recurrence re-validates symmetry
//! where it is known to hold.

use super::dense::DenseMat;
use crate::error::{Error, Result};

/// Entries whose magnitude falls below this after a product are not stored.
pub const DROP_TOL: f64 = 1e-14;

/// Tolerance on `|a_ij − a_ji|` accepted when wrapping a [`Csr`] as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Square sparse matrix in compressed row form. Column indices are strictly
/// increasing within each row and explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut b = CsrBuilder::new(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                b.push(i, d);
            }
            b.finish_row();
        }
        b.build()
    }

    /// Keeps the entries of a square dense matrix selected by `keep`; zeros
    /// are always dropped.
    pub fn from_dense_filtered(
        dense: &DenseMat,
        mut keep: impl FnMut(usize, usize, f64) -> bool,
    ) -> Result<Self> {
        if !dense.is_square() {
            return Err(Error::Dimension(format!(
                "sparse storage is square, got {:?}",
                dense.shape()
            )));
        }
        let n = dense.rows();
        let mut b = CsrBuilder::new(n, n);
        for i in 0..n {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v != 0.0 && keep(i, j, v) {
                    b.push(j, v);
                }
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn from_dense(dense: &DenseMat) -> Result<Self> {
        Self::from_dense_filtered(dense, |_, _, _| true)
    }

    /// Builds from unordered `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::Dimension(format!(
                    "triplet ({i}, {j}) outside a {dim}x{dim} matrix"
                )));
            }
            rows[i].push((j, v));
        }
        let mut b = CsrBuilder::new(dim, triplets.len());
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    b.push(j, v);
                }
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.vals[s..e])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut d = DenseMat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut counts = vec![0usize; n + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..n {
            let (cols, vs) = self.row(i);
            for (&j, &v) in cols.iter().zip(vs) {
                let slot = next[j];
                col_idx[slot] = i;
                vals[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            dim: n,
            row_ptr: counts,
            col_idx,
            vals,
        }
    }

    /// Largest `|a_ij − a_ji|` over the union of both patterns.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            merge_rows(self.row(i), t.row(i), |_, a, b| {
                worst = worst.max((a - b).abs());
            });
        }
        worst
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `a·self + b·other`, dropping entries below [`DROP_TOL`].
    pub fn lin_comb(&self, a: f64, other: &Csr, b: f64) -> Result<Csr> {
        check_dims(self, other)?;
        let mut out = CsrBuilder::new(self.dim, self.nnz().max(other.nnz()));
        for i in 0..self.dim {
            merge_rows(self.row(i), other.row(i), |j, x, y| {
                let v = a * x + b * y;
                if v.abs() >= DROP_TOL {
                    out.push(j, v);
                }
            });
            out.finish_row();
        }
        Ok(out.build())
    }

    /// Returns `self + c·I`.
    pub fn add_diagonal(&self, c: f64) -> Csr {
        self.lin_comb(1.0, &Csr::identity(self.dim), c)
            .expect("identity has matching dimension")
    }

    /// Diagonal entries as a dense vector.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }
}

/// Row-by-row CSR assembly.
pub(crate) struct CsrBuilder {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub(crate) fn new(dim: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        Self {
            dim,
            row_ptr,
            col_idx: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, col: usize, val: f64) {
        self.col_idx.push(col);
        self.vals.push(val);
    }

    #[inline]
    pub(crate) fn finish_row(&mut self) {
        self.row_ptr.push(self.col_idx.len());
    }

    pub(crate) fn build(self) -> Csr {
        debug_assert_eq!(self.row_ptr.len(), self.dim + 1);
        Csr {
            dim: self.dim,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            vals: self.vals,
        }
    }
}

fn check_dims(a: &Csr, b: &Csr) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::Dimension(format!(
            "sparse operands of dimension {} and {}",
            a.dim, b.dim
        )));
    }
    Ok(())
}

/// Walks the union of two sorted sparse rows, calling `f(col, a, b)` with
/// zeros filled in for missing entries.
#[inline]
fn merge_rows(
    (ca, va): (&[usize], &[f64]),
    (cb, vb): (&[usize], &[f64]),
    mut f: impl FnMut(usize, f64, f64),
) {
    let (mut p, mut q) = (0, 0);
    while p < ca.len() || q < cb.len() {
        let ja = ca.get(p).copied().unwrap_or(usize::MAX);
        let jb = cb.get(q).copied().unwrap_or(usize::MAX);
        if ja == jb {
            f(ja, va[p], vb[q]);
            p += 1;
            q += 1;
        } else if ja < jb {
            f(ja, va[p], 0.0);
            p += 1;
        } else {
            f(jb, 0.0, vb[q]);
            q += 1;
        }
    }
}

/// Dense scatter accumulator for Gustavson-style row products.
struct Accumulator {
    values: Vec<f64>,
    occupied: Vec<bool>,
    pattern: Vec<usize>,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            occupied: vec![false; dim],
            pattern: Vec::new(),
        }
    }

    #[inline]
    fn add(&mut self, j: usize, v: f64) {
        if !self.occupied[j] {
            self.occupied[j] = true;
            self.pattern.push(j);
        }
        self.values[j] += v;
    }

    /// Flushes the current row into `out` in column order.
    fn drain_into(&mut self, out: &mut CsrBuilder) {
        self.pattern.sort_unstable();
        for &j in &self.pattern {
            let v = self.values[j];
            if v.abs() >= DROP_TOL {
                out.push(j, v);
            }
            self.values[j] = 0.0;
            self.occupied[j] = false;
        }
        self.pattern.clear();
        out.finish_row();
    }
}

/// Computes `alpha·A·B + beta·C` (the `C` term is optional) row by row.
pub(crate) fn mul_add(a: &Csr, b: &Csr, alpha: f64, c: Option<(&Csr, f64)>) -> Result<Csr> {
    check_dims(a, b)?;
    if let Some((c, _)) = c {
        check_dims(a, c)?;
    }
    let n = a.dim;
    let mut acc = Accumulator::new(n);
    let mut out = CsrBuilder::new(n, a.nnz().max(b.nnz()));
    for i in 0..n {
        let (acols, avals) = a.row(i);
        for (&k, &av) in acols.iter().zip(avals) {
            let s = alpha * av;
            let (bcols, bvals) = b.row(k);
            for (&j, &bv) in bcols.iter().zip(bvals) {
                acc.add(j, s * bv);
            }
        }
        if let Some((c, beta)) = c {
            let (ccols, cvals) = c.row(i);
            for (&j, &cv) in ccols.iter().zip(cvals) {
                acc.add(j, beta * cv);
            }
        }
        acc.drain_into(&mut out);
    }
    Ok(out.build())
}

/// Exact sparse product `A·B`; entries with magnitude below [`DROP_TOL`] are dropped.
pub fn sparse_mul(a: &SparseSym, b: &SparseSym) -> Result<Csr> {
    mul_add(a.as_csr(), b.as_csr(), 1.0, None)
}

/// Dense-times-sparse product `X·S`.
pub fn dense_mul_sparse(x: &DenseMat, s: &Csr) -> Result<DenseMat> {
    if x.cols() != s.dim() {
        return Err(Error::Dimension(format!(
            "cannot multiply {:?} by a {}x{} sparse matrix",
            x.shape(),
            s.dim(),
            s.dim()
        )));
    }
    let mut out = DenseMat::zeros(x.rows(), s.dim());
    for i in 0..x.rows() {
        let xi = x.row(i).to_vec();
        let yi = out.row_mut(i);
        for (k, &xv) in xi.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let (cols, vals) = s.row(k);
            for (&j, &sv) in cols.iter().zip(vals) {
                yi[j] += xv * sv;
            }
        }
    }
    Ok(out)
}

/// Symmetric square sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym(Csr);

impl SparseSym {
    pub fn identity(dim: usize) -> Self {
        Self(Csr::identity(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(Csr::from_diag(diag))
    }

    /// Wraps `csr` after checking `|a_ij − a_ji| ≤ tol`; the stored values are
    /// then averaged with the transpose so the result is exactly symmetric.
    pub fn try_from_csr(csr: Csr, tol: f64) -> Result<Self> {
        let asym = csr.asymmetry();
        if asym > tol {
            return Err(Error::Contract(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {asym:.3e} > {tol:.1e})"
            )));
        }
        if asym == 0.0 {
            return Ok(Self(csr));
        }
        let sym = csr.lin_comb(0.5, &csr.transpose(), 0.5)?;
        Ok(Self(sym))
    }

    /// Sparse copy of a dense symmetric matrix.
    pub fn from_dense(dense: &DenseMat) -> Result<Self> {
        Self::try_from_csr(Csr::from_dense(dense)?, SYMMETRY_TOL)
    }

    /// Keeps entry `(i, j)` when `keep(|a_ij|)` holds, deciding each pair
    /// from the upper triangle so the pattern stays symmetric. The input must
    /// be square; symmetry is the caller's responsibility.
    pub(crate) fn from_dense_upper(dense: &DenseMat, keep: impl Fn(f64) -> bool) -> Result<Self> {
        let csr = Csr::from_dense_filtered(dense, |i, j, _| {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            keep(dense[(r, c)].abs())
        })?;
        // Mirror the upper triangle so values agree exactly.
        let n = csr.dim();
        let mut b = CsrBuilder::new(n, csr.nnz());
        for i in 0..n {
            let (cols, _) = csr.row(i);
            for &j in cols {
                let v = if i <= j { dense[(i, j)] } else { dense[(j, i)] };
                if v != 0.0 {
                    b.push(j, v);
                }
            }
            b.finish_row();
        }
        Ok(Self(b.build()))
    }

    #[inline]
    pub fn as_csr(&self) -> &Csr {
        &self.0
    }

    pub fn into_csr(self) -> Csr {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn nnz(&self) -> usize {
        self.0.nnz()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn to_dense(&self) -> DenseMat {
        self.0.to_dense()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        self.0.mul_vec(x, y)
    }
}
