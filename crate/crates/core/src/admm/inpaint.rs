//! Low-rank inpainting with a DCT sparsity prior:
//! `min ‖L‖_* + η‖Ψ(L)‖₁` subject to agreement with the observed pixels,
//! entries in `[0, 1]` and, optionally, the recovered region having the same
//! mean as the ring of observed pixels around it.
//!
//! The stacked operator is `K = [Id; Ψ; Ω; Id; Ω̄]` with `Ψ` the orthonormal
//! 2-D DCT and `Ω`, `Ω̄` the observed and missing selectors, so `KᵀK = 4I`.
//! Iterates are stored as `m×n` matrices; reshaping column-major to vectors
//! gives the same algorithm.

use web_time::Instant;

use super::prox::{project_mean_in_place, prox_l1_in_place, prox_nuclear};
use super::trace::{AdmmTrace, IterRecord};
use super::{norm, relative_change, AdmmParams};
use crate::error::{Error, Result};
use crate::matcore::DenseMat;
use crate::shrinkage::Backend;
use crate::transforms::dct_matrix;

/// Width of the boundary ring whose mean constrains the recovered region.
pub const RING_WIDTH: usize = 5;

/// Orthonormal 2-D DCT-II of an `m×n` array: `X ↦ D_m·X·D_nᵀ`.
#[derive(Debug, Clone)]
pub struct Dct2 {
    dm: DenseMat,
    dn: DenseMat,
    dn_t: DenseMat,
}

impl Dct2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let dn = dct_matrix(cols);
        Self {
            dm: dct_matrix(rows),
            dn_t: dn.transpose(),
            dn,
        }
    }

    pub fn forward(&self, x: &DenseMat) -> Result<DenseMat> {
        self.dm.matmul(x)?.matmul(&self.dn_t)
    }

    pub fn inverse(&self, y: &DenseMat) -> Result<DenseMat> {
        self.dm.t_matmul(y)?.matmul(&self.dn)
    }
}

#[derive(Debug, Clone)]
pub struct InpaintProblem {
    image: DenseMat,
    observed: Vec<bool>,
    boundary: Vec<bool>,
    mean_constraint: bool,
}

impl InpaintProblem {
    /// `observed` is row-major over the image, `true` for known pixels.
    /// Values at missing pixels are ignored.
    pub fn new(image: DenseMat, observed: Vec<bool>) -> Result<Self> {
        let (m, n) = image.shape();
        if m == 0 || n == 0 {
            return Err(Error::Dimension("empty image".into()));
        }
        if observed.len() != m * n {
            return Err(Error::Dimension(format!(
                "mask has {} entries, image has {}x{} pixels",
                observed.len(),
                m,
                n
            )));
        }
        let bad = image
            .as_slice()
            .iter()
            .zip(&observed)
            .any(|(&v, &o)| o && !(0.0..=1.0).contains(&v));
        if bad {
            return Err(Error::Config("observed pixel values must lie in [0, 1]".into()));
        }
        let boundary = boundary_ring(m, n, &observed, RING_WIDTH);
        Ok(Self {
            image,
            observed,
            boundary,
            mean_constraint: true,
        })
    }

    /// Drops the mean constraint (`Π_M` becomes the identity).
    pub fn without_mean_constraint(mut self) -> Self {
        self.mean_constraint = false;
        self
    }

    pub fn image(&self) -> &DenseMat {
        &self.image
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn missing(&self) -> Vec<bool> {
        self.observed.iter().map(|o| !o).collect()
    }

    /// Observed pixels within chessboard distance [`RING_WIDTH`] of a
    /// missing pixel.
    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    /// Mean of the image over the boundary ring, fixed for the whole solve.
    /// `None` when the constraint is off or there is nothing to recover.
    pub fn target_mean(&self) -> Option<f64> {
        if !self.mean_constraint {
            return None;
        }
        let (s, c) = self
            .image
            .as_slice()
            .iter()
            .zip(&self.boundary)
            .filter(|(_, &b)| b)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        (c > 0).then(|| s / c as f64)
    }
}

fn boundary_ring(m: usize, n: usize, observed: &[bool], width: usize) -> Vec<bool> {
    // Separable dilation of the missing set by a (2w+1)² square.
    let mut rows = vec![false; m * n];
    for i in 0..m {
        for j in 0..n {
            if !observed[i * n + j] {
                for jj in j.saturating_sub(width)..=(j + width).min(n - 1) {
                    rows[i * n + jj] = true;
                }
            }
        }
    }
    let mut dilated = vec![false; m * n];
    for i in 0..m {
        for j in 0..n {
            if rows[i * n + j] {
                for ii in i.saturating_sub(width)..=(i + width).min(m - 1) {
                    dilated[ii * n + j] = true;
                }
            }
        }
    }
    dilated.iter().zip(observed).map(|(&d, &o)| d && o).collect()
}

fn masked(x: &DenseMat, mask: &[bool], keep: bool) -> DenseMat {
    let mut out = x.clone();
    for (v, &o) in out.as_mut_slice().iter_mut().zip(mask) {
        if o != keep {
            *v = 0.0;
        }
    }
    out
}

/// `K·l = [l, Ψ(l), Ω∘l, l, Ω̄∘l]`.
pub fn apply_inpaint_k(l: &DenseMat, observed: &[bool], dct: &Dct2) -> Result<[DenseMat; 5]> {
    Ok([
        l.clone(),
        dct.forward(l)?,
        masked(l, observed, true),
        l.clone(),
        masked(l, observed, false),
    ])
}

/// Closed-form `l = (KᵀK)⁻¹Kᵀw = ¼Kᵀw` for `w = z − u`.
pub fn inpaint_l_update(w: &[DenseMat; 5], observed: &[bool], dct: &Dct2) -> Result<DenseMat> {
    let mut l = w[0].add(&dct.inverse(&w[1])?)?.add(&w[3])?;
    let s = l.as_mut_slice();
    for (i, &o) in observed.iter().enumerate() {
        s[i] += if o { w[2].as_slice()[i] } else { w[4].as_slice()[i] };
    }
    l.scale(0.25);
    Ok(l)
}

#[derive(Debug, Clone)]
pub struct InpaintResult {
    pub image: DenseMat,
    pub trace: AdmmTrace,
}

impl InpaintResult {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }
}

/// Runs ADMM from the all-ones start until `E_t ≤ stop_tol` or `max_iter`.
/// Without convergence the iterate with the smallest `E_t` is returned and
/// the trace's `converged` flag is false.
pub fn solve_inpaint(p: &InpaintProblem, params: &AdmmParams, backend: &Backend) -> Result<InpaintResult> {
    params.validate()?;
    let start = Instant::now();
    let (m, n) = p.image.shape();
    let dct = Dct2::new(m, n);
    let observed = &p.observed;
    let missing = p.missing();
    let target = p.target_mean();

    let mut l = DenseMat::from_fn(m, n, |_, _| 1.0);
    let mut u: [DenseMat; 5] = std::array::from_fn(|_| l.clone());
    let mut z = apply_inpaint_k(&l, observed, &dct)?;

    let mut trace = AdmmTrace {
        inv_rho_raw: params.inv_rho,
        inv_rho_used: params.inv_rho,
        ..Default::default()
    };
    let mut best = (f64::INFINITY, l.clone(), 0);
    let mut e_feed = f64::INFINITY;

    for iter in 1..=params.max_iter {
        let w: [DenseMat; 5] = std::array::from_fn(|i| z[i].sub(&u[i]).expect("same shape"));
        let l_new = inpaint_l_update(&w, observed, &dct)?;
        let e_t = relative_change(l_new.as_slice(), l.as_slice());
        l = l_new;

        let kl = apply_inpaint_k(&l, observed, &dct)?;
        let v: [DenseMat; 5] = std::array::from_fn(|i| kl[i].add(&u[i]).expect("same shape"));

        let shrink = prox_nuclear(&v[0], params.inv_rho, backend, e_feed)?;
        e_feed = e_t;
        let [v0, mut v1, mut v2, mut v3, mut v4] = v;
        drop(v0);
        prox_l1_in_place(v1.as_mut_slice(), params.eta_over_rho);
        for ((x, &iv), &o) in v2.as_mut_slice().iter_mut().zip(p.image.as_slice()).zip(observed) {
            if o {
                *x = iv;
            }
        }
        v3.as_mut_slice().iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        if let Some(t) = target {
            project_mean_in_place(v4.as_mut_slice(), t, &missing);
        }
        z = [shrink.matrix.clone(), v1, v2, v3, v4];

        let mut r2 = 0.0;
        let mut z2 = 0.0;
        for i in 0..5 {
            let zi = z[i].as_slice();
            let ki = kl[i].as_slice();
            for ((uu, &kk), &zz) in u[i].as_mut_slice().iter_mut().zip(ki).zip(zi) {
                *uu += kk - zz;
                r2 += (kk - zz).powi(2);
            }
            z2 += norm(zi).powi(2);
        }

        let cpa = shrink.cpa.as_ref();
        trace.records.push(IterRecord {
            iter,
            e_t,
            primal_residual: if z2 > 0.0 { (r2 / z2).sqrt() } else { r2.sqrt() },
            epsilon: cpa.map(|d| d.epsilon),
            nnz_phi: cpa.map(|d| d.nnz_phi),
            shrink: shrink.elapsed,
            total: start.elapsed(),
        });
        if e_t < best.0 {
            best = (e_t, l.clone(), iter);
        }
        if e_t <= params.stop_tol {
            trace.converged = true;
            trace.best_iter = iter;
            return Ok(InpaintResult { image: l, trace });
        }
    }
    trace.best_iter = best.2;
    Ok(InpaintResult { image: best.1, trace })
}
