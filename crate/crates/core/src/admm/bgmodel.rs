//! Low-rank plus sparse decomposition of a video, `I = L + S`:
//! `min ‖L‖_* + η‖S‖₁` subject to `L + S = I`.
//!
//! With `l = [L; S]` and `K = [[I, 0], [0, I], [I, I]]` the normal matrix is
//! `KᵀK = [[2I, I], [I, 2I]]`, whose inverse is `(1/3)[[2I, −I], [−I, 2I]]`.

use web_time::Instant;

use super::prox::{prox_l1_in_place, prox_nuclear};
use super::trace::{AdmmTrace, IterRecord};
use super::{dist, norm, AdmmParams};
use crate::error::{Error, Result};
use crate::matcore::eigen::{power_iteration, PowerIterOptions};
use crate::matcore::DenseMat;
use crate::shrinkage::Backend;

/// Spectral norm of the video the default (1/ρ, η/ρ) = (480, 0.12) pair is
/// tuned for: an 86400×5000 matrix taken as uniformly mid-gray.
pub const REFERENCE_NORM: f64 = 0.5 * 20_784.609_690_826_527; // 0.5·√(86400·5000)

#[derive(Debug, Clone)]
pub struct BgModelProblem {
    frames: DenseMat,
}

impl BgModelProblem {
    /// `frames` is `pixels × frames`, one vectorized frame per column.
    pub fn new(frames: DenseMat) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Dimension("no frames".into()));
        }
        if frames.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("frame values must lie in [0, 1]".into()));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &DenseMat {
        &self.frames
    }

    /// `‖I‖₂` by power iteration on `IᵀI`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let f = &self.frames;
        let k = f.cols();
        let mut tmp = vec![0.0; f.rows()];
        let est = power_iteration(
            k,
            |x, y| {
                for (i, t) in tmp.iter_mut().enumerate() {
                    *t = f.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
                y.iter_mut().for_each(|v| *v = 0.0);
                for (i, t) in tmp.iter().enumerate() {
                    for (yj, a) in y.iter_mut().zip(f.row(i)) {
                        *yj += a * t;
                    }
                }
            },
            PowerIterOptions { tol: 1e-10, max_iter: 10_000 },
        )?;
        Ok(est.value.max(0.0).sqrt())
    }

    /// Rescales 1/ρ by `‖I‖₂ / REFERENCE_NORM`; η/ρ is kept.
    pub fn scale_params(&self, params: &AdmmParams) -> Result<AdmmParams> {
        let scale = self.spectral_norm()? / REFERENCE_NORM;
        if !(scale > 0.0) {
            return Err(Error::Domain("cannot scale parameters for an all-zero video".into()));
        }
        Ok(AdmmParams {
            inv_rho: params.inv_rho * scale,
            ..*params
        })
    }
}

/// Closed-form `(KᵀK)⁻¹Kᵀw` for `w = [w₁; w₂; w₃]`: returns `(L, S)`.
pub fn bgmodel_l_update(w: &[DenseMat; 3]) -> Result<(DenseMat, DenseMat)> {
    let a = w[0].add(&w[2])?;
    let b = w[1].add(&w[2])?;
    let l = a.scaled(2.0 / 3.0).sub(&b.scaled(1.0 / 3.0))?;
    let s = b.scaled(2.0 / 3.0).sub(&a.scaled(1.0 / 3.0))?;
    Ok((l, s))
}

#[derive(Debug, Clone)]
pub struct BgModelResult {
    pub low_rank: DenseMat,
    pub sparse: DenseMat,
    pub trace: AdmmTrace,
}

impl BgModelResult {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }
}

/// Solves with `params` used verbatim.
pub fn solve_bgmodel(p: &BgModelProblem, params: &AdmmParams, backend: &Backend) -> Result<BgModelResult> {
    run(p, params, params.inv_rho, backend)
}

/// Solves with 1/ρ rescaled to the video's spectral norm; the trace keeps
/// both the given and the used value.
pub fn solve_bgmodel_scaled(p: &BgModelProblem, params: &AdmmParams, backend: &Backend) -> Result<BgModelResult> {
    let scaled = p.scale_params(params)?;
    run(p, &scaled, params.inv_rho, backend)
}

fn run(p: &BgModelProblem, params: &AdmmParams, inv_rho_raw: f64, backend: &Backend) -> Result<BgModelResult> {
    params.validate()?;
    let start = Instant::now();
    let img = &p.frames;
    let (rows, cols) = img.shape();
    let ones = DenseMat::from_fn(rows, cols, |_, _| 1.0);

    let mut l = ones.clone();
    let mut s = ones.clone();
    let mut u: [DenseMat; 3] = std::array::from_fn(|_| ones.clone());
    let mut z = [l.clone(), s.clone(), l.add(&s)?];

    let mut trace = AdmmTrace {
        inv_rho_raw,
        inv_rho_used: params.inv_rho,
        ..Default::default()
    };
    let mut best = (f64::INFINITY, l.clone(), s.clone(), 0);
    let mut e_feed = f64::INFINITY;

    for iter in 1..=params.max_iter {
        let w: [DenseMat; 3] = std::array::from_fn(|i| z[i].sub(&u[i]).expect("same shape"));
        let (l_new, s_new) = bgmodel_l_update(&w)?;
        let change = (dist(l_new.as_slice(), l.as_slice()).powi(2)
            + dist(s_new.as_slice(), s.as_slice()).powi(2))
        .sqrt();
        let size = (norm(l_new.as_slice()).powi(2) + norm(s_new.as_slice()).powi(2)).sqrt();
        let e_t = if size > 0.0 { change / size } else { change };
        l = l_new;
        s = s_new;

        let kl = [l.clone(), s.clone(), l.add(&s)?];
        let v0 = kl[0].add(&u[0])?;
        let mut v1 = kl[1].add(&u[1])?;
        let shrink = prox_nuclear(&v0, params.inv_rho, backend, e_feed)?;
        e_feed = e_t;
        prox_l1_in_place(v1.as_mut_slice(), params.eta_over_rho);
        z = [shrink.matrix.clone(), v1, img.clone()];

        let mut r2 = 0.0;
        let mut z2 = 0.0;
        for i in 0..3 {
            let zi = z[i].as_slice();
            for ((uu, &kk), &zz) in u[i].as_mut_slice().iter_mut().zip(kl[i].as_slice()).zip(zi) {
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
            best = (e_t, l.clone(), s.clone(), iter);
        }
        if e_t <= params.stop_tol {
            trace.converged = true;
            trace.best_iter = iter;
            return Ok(BgModelResult {
                low_rank: l,
                sparse: s,
                trace,
            });
        }
    }
    trace.best_iter = best.3;
    Ok(BgModelResult {
        low_rank: best.1,
        sparse: best.2,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_norm_value() {
        assert!((REFERENCE_NORM - 0.5 * (86400.0f64 * 5000.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn l_update_inverts_k() {
        let l = DenseMat::from_fn(4, 3, |i, j| (i + 2 * j) as f64);
        let s = DenseMat::from_fn(4, 3, |i, j| (i * j) as f64 - 1.0);
        let (l2, s2) = bgmodel_l_update(&[l.clone(), s.clone(), l.add(&s).unwrap()]).unwrap();
        assert!(l2.sub(&l).unwrap().max_abs() < 1e-12);
        assert!(s2.sub(&s).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_constant_video() {
        let p = BgModelProblem::new(DenseMat::from_fn(6, 4, |_, _| 0.5)).unwrap();
        assert!((p.spectral_norm().unwrap() - 0.5 * 24f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn static_video_has_empty_foreground() {
        let frame: Vec<f64> = (0..64).map(|i| 0.2 + 0.5 * (i as f64 / 63.0)).collect();
        let frames = DenseMat::from_fn(64, 5, |i, _| frame[i]);
        let p = BgModelProblem::new(frames.clone()).unwrap();
        let r = solve_bgmodel_scaled(&p, &AdmmParams::new(480.0, 0.12), &Backend::ExactSvd).unwrap();
        assert!(r.converged());
        assert!(r.sparse.max_abs() <= 1e-2, "{}", r.sparse.max_abs());
        assert!(r.low_rank.sub(&frames).unwrap().max_abs() <= 1e-2);
        assert!(r.trace.inv_rho_used < r.trace.inv_rho_raw);
    }

    #[test]
    fn rejects_out_of_range_frames() {
        assert!(BgModelProblem::new(DenseMat::from_fn(2, 2, |_, _| 1.5)).is_err());
        assert!(BgModelProblem::new(DenseMat::zeros(0, 0)).is_err());
    }
}
