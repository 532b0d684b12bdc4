//! ADMM solvers for the inpainting and background-modeling problems.
//!
//! Both solvers use the scaled-dual form: `l ← (KᵀK)⁻¹Kᵀ(z − u)`, then one
//! proximity or projection step per block of `z`, then `u ← u + K·l − z`.
//! The normal matrices have closed-form inverses, so no linear solve is
//! needed.

pub mod bgmodel;
pub mod inpaint;
pub mod prox;
pub mod trace;

pub use bgmodel::{bgmodel_l_update, solve_bgmodel, solve_bgmodel_scaled, BgModelProblem, BgModelResult};
pub use inpaint::{apply_inpaint_k, inpaint_l_update, solve_inpaint, Dct2, InpaintProblem, InpaintResult};
pub use prox::{project_box, project_mean, project_observed, prox_l1, prox_nuclear};
pub use trace::{AdmmTrace, IterRecord};

use crate::error::{Error, Result};

pub const DEFAULT_STOP_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    /// Nuclear prox threshold 1/ρ.
    pub inv_rho: f64,
    /// ℓ1 prox threshold η/ρ.
    pub eta_over_rho: f64,
    pub stop_tol: f64,
    pub max_iter: usize,
}

impl AdmmParams {
    pub fn new(inv_rho: f64, eta_over_rho: f64) -> Self {
        Self {
            inv_rho,
            eta_over_rho,
            stop_tol: DEFAULT_STOP_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inv_rho", self.inv_rho),
            ("eta_over_rho", self.eta_over_rho),
            ("stop_tol", self.stop_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `‖new − old‖ / ‖new‖`, `+∞` when `new` is zero but `old` is not.
pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let d = dist(new, old);
    let n = norm(new);
    if n > 0.0 {
        d / n
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
