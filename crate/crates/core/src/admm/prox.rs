//! Proximity operators and projections used by the ADMM z-updates.

use crate::chebyshev::ShrinkageKernel;
use crate::error::{Error, Result};
use crate::matcore::DenseMat;
use crate::shrinkage::{shrink_dispatch, Backend, ShrinkOutput};

/// Entrywise `sign(x)·max(|x| − γ, 0)`.
pub fn prox_l1(x: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    prox_l1_in_place(&mut out, gamma);
    out
}

pub fn prox_l1_in_place(x: &mut [f64], gamma: f64) {
    for v in x {
        let a = v.abs() - gamma;
        *v = if a > 0.0 { a.copysign(*v) } else { 0.0 };
    }
}

/// Singular value soft shrinkage with threshold `gamma`.
pub fn prox_nuclear(x: &DenseMat, gamma: f64, backend: &Backend, e_t: f64) -> Result<ShrinkOutput> {
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("nuclear prox threshold must be positive, got {gamma}")));
    }
    shrink_dispatch(x, &ShrinkageKernel::Soft { inv_rho: gamma }, backend, e_t)
}

/// `Π_I`: entries with `observed[i]` take `image[i]`, the rest keep `x[i]`.
pub fn project_observed(x: &[f64], image: &[f64], observed: &[bool]) -> Vec<f64> {
    x.iter()
        .zip(image)
        .zip(observed)
        .map(|((&xv, &iv), &o)| if o { iv } else { xv })
        .collect()
}

/// `Π_D`: clamp to `[0, 1]`.
pub fn project_box(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// `Π_M`: shift the entries of `region` by a common `δ` so their mean is
/// `target`. An empty region leaves `x` unchanged.
pub fn project_mean(x: &[f64], target: f64, region: &[bool]) -> Vec<f64> {
    let mut out = x.to_vec();
    project_mean_in_place(&mut out, target, region);
    out
}

pub fn project_mean_in_place(x: &mut [f64], target: f64, region: &[bool]) {
    let (sum, count) = x
        .iter()
        .zip(region)
        .filter(|(_, &r)| r)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    if count == 0 {
        return;
    }
    let delta = target - sum / count as f64;
    for (v, _) in x.iter_mut().zip(region).filter(|(_, &r)| r) {
        *v += delta;
    }
}
