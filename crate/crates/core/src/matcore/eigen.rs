//! Largest-eigenvalue estimation by power iteration.

use super::sparse::SparseSym;
use crate::error::{Error, Result};

/// Multiplier applied to a power-iteration estimate before it is used as the
/// upper end of the Chebyshev approximation interval.
pub const LAMBDA_SAFETY: f64 = 1.01;

pub const DEFAULT_POWER_TOL: f64 = 1e-6;
pub const DEFAULT_POWER_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_POWER_TOL,
            max_iter: DEFAULT_POWER_MAX_ITER,
        }
    }
}

/// Result of a power iteration. `converged == false` is a warning: `value`
/// still holds the last Rayleigh quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EigenEstimate {
    /// `value · 1.01`, the bound used as Λ_max.
    pub fn safe_bound(&self) -> f64 {
        self.value * LAMBDA_SAFETY
    }
}

/// Power iteration for the dominant eigenvalue of a symmetric PSD operator.
///
/// Starts from the all-ones vector. The stopping rule extrapolates the
/// remaining error from the ratio of successive Rayleigh-quotient increments,
/// so slowly converging problems are not declared converged on a small step.
pub fn power_iteration(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    opts: PowerIterOptions,
) -> Result<EigenEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!(
            "power iteration tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if dim == 0 {
        return Err(Error::Dimension("power iteration on an empty operator".into()));
    }
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut y = vec![0.0; dim];
    let mut lambda = 0.0;
    let mut prev_step = f64::INFINITY;
    for it in 1..=opts.max_iter {
        apply(&x, &mut y);
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Ok(EigenEstimate {
                value: if norm == 0.0 { 0.0 } else { rq },
                iterations: it,
                converged: norm == 0.0,
            });
        }
        let step = (rq - lambda).abs();
        lambda = rq;
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / norm);

        if it > 1 {
            let ratio = step / prev_step;
            let remaining = if ratio < 1.0 {
                step * ratio / (1.0 - ratio)
            } else {
                step
            };
            if step <= opts.tol * lambda.abs() && remaining <= opts.tol * lambda.abs() {
                return Ok(EigenEstimate {
                    value: lambda,
                    iterations: it,
                    converged: true,
                });
            }
        }
        prev_step = step;
    }
    Ok(EigenEstimate {
        value: lambda,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Largest eigenvalue of a sparse symmetric PSD matrix (before the safety factor).
pub fn max_eigenvalue(s: &SparseSym, tol: f64, max_iter: usize) -> Result<EigenEstimate> {
    power_iteration(s.dim(), |x, y| s.mul_vec(x, y), PowerIterOptions { tol, max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_case() {
        let s = SparseSym::from_diag(&[1.0, 2.0, 3.0]);
        let est = max_eigenvalue(&s, 1e-6, 1000).unwrap();
        assert!(est.converged);
        assert!((est.value - 3.0).abs() < 3e-6);
        assert!((est.safe_bound() - 3.03).abs() < 1e-5);
    }

    #[test]
    fn identity_converges_immediately() {
        let est = max_eigenvalue(&SparseSym::identity(4), 1e-6, 1000).unwrap();
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-12);
        assert!(est.iterations <= 3);
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let s = SparseSym::from_diag(&[0.0, 0.0]);
        let est = max_eigenvalue(&s, 1e-6, 10).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn iteration_cap_sets_warning_flag() {
        let s = SparseSym::from_diag(&[1.0, 0.999_999, 0.5]);
        let est = max_eigenvalue(&s, 1e-12, 3).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
        assert!(est.value <= 1.0 && est.value > 0.5);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(max_eigenvalue(&SparseSym::identity(2), 0.0, 10).is_err());
    }
}
