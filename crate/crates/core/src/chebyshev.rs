//! Shrinkage kernels and their Chebyshev approximations.
//!
//! A singular value shrinkage `g(σ)` is applied through the Gram matrix
//! `BᵀB`, whose eigenvalues are `x = σ²`. Every kernel is therefore expressed
//! as an eigenvalue response `h(x) = g(√x)/√x` and approximated on
//! `[0, Λ_max]` by a truncated Chebyshev series in the shifted variable
//! `t = 2x/Λ_max − 1`.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matcore::sparse::{mul_add, Csr, SparseSym};

/// Weight function of the weighted soft kernel, evaluated at the Gram
/// eigenvalue `x`.
#[derive(Clone)]
pub enum Weight {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Weight {
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Weight::Constant(w) => *w,
            Weight::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Constant(w) => write!(f, "Constant({w})"),
            Weight::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Singular value shrinkage kernel.
///
/// All three variants are instances of the generic response
/// `h(x; a, τ) = (√x − a)/√x` for `√x > τ` and `0` otherwise:
/// hard uses `a = 0, τ = tau_hard`, soft uses `a = τ = inv_rho` and weighted
/// soft uses `a = τ = weight(x)/rho`.
#[derive(Clone, Debug)]
pub enum ShrinkageKernel {
    Hard { tau_hard: f64 },
    Soft { inv_rho: f64 },
    WeightedSoft { weight: Weight, rho: f64 },
}

impl ShrinkageKernel {
    /// Hard kernel with the smallest positive threshold: `g(σ) = σ` for every
    /// `σ > 0`.
    pub fn identity() -> Self {
        ShrinkageKernel::Hard {
            tau_hard: f64::MIN_POSITIVE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            ShrinkageKernel::Hard { tau_hard } => ok(*tau_hard, "tau_hard"),
            ShrinkageKernel::Soft { inv_rho } => ok(*inv_rho, "inv_rho"),
            ShrinkageKernel::WeightedSoft { weight, rho } => {
                ok(*rho, "rho")?;
                if let Weight::Constant(w) = weight {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(Error::Config(format!(
                            "weight must be nonnegative and finite, got {w}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Order used when the caller does not pick one.
    pub fn default_order(&self) -> usize {
        match self {
            ShrinkageKernel::Soft { .. } => 10,
            ShrinkageKernel::WeightedSoft { .. } => 20,
            ShrinkageKernel::Hard { .. } => 50,
        }
    }

    /// `(a, τ)` of the generic response at eigenvalue `x`.
    fn params_at(&self, x: f64) -> (f64, f64) {
        match self {
            ShrinkageKernel::Hard { tau_hard } => (0.0, *tau_hard),
            ShrinkageKernel::Soft { inv_rho } => (*inv_rho, *inv_rho),
            ShrinkageKernel::WeightedSoft { weight, rho } => {
                let a = weight.at(x).max(0.0) / rho;
                (a, a)
            }
        }
    }

    /// Threshold `τ` on the singular value scale at eigenvalue `x`.
    pub fn threshold_at(&self, x: f64) -> f64 {
        self.params_at(x).1
    }

    /// Eigenvalue response `h(x)`; rejects negative arguments.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!(
                "kernel evaluated at negative eigenvalue {x}"
            )));
        }
        Ok(self.response(x))
    }

    /// `h(x)` for `x ≥ 0`. The zero branch is tested first, so `√x` only
    /// appears in a denominator when it exceeds a positive threshold.
    pub(crate) fn response(&self, x: f64) -> f64 {
        let s = x.max(0.0).sqrt();
        let (a, tau) = self.params_at(x);
        if s > tau && s > 0.0 {
            (s - a) / s
        } else {
            0.0
        }
    }

    /// Singular value map `g(σ) = σ·h(σ²)` for `σ ≥ 0`.
    pub fn singular(&self, sigma: f64) -> f64 {
        let x = sigma * sigma;
        let (a, tau) = self.params_at(x);
        if sigma > tau {
            sigma - a
        } else {
            0.0
        }
    }
}

/// Chebyshev polynomial of the first kind `ψ_k(t)` by the three-term recurrence.
pub fn chebyshev_t(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut p2, mut p1) = (1.0, t);
            for _ in 2..=k {
                let p = 2.0 * t * p1 - p2;
                p2 = p1;
                p1 = p;
            }
            p1
        }
    }
}

/// Truncated Chebyshev series `ĥ(x) = ½ĉ₀ + Σ_{k=1}^{α−1} ĉ_k ψ_k(2x/Λ_max − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    coeffs: Vec<f64>,
    lambda_max: f64,
}

impl ChebyshevSeries {
    /// Samples `h` at the `alpha` Chebyshev nodes of `[0, lambda_max]`:
    /// `ĉ_k = (2/α) Σ_{l=1}^{α} cos(kθ_l) h((Λ/2)(cos θ_l + 1))`, `θ_l = π(l − ½)/α`.
    pub(crate) fn from_fn(h: impl Fn(f64) -> f64, alpha: usize, lambda_max: f64) -> Result<Self> {
        if alpha < 2 {
            return Err(Error::Config(format!("approximation order must be >= 2, got {alpha}")));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_max must be positive and finite, got {lambda_max}"
            )));
        }
        let a = alpha as f64;
        let thetas: Vec<f64> = (1..=alpha).map(|l| PI * (l as f64 - 0.5) / a).collect();
        let samples: Vec<f64> = thetas
            .iter()
            .map(|th| h(0.5 * lambda_max * (th.cos() + 1.0)))
            .collect();
        let coeffs = (0..alpha)
            .map(|k| {
                let s: f64 = thetas
                    .iter()
                    .zip(&samples)
                    .map(|(th, hv)| (k as f64 * th).cos() * hv)
                    .sum();
                2.0 / a * s
            })
            .collect::<Vec<_>>();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("kernel produced non-finite samples".into()));
        }
        Ok(Self { coeffs, lambda_max })
    }

    /// Builds a series from explicit coefficients.
    pub fn from_coefficients(coeffs: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Config("a series needs at least two coefficients".into()));
        }
        if !(lambda_max > 0.0) || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("invalid series parameters".into()));
        }
        Ok(Self { coeffs, lambda_max })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn coeff_abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// `ĥ(x)` for `x ∈ [0, Λ_max]`. Outside the interval the polynomials grow
    /// without bound, so the call is rejected.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let slack = 1e-12 * self.lambda_max;
        if !(x >= -slack && x <= self.lambda_max + slack) {
            return Err(Error::Domain(format!(
                "x = {x} outside the approximation interval [0, {}]",
                self.lambda_max
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let t = (2.0 * x / self.lambda_max - 1.0).clamp(-1.0, 1.0);
        let mut acc = 0.5 * self.coeffs[0] + self.coeffs[1] * t;
        let (mut p2, mut p1) = (1.0, t);
        for &c in &self.coeffs[2..] {
            let p = 2.0 * t * p1 - p2;
            acc += c * p;
            p2 = p1;
            p1 = p;
        }
        acc
    }
}

/// Chebyshev coefficients of a kernel's eigenvalue response on `[0, lambda_max]`.
pub fn cheby_coefficients(
    kernel: &ShrinkageKernel,
    alpha: usize,
    lambda_max: f64,
) -> Result<ChebyshevSeries> {
    kernel.validate()?;
    ChebyshevSeries::from_fn(|x| kernel.response(x), alpha, lambda_max)
}

/// Shorthand for `cheby_coefficients(..)?.eval(x)`.
pub fn series_eval_scalar(s: &ChebyshevSeries, x: f64) -> Result<f64> {
    s.eval(x)
}

/// Bookkeeping from one run of the matrix recurrence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecurrenceStats {
    /// Stored entries of the shifted operand `B̂ = (2/Λ_max)Φ − I`.
    pub nnz_shifted: usize,
    /// Stored entries of `Ψ_k(B̂)` for `k = 0..α`.
    pub nnz_terms: Vec<usize>,
    /// Stored entries of the result.
    pub nnz_result: usize,
    /// Largest number of polynomial matrices (`Ψ_{k−1}`, `Ψ_{k−2}` and the
    /// running sum) retained between recurrence steps. Scratch space of a
    /// single row product is not counted.
    pub peak_retained: usize,
}

/// Counts live polynomial matrices; see [`RecurrenceStats::peak_retained`].
struct Retained<'a> {
    live: &'a Cell<usize>,
    peak: &'a Cell<usize>,
}

struct Poly<'a> {
    m: Csr,
    counter: &'a Retained<'a>,
}

impl<'a> Retained<'a> {
    fn hold(&'a self, m: Csr) -> Poly<'a> {
        self.live.set(self.live.get() + 1);
        self.peak.set(self.peak.get().max(self.live.get()));
        Poly { m, counter: self }
    }
}

impl Drop for Poly<'_> {
    fn drop(&mut self) {
        self.counter.live.set(self.counter.live.get() - 1);
    }
}

/// `Ĥ(Φ) = ½ĉ₀ I + Σ_{k≥1} ĉ_k Ψ_k(B̂)` with `B̂ = (2/Λ_max)Φ − I` and
/// `Ψ_k = 2B̂Ψ_{k−1} − Ψ_{k−2}`.
///
/// `phi` must have its spectrum inside `[0, s.lambda_max()]`; otherwise the
/// terms grow geometrically. The call returns [`Error::Divergence`] when the
/// result exceeds `1e3·Σ|ĉ_k|` or a term overflows.
pub fn series_apply_matrix(s: &ChebyshevSeries, phi: &SparseSym) -> Result<SparseSym> {
    series_apply_matrix_with_stats(s, phi).map(|(h, _)| h)
}

pub fn series_apply_matrix_with_stats(
    s: &ChebyshevSeries,
    phi: &SparseSym,
) -> Result<(SparseSym, RecurrenceStats)> {
    let n = phi.dim();
    let c = s.coeffs();
    let lambda_max = s.lambda_max();
    let identity = Csr::identity(n);
    let shifted = phi
        .as_csr()
        .lin_comb(2.0 / lambda_max, &identity, -1.0)?;

    let live = Cell::new(0);
    let peak = Cell::new(0);
    let retained = Retained {
        live: &live,
        peak: &peak,
    };
    let mut stats = RecurrenceStats {
        nnz_shifted: shifted.nnz(),
        nnz_terms: vec![identity.nnz(), shifted.nnz()],
        ..Default::default()
    };

    let mut acc = retained.hold(identity.lin_comb(0.5 * c[0], &shifted, c[1])?);
    let mut prev2 = retained.hold(identity);
    let mut prev1 = retained.hold(shifted.clone());

    let bound = 1e3 * s.coeff_abs_sum();
    let overflow = |m: &Csr| -> Result<()> {
        let max_entry = m.max_abs();
        if !max_entry.is_finite() {
            return Err(Error::Divergence {
                max_entry,
                bound,
                lambda_max,
            });
        }
        Ok(())
    };

    for &ck in &c[2..] {
        let next = mul_add(&shifted, &prev1.m, 2.0, Some((&prev2.m, -1.0)))?;
        // Ψ_{k−2} is released before Ψ_k is retained.
        drop(prev2);
        overflow(&next)?;
        stats.nnz_terms.push(next.nnz());
        acc.m = acc.m.lin_comb(1.0, &next, ck)?;
        prev2 = prev1;
        prev1 = retained.hold(next);
    }
    drop(prev1);
    drop(prev2);

    let max_entry = acc.m.max_abs();
    if !(max_entry <= bound.max(f64::MIN_POSITIVE)) && max_entry > 0.0 {
        return Err(Error::Divergence {
            max_entry,
            bound,
            lambda_max,
        });
    }
    let tol = 1e-9 * max_entry.max(1.0);
    let result = SparseSym::try_from_csr(std::mem::replace(&mut acc.m, Csr::zeros(0)), tol)?;
    drop(acc);
    stats.nnz_result = result.nnz();
    stats.peak_retained = peak.get();
    Ok((result, stats))
}
