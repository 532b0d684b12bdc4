//! CPA singular value shrinkage: Gram product, transform-domain
//! sparsification, ε-thresholding, the Chebyshev recurrence and the final
//! product `B·Tᵀ·Ĥ(Φ̲)·T`.

use std::borrow::Cow;
use std::fmt;
use std::time::Duration;

use web_time::Instant;

use crate::chebyshev::{cheby_coefficients, series_apply_matrix_with_stats, ShrinkageKernel};
use crate::error::{Error, Result};
use crate::matcore::eigen::{max_eigenvalue, PowerIterOptions};
use crate::matcore::{dense_mul_sparse, exact_evd_shrink, exact_svd_shrink, gram, DenseMat, SparseSym};
use crate::transforms::{build_transform, SparsifyTransform, TransformKind};

/// Largest Gram eigenvalue below which the input is treated as zero.
const DEGENERATE_LAMBDA: f64 = 1e-12;

/// How the truncation level ε of the transformed Gram matrix is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy {
    Fixed {
        epsilon: f64,
    },
    /// ε is the k-th largest |Φ_ij| with `k = ⌈f·n²⌉`. The fraction `f` is
    /// `fractions[0]` while `E_t > e_ell`, `fractions[1]` while
    /// `e_ell ≥ E_t > e_m` and `fractions[2]` afterwards.
    AdaptiveTopK {
        e_ell: f64,
        e_m: f64,
        fractions: [f64; 3],
    },
    KeepAll,
}

impl EpsilonPolicy {
    pub const DEFAULT_E_ELL: f64 = 0.3e-1;
    pub const DEFAULT_E_M: f64 = 6e-4;
    pub const DEFAULT_FRACTIONS: [f64; 3] = [0.5e-4, 1.5e-4, 0.5e-3];

    pub fn adaptive() -> Self {
        EpsilonPolicy::AdaptiveTopK {
            e_ell: Self::DEFAULT_E_ELL,
            e_m: Self::DEFAULT_E_M,
            fractions: Self::DEFAULT_FRACTIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonPolicy::Fixed { epsilon } if !(epsilon >= 0.0) => {
                Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")))
            }
            EpsilonPolicy::AdaptiveTopK { e_ell, e_m, fractions } => {
                if !(e_ell > e_m && e_m > 0.0) {
                    return Err(Error::Config(format!(
                        "adaptive thresholds need E_ell > E_m > 0, got {e_ell} and {e_m}"
                    )));
                }
                let [a, b, c] = fractions;
                if !(0.0 < a && a < b && b < c && c <= 1.0) {
                    return Err(Error::Config(format!(
                        "adaptive fractions must increase within (0, 1], got {fractions:?}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Number of entries the adaptive rule keeps for an `n×n` matrix, or
    /// `None` for the other policies.
    pub fn keep_budget(&self, e_t: f64, n: usize) -> Option<usize> {
        let EpsilonPolicy::AdaptiveTopK { e_ell, e_m, fractions } = *self else {
            return None;
        };
        let f = if e_t > e_ell {
            fractions[0]
        } else if e_t > e_m {
            fractions[1]
        } else {
            fractions[2]
        };
        let n2 = n * n;
        let x = f * n2 as f64;
        // 1.5e-4·40000 evaluates to 5.999…; do not let that round up to 7.
        let r = x.round();
        let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
        Some((k as usize).clamp(1, n2.max(1)))
    }
}

impl fmt::Display for EpsilonPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonPolicy::Fixed { epsilon } => write!(f, "fixed:{epsilon}"),
            EpsilonPolicy::AdaptiveTopK { .. } => write!(f, "adaptive"),
            EpsilonPolicy::KeepAll => write!(f, "keepall"),
        }
    }
}

fn symmetry_tol(phi: &DenseMat) -> f64 {
    1e-9 * phi.max_abs().max(1.0)
}

/// Keeps `Φ_ij` iff `|Φ_ij| ≥ ε`. Each symmetric pair is decided once, from
/// the upper triangle.
pub fn threshold_components(phi: &DenseMat, epsilon: f64) -> Result<SparseSym> {
    if !phi.is_square() {
        return Err(Error::Dimension(format!("Φ must be square, got {:?}", phi.shape())));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let asym = phi.asymmetry();
    if asym > symmetry_tol(phi) {
        return Err(Error::Contract(format!(
            "Φ is not symmetric (max |Φ_ij − Φ_ji| = {asym:.3e})"
        )));
    }
    SparseSym::from_dense_upper(phi, |a| a >= epsilon)
}

/// k-th largest magnitude among all `n²` entries, counting duplicates.
pub fn kth_largest_magnitude(phi: &DenseMat, k: usize) -> Result<f64> {
    let len = phi.as_slice().len();
    if k == 0 || k > len {
        return Err(Error::Config(format!("k = {k} outside 1..={len}")));
    }
    let mut mags: Vec<f64> = phi.as_slice().iter().map(|v| v.abs()).collect();
    let (_, kth, _) = mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    Ok(*kth)
}

/// ε for the current ADMM residual `e_t`; pass `f64::INFINITY` on the first
/// iteration.
pub fn epsilon_for(policy: &EpsilonPolicy, e_t: f64, phi: &DenseMat) -> Result<f64> {
    if e_t.is_nan() || e_t < 0.0 {
        return Err(Error::Config(format!("E_t must be >= 0, got {e_t}")));
    }
    policy.validate()?;
    match *policy {
        EpsilonPolicy::Fixed { epsilon } => Ok(epsilon),
        EpsilonPolicy::KeepAll => Ok(0.0),
        EpsilonPolicy::AdaptiveTopK { .. } => {
            let k = policy.keep_budget(e_t, phi.rows()).expect("adaptive policy");
            kth_largest_magnitude(phi, k)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShrinkConfig {
    pub kernel: ShrinkageKernel,
    pub alpha: usize,
    pub transform: TransformKind,
    pub eps: EpsilonPolicy,
    pub power: PowerIterOptions,
}

impl ShrinkConfig {
    /// Kernel default order, identity transform, all components kept.
    pub fn new(kernel: ShrinkageKernel) -> Self {
        let alpha = kernel.default_order();
        Self {
            kernel,
            alpha,
            transform: TransformKind::Identity,
            eps: EpsilonPolicy::KeepAll,
            power: PowerIterOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.eps.validate()?;
        if self.alpha < 2 {
            return Err(Error::Config(format!("alpha must be >= 2, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// What one CPA call did.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkDiagnostics {
    pub alpha: usize,
    pub epsilon: f64,
    pub nnz_phi: usize,
    /// Stored entries of each `Ψ_k`, `k = 0..α`.
    pub nnz_psi: Vec<usize>,
    pub lambda_max: f64,
    pub power_iterations: usize,
    /// `false` when power iteration hit its cap; the estimate was still used.
    pub power_converged: bool,
    /// The Gram spectrum was numerically zero; the output is the zero matrix.
    pub degenerate: bool,
    pub transposed: bool,
    pub elapsed: Duration,
}

impl ShrinkDiagnostics {
    /// One-line `key=value` record.
    pub fn record(&self) -> String {
        let psi: Vec<String> = self.nnz_psi.iter().map(|v| v.to_string()).collect();
        format!(
            "alpha={} epsilon={:e} nnz_phi={} nnz_psi=[{}] lambda_max={:e} power_iter={} power_converged={} degenerate={} transposed={} elapsed_ms={:.3}",
            self.alpha,
            self.epsilon,
            self.nnz_phi,
            psi.join(","),
            self.lambda_max,
            self.power_iterations,
            self.power_converged,
            self.degenerate,
            self.transposed,
            self.elapsed.as_secs_f64() * 1e3
        )
    }
}

#[derive(Debug, Clone)]
pub struct ShrinkOutput {
    pub matrix: DenseMat,
    pub elapsed: Duration,
    /// Present for the CPA backend only.
    pub cpa: Option<ShrinkDiagnostics>,
}

/// CPA shrinkage of `b`. Wide inputs are transposed, shrunk and transposed
/// back.
pub fn cpa_shrink(b: &DenseMat, cfg: &ShrinkConfig, e_t: f64) -> Result<ShrinkOutput> {
    let start = Instant::now();
    cfg.validate()?;
    if b.is_empty() {
        return Err(Error::Dimension("cannot shrink an empty matrix".into()));
    }
    let transposed = b.rows() < b.cols();
    let bw: Cow<DenseMat> = if transposed {
        Cow::Owned(b.transpose())
    } else {
        Cow::Borrowed(b)
    };
    let n = bw.cols();
    let t = if n < 2 && cfg.transform == TransformKind::Identity {
        SparsifyTransform::identity(n)
    } else {
        build_transform(cfg.transform, n)?
    };

    let phi = t.to_spectral(&gram(&bw)?)?;
    let epsilon = epsilon_for(&cfg.eps, e_t, &phi)?;
    let phi_bar = threshold_components(&phi, epsilon)?;
    drop(phi);

    let est = max_eigenvalue(&phi_bar, cfg.power.tol, cfg.power.max_iter)?;
    // Thresholding can make Φ̲ indefinite; bound the whole spectrum by magnitude.
    let lambda_max = est.value.abs() * crate::matcore::LAMBDA_SAFETY;
    let mut diag = ShrinkDiagnostics {
        alpha: cfg.alpha,
        epsilon,
        nnz_phi: phi_bar.nnz(),
        nnz_psi: Vec::new(),
        lambda_max,
        power_iterations: est.iterations,
        power_converged: est.converged,
        degenerate: false,
        transposed,
        elapsed: Duration::ZERO,
    };

    let out = if lambda_max <= DEGENERATE_LAMBDA {
        diag.degenerate = true;
        DenseMat::zeros(bw.rows(), bw.cols())
    } else {
        let series = cheby_coefficients(&cfg.kernel, cfg.alpha, lambda_max)?;
        let (h, stats) = series_apply_matrix_with_stats(&series, &phi_bar)?;
        diag.nnz_psi = stats.nnz_terms;
        let y = t.rows_forward(&bw)?;
        let z = dense_mul_sparse(&y, h.as_csr())?;
        t.rows_inverse(&z)?
    };
    let matrix = if transposed { out.transpose() } else { out };
    let elapsed = start.elapsed();
    diag.elapsed = elapsed;
    Ok(ShrinkOutput {
        matrix,
        elapsed,
        cpa: Some(diag),
    })
}

/// CPA settings without the kernel, so one backend can serve kernels whose
/// thresholds change between calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpaOptions {
    /// `None` picks the kernel's default order.
    pub alpha: Option<usize>,
    pub transform: TransformKind,
    pub eps: EpsilonPolicy,
    pub power: PowerIterOptions,
}

impl Default for CpaOptions {
    fn default() -> Self {
        Self {
            alpha: None,
            transform: TransformKind::Identity,
            eps: EpsilonPolicy::KeepAll,
            power: PowerIterOptions::default(),
        }
    }
}

impl CpaOptions {
    pub fn with_alpha(alpha: usize) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::default()
        }
    }

    pub fn config(&self, kernel: ShrinkageKernel) -> ShrinkConfig {
        let alpha = self.alpha.unwrap_or_else(|| kernel.default_order());
        ShrinkConfig {
            kernel,
            alpha,
            transform: self.transform,
            eps: self.eps,
            power: self.power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    ExactSvd,
    ExactEvd,
    Cpa(CpaOptions),
}

impl Backend {
    pub fn label(&self) -> String {
        match self {
            Backend::ExactSvd => "exact-svd".into(),
            Backend::ExactEvd => "exact-evd".into(),
            Backend::Cpa(o) => {
                let alpha = o.alpha.map_or("default".to_string(), |a| a.to_string());
                format!("cpa(alpha={alpha},transform={:?},eps={})", o.transform, o.eps)
            }
        }
    }
}

/// Uniform entry point over the exact and CPA backends.
pub fn shrink_dispatch(
    b: &DenseMat,
    kernel: &ShrinkageKernel,
    backend: &Backend,
    e_t: f64,
) -> Result<ShrinkOutput> {
    match backend {
        Backend::Cpa(opts) => cpa_shrink(b, &opts.config(kernel.clone()), e_t),
        exact => {
            let start = Instant::now();
            let matrix = if *exact == Backend::ExactSvd {
                exact_svd_shrink(b, kernel)?
            } else {
                exact_evd_shrink(b, kernel)?
            };
            Ok(ShrinkOutput {
                matrix,
                elapsed: start.elapsed(),
                cpa: None,
            })
        }
    }
}
