//! Synthetic recovery experiments, metrics and kernel response sweeps.

use std::fmt::Write;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use web_time::Instant;

use crate::admm::{solve_inpaint, AdmmParams, InpaintProblem};
use crate::chebyshev::{cheby_coefficients, ShrinkageKernel};
use crate::error::{Error, Result};
use crate::matcore::{exact_svd_shrink, DenseMat};
use crate::shrinkage::{cpa_shrink, Backend, ShrinkConfig};

/// Block-diagonal test matrix `J − blkdiag(0.5·ones(dim/rank), …)` with a
/// fraction of entries zeroed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    pub rank: usize,
    pub corruption_percent: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.dim == 0 || self.dim % self.rank != 0 {
            return Err(Error::Config(format!(
                "rank {} must divide dim {}",
                self.rank, self.dim
            )));
        }
        if !(0.0..100.0).contains(&self.corruption_percent) {
            return Err(Error::Config(format!(
                "corruption must be in [0, 100), got {}",
                self.corruption_percent
            )));
        }
        Ok(())
    }

    /// Number of zeroed entries, `⌈x%·dim²⌉`.
    pub fn corrupted_count(&self) -> usize {
        let x = self.corruption_percent / 100.0 * (self.dim * self.dim) as f64;
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub truth: DenseMat,
    pub corrupted: DenseMat,
    /// Row-major, `true` where the entry survived.
    pub mask: Vec<bool>,
}

pub fn synth_blockdiag(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let n = spec.dim;
    let b = n / spec.rank;
    let truth = DenseMat::from_fn(n, n, |i, j| if i / b == j / b { 0.5 } else { 1.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mask = vec![true; n * n];
    for idx in sample(&mut rng, n * n, spec.corrupted_count()) {
        mask[idx] = false;
    }
    let mut corrupted = truth.clone();
    for (v, &keep) in corrupted.as_mut_slice().iter_mut().zip(&mask) {
        if !keep {
            *v = 0.0;
        }
    }
    Ok(SynthData {
        truth,
        corrupted,
        mask,
    })
}

/// `sqrt(mean((A − B)²))`.
pub fn rmse(a: &DenseMat, b: &DenseMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let len = a.as_slice().len();
    if len == 0 {
        return Ok(0.0);
    }
    let ss: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((ss / len as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub total_time: Duration,
    pub mean_shrink_time: Duration,
    /// RMSE against the exact-SVD run.
    pub rmse_vs_exact: f64,
    /// `‖L − D_true‖_F / ‖D_true‖_F`.
    pub rel_error_vs_truth: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the run failed; the numeric fields are then NaN or zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, method: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,total_s,mean_shrink_ms,rmse_vs_exact,rel_error_vs_truth,converged,iterations,error\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\"{}\",{:.4},{:.4},{:e},{:e},{},{},{}",
                r.method,
                r.total_time.as_secs_f64(),
                r.mean_shrink_time.as_secs_f64() * 1e3,
                r.rmse_vs_exact,
                r.rel_error_vs_truth,
                r.converged,
                r.iterations,
                r.error.as_deref().unwrap_or("")
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = [
            "method",
            "total [s]",
            "shrink [ms]",
            "RMSE vs exact",
            "rel. err",
            "conv",
            "iters",
        ];
        let cells: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    format!("{:.3}", r.total_time.as_secs_f64()),
                    format!("{:.3}", r.mean_shrink_time.as_secs_f64() * 1e3),
                    format!("{:.3e}", r.rmse_vs_exact),
                    format!("{:.3e}", r.rel_error_vs_truth),
                    if r.error.is_some() { "error".into() } else { r.converged.to_string() },
                    r.iterations.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let fmt_row = |row: &[String]| {
            row.iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = fmt_row(&header.map(String::from));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &cells {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }
}

/// Runs mask-constrained nuclear + ℓ1 recovery (inpainting without the mean
/// constraint) on the corrupted matrix for each backend. An exact-SVD run is
/// always made first as the reference. Failing backends are reported in
/// their row and do not abort the report.
pub fn run_recovery_bench(spec: &SynthSpec, backends: &[Backend], params: &AdmmParams) -> Result<BenchReport> {
    let data = synth_blockdiag(spec)?;
    let problem = InpaintProblem::new(data.corrupted.clone(), data.mask.clone())?.without_mean_constraint();
    let truth_norm = data.truth.frobenius_norm();

    let reference = solve_inpaint(&problem, params, &Backend::ExactSvd)?;
    let row_for = |backend: &Backend, res: &crate::admm::InpaintResult| -> Result<BenchRow> {
        Ok(BenchRow {
            method: backend.label(),
            total_time: res.trace.total_time(),
            mean_shrink_time: res.trace.mean_shrink_time(),
            rmse_vs_exact: rmse(&res.image, &reference.image)?,
            rel_error_vs_truth: res.image.sub(&data.truth)?.frobenius_norm() / truth_norm,
            converged: res.converged(),
            iterations: res.trace.iterations(),
            error: None,
        })
    };

    let mut report = BenchReport::default();
    report.rows.push(row_for(&Backend::ExactSvd, &reference)?);
    for backend in backends.iter().filter(|b| **b != Backend::ExactSvd) {
        let row = match solve_inpaint(&problem, params, backend) {
            Ok(res) => row_for(backend, &res)?,
            Err(e) => BenchRow {
                method: backend.label(),
                total_time: Duration::ZERO,
                mean_shrink_time: Duration::ZERO,
                rmse_vs_exact: f64::NAN,
                rel_error_vs_truth: f64::NAN,
                converged: false,
                iterations: 0,
                error: Some(e.to_string()),
            },
        };
        report.rows.push(row);
    }
    Ok(report)
}

/// Relative Frobenius error of CPA against exact shrinkage for each order.
pub fn alpha_sweep(
    b: &DenseMat,
    kernel: &ShrinkageKernel,
    alphas: &[usize],
) -> Result<Vec<(usize, f64, Duration)>> {
    let exact = exact_svd_shrink(b, kernel)?;
    alphas
        .iter()
        .map(|&alpha| {
            let mut cfg = ShrinkConfig::new(kernel.clone());
            cfg.alpha = alpha;
            let start = Instant::now();
            let out = cpa_shrink(b, &cfg, f64::INFINITY)?;
            Ok((alpha, out.matrix.rel_frobenius_distance(&exact)?, start.elapsed()))
        })
        .collect()
}

/// Least-squares fit of `h` in the monomial basis `1, x, …, x^{α−1}` at
/// `points`, through the normal equations `ΥᵀΥc = Υᵀh` solved by a fully
/// pivoted LU. Columns are equilibrated first; a pivot below `1e-13` of the
/// largest marks `Υ` as rank deficient.
pub fn least_squares_fit(h: impl Fn(f64) -> f64, alpha: usize, points: &[f64]) -> Result<Vec<f64>> {
    if alpha == 0 {
        return Err(Error::Config("need at least one coefficient".into()));
    }
    if points.len() < alpha {
        return Err(Error::Config(format!(
            "{} sample points cannot determine {alpha} coefficients",
            points.len()
        )));
    }
    let ups = DMatrix::from_fn(points.len(), alpha, |i, k| points[i].powi(k as i32));
    let scales: Vec<f64> = (0..alpha)
        .map(|k| {
            let n = ups.column(k).norm();
            if n > 0.0 { 1.0 / n } else { 1.0 }
        })
        .collect();
    let scaled = DMatrix::from_fn(points.len(), alpha, |i, k| ups[(i, k)] * scales[k]);
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|&x| h(x)));
    let normal = scaled.transpose() * &scaled;
    let lu = normal.clone().full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..alpha).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    if diag.iter().any(|&d| !(d > 1e-13 * max)) {
        return Err(Error::Decomposition(
            "Vandermonde matrix is numerically rank deficient".into(),
        ));
    }
    let c = lu
        .solve(&(scaled.transpose() * rhs))
        .ok_or_else(|| Error::Decomposition("normal equations are singular".into()))?;
    Ok(c.iter().zip(&scales).map(|(v, s)| v * s).collect())
}

/// Evaluates `Σ c_k x^k` by Horner's rule.
pub fn eval_monomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Exact, CPA and least-squares responses of one kernel on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPlot {
    pub lambda_max: f64,
    pub x: Vec<f64>,
    pub exact: Vec<f64>,
    pub cpa: Vec<f64>,
    /// `None` when the least-squares system was rank deficient.
    pub least_squares: Option<Vec<f64>>,
    /// Threshold on the √x scale; the stopband is `√x ≤ tau`.
    pub tau: f64,
}

impl KernelPlot {
    /// The least-squares fit uses the normalized variable `t = 2x/Λ − 1`,
    /// the same one the Chebyshev series uses, to keep the system usable.
    pub fn new(kernel: &ShrinkageKernel, alpha: usize, lambda_max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config("a grid needs at least two points".into()));
        }
        let series = cheby_coefficients(kernel, alpha, lambda_max)?;
        let x: Vec<f64> = (0..points)
            .map(|i| lambda_max * i as f64 / (points - 1) as f64)
            .collect();
        let exact = x.iter().map(|&v| kernel.eval(v)).collect::<Result<Vec<_>>>()?;
        let cpa = x.iter().map(|&v| series.eval(v)).collect::<Result<Vec<_>>>()?;
        let t: Vec<f64> = x.iter().map(|&v| 2.0 * v / lambda_max - 1.0).collect();
        let least_squares = least_squares_fit(
            |tv| kernel.response(0.5 * lambda_max * (tv + 1.0)),
            alpha,
            &t,
        )
        .ok()
        .map(|c| t.iter().map(|&tv| eval_monomial(&c, tv)).collect());
        Ok(Self {
            lambda_max,
            x,
            exact,
            cpa,
            least_squares,
            tau: kernel.threshold_at(0.0),
        })
    }

    /// Max `|approx − exact|` over grid points with `√x ≤ τ`.
    pub fn stopband_deviation(&self, approx: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(approx)
            .zip(&self.exact)
            .filter(|((x, _), _)| x.sqrt() <= self.tau)
            .map(|((_, a), e)| (a - e).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `x,exact,cpa,least_squares`; the last is empty when the fit
    /// failed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,exact,cpa,least_squares\n");
        for i in 0..self.x.len() {
            let ls = self
                .least_squares
                .as_ref()
                .map(|v| format!("{:e}", v[i]))
                .unwrap_or_default();
            let _ = writeln!(out, "{:e},{:e},{:e},{}", self.x[i], self.exact[i], self.cpa[i], ls);
        }
        out
    }
}

/// `U·diag(σ)·Vᵀ` with `σ_i = s0·e^{−decay·i}` and Haar-random orthonormal
/// `U` (`m×n`) and `V` (`n×n`). Returns the matrix and its singular values.
pub fn decaying_matrix(m: usize, n: usize, s0: f64, decay: f64, seed: u64) -> Result<(DenseMat, Vec<f64>)> {
    if m < n || n == 0 {
        return Err(Error::Config(format!("need m >= n >= 1, got {m}x{n}")));
    }
    if !(s0 > 0.0 && decay >= 0.0) {
        return Err(Error::Config(format!("need s0 > 0 and decay >= 0, got {s0}, {decay}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |r, c| DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let u = gaussian(m, n).qr().q();
    let v = gaussian(n, n).qr().q();
    let sigma: Vec<f64> = (0..n).map(|i| s0 * (-decay * i as f64).exp()).collect();
    let b = u * DMatrix::from_diagonal(&DVector::from_column_slice(&sigma)) * v.transpose();
    Ok((DenseMat::from_fn(m, n, |i, j| b[(i, j)]), sigma))
}

/// Rank-2 periodic texture `0.5 + 0.4·cos(2πi/8)·cos(2πj/8)` of size
/// `size×size` with a square hole of side `hole` in the center. Returns the
/// ground truth and the observation mask (row-major, `true` = observed).
pub fn texture_fixture(size: usize, hole: usize) -> Result<(DenseMat, Vec<bool>)> {
    if hole >= size {
        return Err(Error::Config(format!("hole {hole} does not fit in {size}x{size}")));
    }
    let w = 2.0 * std::f64::consts::PI / 8.0;
    let truth = DenseMat::from_fn(size, size, |i, j| 0.5 + 0.4 * (w * i as f64).cos() * (w * j as f64).cos());
    let lo = (size - hole) / 2;
    let hi = lo + hole;
    let observed = (0..size * size)
        .map(|k| {
            let (i, j) = (k / size, k % size);
            !((lo..hi).contains(&i) && (lo..hi).contains(&j))
        })
        .collect();
    Ok((truth, observed))
}

/// Synthetic video: a static gradient background and a 5×5 block of value
/// 0.95 moving diagonally. Frames are vectorized column-major into the
/// columns of the returned `h·w × frames` matrix; the mask marks the block
/// pixels in the same layout.
pub fn moving_block_video(h: usize, w: usize, frames: usize) -> Result<(DenseMat, Vec<Vec<bool>>)> {
    const BLOCK: usize = 5;
    if h <= BLOCK || w <= BLOCK || frames == 0 {
        return Err(Error::Config(format!("video {h}x{w}x{frames} too small for a {BLOCK}x{BLOCK} block")));
    }
    let background = |r: usize, c: usize| {
        0.2 + 0.2 * c as f64 / (w - 1) as f64 + 0.2 * r as f64 / (h - 1) as f64
    };
    let mut data = DenseMat::zeros(h * w, frames);
    let mut support = Vec::with_capacity(frames);
    for k in 0..frames {
        let (r0, c0) = ((2 * k) % (h - BLOCK), (3 * k) % (w - BLOCK));
        let mut mask = vec![false; h * w];
        for c in 0..w {
            for r in 0..h {
                let inside = (r0..r0 + BLOCK).contains(&r) && (c0..c0 + BLOCK).contains(&c);
                data[(c * h + r, k)] = if inside { 0.95 } else { background(r, c) };
                mask[c * h + r] = inside;
            }
        }
        support.push(mask);
    }
    Ok((data, support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::singular_values;
    use crate::shrinkage::CpaOptions;

    #[test]
    fn small_blockdiag() {
        let d = synth_blockdiag(&SynthSpec {
            dim: 4,
            rank: 2,
            corruption_percent: 0.0,
            seed: 0,
        })
        .unwrap();
        let want = DenseMat::from_rows(&[
            vec![0.5, 0.5, 1.0, 1.0],
            vec![0.5, 0.5, 1.0, 1.0],
            vec![1.0, 1.0, 0.5, 0.5],
            vec![1.0, 1.0, 0.5, 0.5],
        ])
        .unwrap();
        assert_eq!(d.truth, want);
        assert_eq!(d.corrupted, want);
        let s = singular_values(&d.truth).unwrap();
        assert!(s[1] > 1e-8 * s[0] && s[2] <= 1e-8 * s[0]);
    }

    #[test]
    fn corruption_count_and_determinism() {
        let spec = SynthSpec {
            dim: 100,
            rank: 10,
            corruption_percent: 20.0,
            seed: 42,
        };
        let a = synth_blockdiag(&spec).unwrap();
        assert_eq!(a.mask.iter().filter(|&&m| !m).count(), 2000);
        for (v, &m) in a.corrupted.as_slice().iter().zip(&a.mask) {
            if !m {
                assert_eq!(*v, 0.0);
            }
        }
        let b = synth_blockdiag(&spec).unwrap();
        assert_eq!(a, b);
        let c = synth_blockdiag(&SynthSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.mask, c.mask);
    }

    #[test]
    fn paper_scale_block_size() {
        let spec = SynthSpec {
            dim: 1000,
            rank: 10,
            corruption_percent: 1.0,
            seed: 1,
        };
        assert!(spec.validate().is_ok());
        assert_eq!(spec.dim / spec.rank, 100);
        assert_eq!(spec.corrupted_count(), 10_000);
    }

    #[test]
    fn invalid_specs() {
        let bad = SynthSpec {
            dim: 10,
            rank: 3,
            corruption_percent: 0.0,
            seed: 0,
        };
        assert!(synth_blockdiag(&bad).is_err());
        assert!(SynthSpec { rank: 2, corruption_percent: 100.0, ..bad }.validate().is_err());
    }

    #[test]
    fn decaying_matrix_has_requested_spectrum() {
        let (b, sigma) = decaying_matrix(40, 20, 10.0, 0.3, 1).unwrap();
        let s = singular_values(&b).unwrap();
        for (a, e) in s.iter().zip(&sigma) {
            assert!((a - e).abs() <= 1e-12 * sigma[0]);
        }
        assert_eq!(b, decaying_matrix(40, 20, 10.0, 0.3, 1).unwrap().0);
        assert!(decaying_matrix(10, 20, 1.0, 0.3, 1).is_err());
    }

    #[test]
    fn fixtures_have_expected_shape() {
        let (truth, observed) = texture_fixture(64, 12).unwrap();
        assert_eq!(truth.shape(), (64, 64));
        assert_eq!(observed.iter().filter(|&&o| !o).count(), 144);
        assert!(!observed[26 * 64 + 26] && !observed[37 * 64 + 37] && observed[38 * 64 + 38]);
        let s = singular_values(&truth).unwrap();
        assert!(s[2] < 1e-10 * s[0]);

        let (video, support) = moving_block_video(32, 32, 40).unwrap();
        assert_eq!(video.shape(), (1024, 40));
        assert!(support.iter().all(|m| m.iter().filter(|&&b| b).count() == 25));
        assert_eq!(video[(0, 0)], 0.95);
        assert!((video[(1023, 0)] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rmse_examples() {
        let a = DenseMat::from_fn(3, 3, |i, j| (i * j) as f64);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let b = DenseMat::from_fn(3, 3, |i, j| (i * j) as f64 + 0.25);
        assert!((rmse(&a, &b).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        assert!(rmse(&a, &DenseMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn least_squares_examples() {
        let c = least_squares_fit(|x| x, 2, &[0.0, 1.0, 3.0, 7.5]).unwrap();
        assert!(c[0].abs() < 1e-10 && (c[1] - 1.0).abs() < 1e-10);
        let c = least_squares_fit(|_| 3.0, 1, &[2.0, 5.0]).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12);
        assert!(least_squares_fit(|x| x, 3, &[1.0, 1.0, 1.0, 2.0]).is_err());
        assert!(least_squares_fit(|x| x, 3, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kernel_plot_shapes() {
        let k = ShrinkageKernel::Soft { inv_rho: 500.0 };
        let plot = KernelPlot::new(&k, 10, 1e6, 1001).unwrap();
        assert_eq!(plot.x.len(), 1001);
        assert!(plot.least_squares.is_some());
        assert_eq!(plot.to_csv().lines().count(), 1002);
        assert!(plot.stopband_deviation(&plot.cpa) > 0.0);
        assert_eq!(plot.stopband_deviation(&plot.exact), 0.0);
    }

    #[test]
    fn recovery_bench_small() {
        let spec = SynthSpec {
            dim: 40,
            rank: 2,
            corruption_percent: 10.0,
            seed: 3,
        };
        let report = run_recovery_bench(
            &spec,
            &[Backend::Cpa(CpaOptions::with_alpha(20))],
            &AdmmParams::new(5.0, 0.1),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        let exact = &report.rows[0];
        assert_eq!(exact.rmse_vs_exact, 0.0);
        assert!(exact.converged);
        assert!(report.to_table().lines().count() == 4);
        assert_eq!(report.to_csv().lines().count(), 3);
    }
}
