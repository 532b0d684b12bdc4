mod commands;
mod error;
mod pnm;

use std::path::PathBuf;
use std::process::ExitCode;

use chebshrink::shrinkage::EpsilonPolicy;
use chebshrink::{AdmmParams, Backend, CpaOptions, ShrinkageKernel, TransformKind, Weight};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Singular value shrinkage by Chebyshev polynomial approximation, and
/// nuclear-norm ADMM solvers built on it.
#[derive(Debug, Parser)]
#[command(name = "chebshrink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shrink the singular values of a matrix (CSV, or binary .cpam/.bin).
    Shrink(ShrinkCmd),
    /// Fill the masked pixels of a PGM/PPM image, one channel at a time.
    Inpaint(InpaintCmd),
    /// Split a directory of PGM frames into low-rank and sparse parts.
    Bgmodel(BgModelCmd),
    /// Synthetic recovery benchmark, or an α sweep of the shrinkage error.
    Bench(BenchCmd),
    /// Exact, CPA and least-squares kernel responses on a grid, as CSV.
    KernelPlot(KernelPlotCmd),
    /// Write the bundled test fixtures.
    Fixture(FixtureCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Hard,
    Soft,
    Wsoft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Svd,
    Evd,
    Cpa,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransformArg {
    Id,
    Dwt,
    Dct,
    Bdct8,
}

impl TransformArg {
    fn kind(self, zero_high_freq: bool) -> TransformKind {
        match self {
            TransformArg::Id => TransformKind::Identity,
            TransformArg::Dwt => TransformKind::HaarDwt1 { zero_high_freq },
            TransformArg::Dct => TransformKind::Dct,
            TransformArg::Bdct8 => TransformKind::BlockDct { block: 8 },
        }
    }
}

fn parse_eps(s: &str) -> Result<EpsilonPolicy, String> {
    let policy = match s {
        "keepall" => EpsilonPolicy::KeepAll,
        "adaptive" => EpsilonPolicy::adaptive(),
        _ => {
            let v = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("expected keepall, adaptive or fixed:V, got {s:?}"))?;
            EpsilonPolicy::Fixed {
                epsilon: v.parse().map_err(|e| format!("bad epsilon {v:?}: {e}"))?,
            }
        }
    };
    policy.validate().map_err(|e| e.to_string())?;
    Ok(policy)
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "soft")]
    kernel: KernelArg,
    /// Threshold on the singular value scale (1/ρ for soft, τ for hard).
    #[arg(long)]
    tau: f64,
    /// Constant weight of the wsoft kernel; its threshold is weight·tau.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
}

impl KernelArgs {
    fn kernel(&self) -> ShrinkageKernel {
        match self.kernel {
            KernelArg::Hard => ShrinkageKernel::Hard { tau_hard: self.tau },
            KernelArg::Soft => ShrinkageKernel::Soft { inv_rho: self.tau },
            KernelArg::Wsoft => ShrinkageKernel::WeightedSoft {
                weight: Weight::Constant(self.weight),
                rho: 1.0 / self.tau,
            },
        }
    }
}

#[derive(Debug, Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "cpa")]
    backend: BackendArg,
    /// Chebyshev order; defaults to the kernel's default.
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long, value_enum, default_value = "id")]
    transform: TransformArg,
    /// With `--transform dwt`, zero the high-pass part of the transformed
    /// Gram matrix.
    #[arg(long)]
    zero_high_freq: bool,
    /// Truncation of the transformed Gram matrix: keepall, adaptive or fixed:V.
    #[arg(long, value_parser = parse_eps, default_value = "keepall")]
    eps: EpsilonPolicy,
}

impl BackendArgs {
    fn backend(&self) -> Result<Backend, CliError> {
        if self.zero_high_freq && !matches!(self.transform, TransformArg::Dwt) {
            return Err(CliError::Usage("--zero-high-freq needs --transform dwt".into()));
        }
        let transform = self.transform.kind(self.zero_high_freq);
        Ok(match self.backend {
            BackendArg::Svd => Backend::ExactSvd,
            BackendArg::Evd => Backend::ExactEvd,
            BackendArg::Cpa => Backend::Cpa(CpaOptions {
                alpha: self.alpha,
                transform,
                eps: self.eps,
                ..CpaOptions::default()
            }),
        })
    }
}

#[derive(Debug, Args)]
struct AdmmArgs {
    /// Nuclear prox threshold 1/ρ.
    #[arg(long)]
    inv_rho: Option<f64>,
    /// ℓ1 prox threshold η/ρ.
    #[arg(long)]
    eta_over_rho: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    stop_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl AdmmArgs {
    fn params(&self, default_inv_rho: f64, default_eta_over_rho: f64) -> Result<AdmmParams, CliError> {
        let p = AdmmParams {
            inv_rho: self.inv_rho.unwrap_or(default_inv_rho),
            eta_over_rho: self.eta_over_rho.unwrap_or(default_eta_over_rho),
            stop_tol: self.stop_tol,
            max_iter: self.max_iter,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct ShrinkCmd {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Relative iterate change fed to the adaptive ε rule.
    #[arg(long, default_value_t = f64::INFINITY)]
    e_t: f64,
    /// Also run exact SVD shrinkage and report the relative difference.
    #[arg(long)]
    compare: bool,
}

#[derive(Debug, Args)]
struct InpaintCmd {
    /// PGM or PPM image; values at masked pixels are ignored.
    #[arg(long)]
    image: PathBuf,
    /// PGM mask, nonzero where the pixel is observed.
    #[arg(long)]
    mask: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    admm: AdmmArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Drop the constraint tying the mean of the filled region to its border.
    #[arg(long)]
    no_mean_constraint: bool,
    /// Solve the color channels on separate threads.
    #[arg(long)]
    parallel_channels: bool,
}

#[derive(Debug, Args)]
struct BgModelCmd {
    /// Directory of numbered PGM frames (0000.pgm, 0001.pgm, ...).
    #[arg(long)]
    frames: PathBuf,
    /// Receives low_rank/, sparse/, trace.csv and support.csv.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    admm: AdmmArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Use 1/ρ as given instead of rescaling it by the video's spectral norm.
    #[arg(long)]
    no_scale: bool,
    /// |S| above this counts as foreground in support.csv.
    #[arg(long, default_value_t = 0.1)]
    support_threshold: f64,
}

#[derive(Debug, Args)]
struct BenchCmd {
    #[arg(long, default_value_t = 200)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Percentage of zeroed entries.
    #[arg(long, default_value_t = 10.0)]
    corruption: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    admm: AdmmArgs,
    /// CPA order for the benchmark row; defaults to 20.
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long, value_enum, default_value = "id")]
    transform: TransformArg,
    #[arg(long, value_parser = parse_eps, default_value = "keepall")]
    eps: EpsilonPolicy,
    /// Instead of the recovery benchmark, sweep these orders on the 40×20
    /// decaying-spectrum fixture (e.g. 5,10,15,20).
    #[arg(long, value_delimiter = ',')]
    alpha_sweep: Option<Vec<usize>>,
    /// CSV report path; the table always goes to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KernelPlotCmd {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long, default_value_t = 1e6)]
    lambda_max: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// CSV path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// 40×20 matrix with singular values 10·e^{−0.3i} (CSV or .cpam).
    Matrix,
    /// 64×64 rank-2 texture with a 12×12 hole: texture.pgm, mask.pgm, input.pgm.
    Texture,
    /// 32×32×40 moving-block video: frames/ and support.csv.
    Video,
}

#[derive(Debug, Args)]
struct FixtureCmd {
    #[arg(value_enum)]
    kind: FixtureKind,
    /// File for `matrix`, directory otherwise.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Shrink(c) => commands::shrink(c),
        Command::Inpaint(c) => commands::inpaint(c),
        Command::Bgmodel(c) => commands::bgmodel(c),
        Command::Bench(c) => commands::bench(c),
        Command::KernelPlot(c) => commands::kernel_plot(c),
        Command::Fixture(c) => commands::fixture(c),
    };
    match result {
        Ok(commands::Status::Done) => ExitCode::SUCCESS,
        Ok(commands::Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
