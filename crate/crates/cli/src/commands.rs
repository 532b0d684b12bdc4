use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::thread;

use chebshrink::admm::InpaintResult;
use chebshrink::bench::{
    alpha_sweep, decaying_matrix, moving_block_video, run_recovery_bench, texture_fixture, KernelPlot, SynthSpec,
};
use chebshrink::matcore::io::{read_matrix, write_matrix};
use chebshrink::shrinkage::shrink_dispatch;
use chebshrink::{
    exact_svd_shrink, solve_bgmodel, solve_bgmodel_scaled, solve_inpaint, Backend, BgModelProblem, CpaOptions,
    DenseMat, InpaintProblem, ShrinkageKernel,
};

use crate::error::CliError;
use crate::pnm::{read_frames, read_image, read_mask, write_frames, write_image, write_mask, Image};
use crate::{BenchCmd, BgModelCmd, FixtureCmd, FixtureKind, InpaintCmd, KernelPlotCmd, ShrinkCmd};

pub enum Status {
    Done,
    NotConverged,
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn shrink(c: &ShrinkCmd) -> Result<Status, CliError> {
    let b = read_matrix(&c.input)?;
    let kernel = c.kernel.kernel();
    let backend = c.backend.backend()?;
    let out = shrink_dispatch(&b, &kernel, &backend, c.e_t)?;
    write_matrix(&c.output, &out.matrix)?;
    match &out.cpa {
        Some(d) => println!("backend={} {}", backend.label(), d.record()),
        None => println!("backend={} elapsed_ms={:.3}", backend.label(), out.elapsed.as_secs_f64() * 1e3),
    }
    if c.compare {
        let exact = exact_svd_shrink(&b, &kernel)?;
        println!("relative_frobenius_vs_exact_svd={:e}", out.matrix.rel_frobenius_distance(&exact)?);
    }
    Ok(Status::Done)
}

pub fn inpaint(c: &InpaintCmd) -> Result<Status, CliError> {
    let img = read_image(&c.image)?;
    let observed = read_mask(&c.mask)?;
    let (h, w) = img.shape();
    if observed.len() != h * w {
        return Err(CliError::Usage(format!(
            "mask has {} pixels but the image is {w}x{h}",
            observed.len()
        )));
    }
    let params = c.admm.params(6.0, 0.1)?;
    let backend = c.backend.backend()?;
    let problems = img
        .channels
        .iter()
        .map(|ch| {
            let p = InpaintProblem::new(ch.clone(), observed.clone())?;
            Ok(if c.no_mean_constraint { p.without_mean_constraint() } else { p })
        })
        .collect::<Result<Vec<_>, chebshrink::Error>>()?;

    let solve = |p: &InpaintProblem| solve_inpaint(p, &params, &backend);
    let results: Vec<chebshrink::Result<InpaintResult>> = if c.parallel_channels && problems.len() > 1 {
        thread::scope(|s| {
            let handles: Vec<_> = problems.iter().map(|p| s.spawn(move || solve(p))).collect();
            handles.into_iter().map(|h| h.join().expect("channel worker panicked")).collect()
        })
    } else {
        problems.iter().map(solve).collect()
    };
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    write_image(
        &c.output,
        &Image {
            channels: results.iter().map(|r| r.image.clone()).collect(),
        },
    )?;
    if let Some(path) = &c.trace {
        let mut csv = String::new();
        for (ch, r) in results.iter().enumerate() {
            for (i, line) in r.trace.to_csv().lines().enumerate() {
                if i == 0 {
                    if ch == 0 {
                        let _ = writeln!(csv, "channel,{line}");
                    }
                } else {
                    let _ = writeln!(csv, "{ch},{line}");
                }
            }
        }
        write_text(path, &csv)?;
    }
    for (ch, r) in results.iter().enumerate() {
        eprintln!(
            "channel {ch}: converged={} iterations={} final_E_t={:e}",
            r.converged(),
            r.trace.iterations(),
            r.trace.final_e_t().unwrap_or(f64::NAN)
        );
    }
    Ok(if results.iter().all(|r| r.converged()) { Status::Done } else { Status::NotConverged })
}

pub fn bgmodel(c: &BgModelCmd) -> Result<Status, CliError> {
    let (frames, shape) = read_frames(&c.frames)?;
    let problem = BgModelProblem::new(frames.clone())?;
    let params = c.admm.params(480.0, 0.12)?;
    let backend = c.backend.backend()?;
    let res = if c.no_scale {
        solve_bgmodel(&problem, &params, &backend)?
    } else {
        solve_bgmodel_scaled(&problem, &params, &backend)?
    };

    fs::create_dir_all(&c.output).map_err(|e| CliError::io(&c.output, e))?;
    write_frames(&c.output.join("low_rank"), &res.low_rank, shape, |v| v)?;
    write_frames(&c.output.join("sparse"), &res.sparse, shape, f64::abs)?;
    write_text(&c.output.join("trace.csv"), &res.trace.to_csv())?;
    let mut support = String::from("frame,support_pixels\n");
    for k in 0..res.sparse.cols() {
        let n = (0..res.sparse.rows()).filter(|&p| res.sparse[(p, k)].abs() > c.support_threshold).count();
        let _ = writeln!(support, "{k},{n}");
    }
    write_text(&c.output.join("support.csv"), &support)?;

    let feasibility = res.low_rank.add(&res.sparse)?.sub(&frames)?.max_abs();
    println!(
        "frames={} inv_rho_given={} inv_rho_used={:e} converged={} iterations={} max_abs_L_plus_S_minus_I={:e}",
        frames.cols(),
        res.trace.inv_rho_raw,
        res.trace.inv_rho_used,
        res.converged(),
        res.trace.iterations(),
        feasibility
    );
    Ok(if res.converged() { Status::Done } else { Status::NotConverged })
}

pub fn bench(c: &BenchCmd) -> Result<Status, CliError> {
    if let Some(alphas) = &c.alpha_sweep {
        let (b, sigma) = decaying_matrix(40, 20, 10.0, 0.3, c.seed)?;
        let kernel = ShrinkageKernel::Soft { inv_rho: sigma[5] };
        let rows = alpha_sweep(&b, &kernel, alphas)?;
        let mut csv = String::from("alpha,rel_error,time_ms,non_increasing\n");
        let mut prev = f64::INFINITY;
        for (alpha, err, t) in rows {
            let _ = writeln!(csv, "{alpha},{err:e},{:.3},{}", t.as_secs_f64() * 1e3, err <= 1.05 * prev);
            prev = err;
        }
        print!("{csv}");
        if let Some(path) = &c.output {
            write_text(path, &csv)?;
        }
        return Ok(Status::Done);
    }

    let spec = SynthSpec {
        dim: c.dim,
        rank: c.rank,
        corruption_percent: c.corruption,
        seed: c.seed,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let params = c.admm.params(5.0, 0.1)?;
    let cpa = Backend::Cpa(CpaOptions {
        alpha: Some(c.alpha.unwrap_or(20)),
        transform: c.transform.kind(false),
        eps: c.eps,
        ..CpaOptions::default()
    });
    let report = run_recovery_bench(&spec, &[Backend::ExactEvd, cpa], &params)?;
    print!("{}", report.to_table());
    if let Some(path) = &c.output {
        write_text(path, &report.to_csv())?;
    }
    let ok = report.rows.iter().all(|r| r.error.is_none() && r.converged);
    Ok(if ok { Status::Done } else { Status::NotConverged })
}

pub fn kernel_plot(c: &KernelPlotCmd) -> Result<Status, CliError> {
    let kernel = c.kernel.kernel();
    let alpha = c.alpha.unwrap_or_else(|| kernel.default_order());
    let plot = KernelPlot::new(&kernel, alpha, c.lambda_max, c.points)?;
    let csv = plot.to_csv();
    match &c.output {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    let max_dev = plot.cpa.iter().zip(&plot.exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    let ls = plot
        .least_squares
        .as_ref()
        .map_or("n/a".to_string(), |v| format!("{:e}", plot.stopband_deviation(v)));
    eprintln!(
        "alpha={alpha} max_abs_cpa_minus_exact={max_dev:e} stopband_cpa={:e} stopband_least_squares={ls}",
        plot.stopband_deviation(&plot.cpa)
    );
    Ok(Status::Done)
}

pub fn fixture(c: &FixtureCmd) -> Result<Status, CliError> {
    let out = &c.output;
    match c.kind {
        FixtureKind::Matrix => {
            let (b, _) = decaying_matrix(40, 20, 10.0, 0.3, c.seed)?;
            write_matrix(out, &b)?;
        }
        FixtureKind::Texture => {
            fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
            let (truth, observed) = texture_fixture(64, 12)?;
            let holed = DenseMat::from_fn(64, 64, |i, j| if observed[i * 64 + j] { truth[(i, j)] } else { 0.0 });
            write_image(&out.join("texture.pgm"), &Image::gray(truth))?;
            write_image(&out.join("input.pgm"), &Image::gray(holed))?;
            write_mask(&out.join("mask.pgm"), 64, 64, &observed)?;
        }
        FixtureKind::Video => {
            let (h, w) = (32, 32);
            let (video, support) = moving_block_video(h, w, 40)?;
            write_frames(&out.join("frames"), &video, (h, w), |v| v)?;
            let mut csv = String::from("frame,top,left\n");
            for (k, mask) in support.iter().enumerate() {
                let p = mask.iter().position(|&b| b).expect("block is inside the frame");
                let _ = writeln!(csv, "{k},{},{}", p % h, p / h);
            }
            write_text(&out.join("support.csv"), &csv)?;
        }
    }
    Ok(Status::Done)
}
