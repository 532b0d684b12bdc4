//! Browser demo: kernel responses, singular value shrinkage of a small
//! matrix, and texture inpainting. Each export wraps a plain function that
//! the native tests call directly.

use chebshrink::bench::{decaying_matrix, texture_fixture, KernelPlot};
use chebshrink::matcore::singular_values;
use chebshrink::{exact_svd_shrink, solve_inpaint, AdmmParams, Backend, CpaOptions, InpaintProblem, ShrinkageKernel, Weight};
use chebshrink::shrinkage::{cpa_shrink, ShrinkConfig};
use wasm_bindgen::prelude::*;

fn kernel(kind: &str, tau: f64) -> Result<ShrinkageKernel, String> {
    match kind {
        "hard" => Ok(ShrinkageKernel::Hard { tau_hard: tau }),
        "soft" => Ok(ShrinkageKernel::Soft { inv_rho: tau }),
        "wsoft" => Ok(ShrinkageKernel::WeightedSoft {
            weight: Weight::Constant(0.5),
            rho: 1.0 / tau,
        }),
        _ => Err(format!("unknown kernel {kind:?}")),
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Curves {
    x: Vec<f64>,
    exact: Vec<f64>,
    cpa: Vec<f64>,
    stopband: f64,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn cpa(&self) -> Vec<f64> {
        self.cpa.clone()
    }
    /// Max deviation of the CPA response where the exact one is zero.
    #[wasm_bindgen(getter)]
    pub fn stopband(&self) -> f64 {
        self.stopband
    }
}

/// Exact and CPA responses of `kind` on `[0, 1e6]`, threshold `tau` on the
/// singular value scale. `wsoft` uses weight 0.5.
pub fn curves(kind: &str, tau: f64, alpha: usize, points: usize) -> Result<Curves, String> {
    let k = kernel(kind, tau)?;
    let plot = KernelPlot::new(&k, alpha, 1e6, points).map_err(|e| e.to_string())?;
    Ok(Curves {
        stopband: plot.stopband_deviation(&plot.cpa),
        x: plot.x,
        exact: plot.exact,
        cpa: plot.cpa,
    })
}

#[wasm_bindgen]
pub fn kernel_response(kind: &str, tau: f64, alpha: usize, points: usize) -> Result<Curves, JsError> {
    curves(kind, tau, alpha, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Spectra {
    input: Vec<f64>,
    exact: Vec<f64>,
    cpa: Vec<f64>,
    rel_error: f64,
}

#[wasm_bindgen]
impl Spectra {
    #[wasm_bindgen(getter)]
    pub fn input(&self) -> Vec<f64> {
        self.input.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn cpa(&self) -> Vec<f64> {
        self.cpa.clone()
    }
    /// `‖CPA − exact‖_F / ‖exact‖_F` of the shrunk matrices.
    #[wasm_bindgen(getter)]
    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }
}

/// Soft shrinkage of a 40×20 matrix with singular values `10·e^{−0.3i}` at
/// threshold `tau`, exactly and by CPA of order `alpha`.
pub fn spectra(seed: u64, tau: f64, alpha: usize) -> Result<Spectra, String> {
    let run = || -> chebshrink::Result<Spectra> {
        let (b, sigma) = decaying_matrix(40, 20, 10.0, 0.3, seed)?;
        let k = ShrinkageKernel::Soft { inv_rho: tau };
        let exact = exact_svd_shrink(&b, &k)?;
        let mut cfg = ShrinkConfig::new(k);
        cfg.alpha = alpha;
        let cpa = cpa_shrink(&b, &cfg, f64::INFINITY)?.matrix;
        Ok(Spectra {
            input: sigma,
            exact: singular_values(&exact)?,
            cpa: singular_values(&cpa)?,
            rel_error: cpa.rel_frobenius_distance(&exact)?,
        })
    };
    run().map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn spectrum_demo(seed: u64, tau: f64, alpha: usize) -> Result<Spectra, JsError> {
    spectra(seed, tau, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Inpainted {
    size: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    iterations: usize,
    converged: bool,
    hole_rmse: f64,
}

#[wasm_bindgen]
impl Inpainted {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }
    /// Row-major pixels in `[0, 1]`; the hole is `NaN`.
    #[wasm_bindgen(getter)]
    pub fn input(&self) -> Vec<f64> {
        self.input.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn output(&self) -> Vec<f64> {
        self.output.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }
    #[wasm_bindgen(getter)]
    pub fn hole_rmse(&self) -> f64 {
        self.hole_rmse
    }
}

/// Inpaints the 64×64 texture with a centered `hole×hole` gap, using exact
/// SVD shrinkage when `alpha` is 0 and CPA of that order otherwise.
pub fn inpainted(hole: usize, alpha: usize) -> Result<Inpainted, String> {
    let run = || -> chebshrink::Result<Inpainted> {
        let (truth, observed) = texture_fixture(64, hole)?;
        let backend = if alpha == 0 { Backend::ExactSvd } else { Backend::Cpa(CpaOptions::with_alpha(alpha)) };
        let res = solve_inpaint(&InpaintProblem::new(truth.clone(), observed.clone())?, &AdmmParams::new(6.0, 0.1), &backend)?;
        let t = truth.as_slice();
        let out = res.image.as_slice();
        let missing: Vec<usize> = (0..t.len()).filter(|&i| !observed[i]).collect();
        let se: f64 = missing.iter().map(|&i| (out[i] - t[i]).powi(2)).sum();
        Ok(Inpainted {
            size: 64,
            input: t.iter().zip(&observed).map(|(&v, &o)| if o { v } else { f64::NAN }).collect(),
            output: out.to_vec(),
            iterations: res.trace.iterations(),
            converged: res.converged(),
            hole_rmse: if missing.is_empty() { 0.0 } else { (se / missing.len() as f64).sqrt() },
        })
    };
    run().map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn inpaint_demo(hole: usize, alpha: usize) -> Result<Inpainted, JsError> {
    inpainted(hole, alpha).map_err(|e| JsError::new(&e))
}
