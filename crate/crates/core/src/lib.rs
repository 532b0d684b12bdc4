//! Singular value shrinkage without singular value decompositions.
//!
//! A shrinkage `U·diag(g(σ))·Vᵀ` of `B` is rewritten as `B·H(BᵀB)` with
//! `h(x) = g(√x)/√x`, and `H` is approximated by a Chebyshev polynomial
//! evaluated through a sparse matrix recurrence on a thresholded,
//! transform-domain Gram matrix. ADMM solvers for nuclear-norm problems use
//! the result as their proximity operator.

pub mod admm;
pub mod bench;
pub mod chebyshev;
pub mod error;
pub mod matcore;
pub mod shrinkage;
pub mod transforms;

pub use admm::{
    solve_bgmodel, solve_bgmodel_scaled, solve_inpaint, AdmmParams, AdmmTrace, BgModelProblem, InpaintProblem,
};
pub use chebyshev::{cheby_coefficients, series_apply_matrix, ChebyshevSeries, ShrinkageKernel, Weight};
pub use error::{Error, Result};
pub use matcore::{exact_evd_shrink, exact_svd_shrink, gram, DenseMat, SparseSym};
pub use shrinkage::{
    cpa_shrink, shrink_dispatch, Backend, CpaOptions, EpsilonPolicy, ShrinkConfig, ShrinkDiagnostics,
    ShrinkOutput,
};
pub use transforms::{build_transform, SparsifyTransform, TransformKind};
