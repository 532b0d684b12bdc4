//! Dense and sparse matrix primitives and the exact shrinkage oracles.

pub mod dense;
pub mod eigen;
pub mod io;
pub mod oracle;
pub mod sparse;

pub use dense::{gram, DenseMat};
pub use eigen::{
    max_eigenvalue, power_iteration, EigenEstimate, PowerIterOptions, LAMBDA_SAFETY,
};
pub use oracle::{exact_evd_shrink, exact_svd_shrink, singular_triplets, singular_values, SingularTriplet};
pub use sparse::{dense_mul_sparse, sparse_mul, Csr, SparseSym};
