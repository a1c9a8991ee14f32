//! Dense linear algebra and statistical kernels shared by every other module.

mod linalg;
mod matrix;
mod rng;
mod stats;

pub use linalg::{
    frechet_distance, mean_and_covariance, ols_fit, psd_sqrt, sym_eigen, with_intercept, OlsFit,
    SymEigen,
};
pub use matrix::Matrix;
pub use rng::{mix_seed, RngStream, StreamRng};
pub use stats::{mean, round_sig, sample_sd, std_normal_cdf, two_sided_normal_pvalue};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("least squares needs n > p (n = {n}, p = {p})")]
    Underdetermined { n: usize, p: usize },
    #[error("design is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("non-finite input")]
    NonFinite,
}
