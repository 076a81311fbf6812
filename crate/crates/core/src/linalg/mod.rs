//! Dense linear-algebra kernels: row-major matrices, Cholesky with triangular
//! solves, power iteration for `ρ(AᵀA)`, and a seeded Gaussian sampler.

mod cholesky;
mod matrix;
mod power;
mod rng;

pub(crate) use cholesky::assemble_metric;
pub use cholesky::{factor_metric, metric_solve, CholFactor};
pub use matrix::{add, axpy, dot, norm, norm_inf, norm_l1, scale, sub, Matrix};
pub use power::{spectral_radius_gram, SpectralEstimate, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL};
pub use rng::{gauss_sample, Rng};
