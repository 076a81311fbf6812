//! Balanced augmented Lagrangian methods for linearly constrained convex
//! programs `min θ(x) s.t. Ax = b, x ∈ X`.
//!
//! The main solver is the dual-primal balanced ALM: a multiplier step with
//! the fixed metric `M = (1/β)AAᵀ + δI`, followed by a proximal step in `x`
//! with the extrapolated multiplier `2λ̄ − λ`, and a relaxation
//! `w⁺ = w + α(w̄ − w)`. The crate also ships the balanced ALM, the
//! linearized ALM and the Chambolle–Pock primal-dual method as baselines, a
//! multi-block generalization with equality or inequality constraints, and
//! diagnostics that check the contraction theory numerically.
//!
//! ```
//! use balm::instances::{generate_basis_pursuit, BasisPursuitSpec};
//! use balm::{solve_dp_balm, SolverConfig};
//!
//! let problem = generate_basis_pursuit(&BasisPursuitSpec::new(40, 1)).unwrap();
//! let report = solve_dp_balm(&problem, &SolverConfig::default(), problem.zero_iterate()).unwrap();
//! assert!(report.converged());
//! ```

// comparisons are written `!(x > 0.0)` on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod multiblock;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    make_l1_prox, make_linear_nonneg_prox, make_nonneg_l1_prox, make_quadratic_prox, Block, ConstraintSense,
    HistoryRecord, Iterate, MultiBlockProblem, Problem, ProxOracle, ReportFlags, SolveReport, SolveStatus,
    SolverConfig, StopRule,
};
pub use multiblock::{solve_multiblock, solve_multiblock_observed};
pub use solver::{solve, solve_balm, solve_dp_balm, solve_lalm, solve_observed, solve_pda, Algorithm, PredictionPair};
