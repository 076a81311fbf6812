//! Problem descriptions, iterates, solver configuration and reports, and the
//! proximal-oracle interface every solver goes through.

mod config;
mod problem;
mod prox;

pub use config::{HistoryRecord, ReportFlags, SolveReport, SolveStatus, SolverConfig, StopRule};
pub use problem::{Block, ConstraintSense, Iterate, MultiBlockProblem, Problem};
pub use prox::{
    make_l1_prox, make_linear_nonneg_prox, make_nonneg_l1_prox, make_quadratic_prox, L1Prox, LinearNonnegProx,
    ProxOracle, QuadraticProx,
};
