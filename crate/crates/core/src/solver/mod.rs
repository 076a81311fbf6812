//! Single-block solvers for `min θ(x) s.t. Ax = b, x ∈ X`.
//!
//! The dual-primal balanced ALM and the balanced ALM are written as
//! prediction + correction and share one driver loop with the two
//! baselines (linearized ALM and the Chambolle–Pock primal-dual method),
//! which take their plain update as the "predictor" with unit correction.

mod balanced;
mod engine;
mod linearized;


use std::fmt;
use std::str::FromStr;

pub use balanced::{
    balm_predict, dp_balm_predict, solve_balm, solve_balm_observed, solve_dp_balm, solve_dp_balm_observed,
    solve_dp_balm_raw_alpha,
};
pub(crate) use balanced::{extrapolate, prox_step};
pub use engine::relative_error;
pub use engine::{correct, Observer, PredictionPair};
pub(crate) use engine::{drive, Scheme};
pub use linearized::{solve_lalm, solve_lalm_observed, solve_pda, solve_pda_observed, STEP_RULE_SLACK};

use crate::error::{Error, Result};
use crate::model::{Iterate, Problem, SolveReport, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    DpBalm,
    Balm,
    Pda,
    Lalm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::DpBalm, Algorithm::Balm, Algorithm::Pda, Algorithm::Lalm];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::DpBalm => "dp-balm",
            Algorithm::Balm => "balm",
            Algorithm::Pda => "pda",
            Algorithm::Lalm => "lalm",
        }
    }

    /// Benchmark parameters for basis pursuit given `ρ(AᵀA)`:
    /// `β = 10, δ = 0.001` for both balanced schemes (`α = 1`),
    /// `r = s = √(ρ + 0.001)` for the PDA and
    /// `β = 0.01, r = βρ + 0.001` for the linearized ALM.
    pub fn tuned_config(&self, rho: f64) -> SolverConfig {
        let base = SolverConfig::default();
        match self {
            Algorithm::DpBalm | Algorithm::Balm => SolverConfig {
                beta: 10.0,
                delta: 1e-3,
                alpha: 1.0,
                ..base
            },
            Algorithm::Pda => {
                let step = (rho + 1e-3).sqrt();
                SolverConfig {
                    r: step,
                    s: step,
                    ..base
                }
            }
            Algorithm::Lalm => {
                let beta = 0.01;
                SolverConfig {
                    beta,
                    r: beta * rho + 1e-3,
                    ..base
                }
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dp-balm" | "dpbalm" | "dp_balm" => Ok(Algorithm::DpBalm),
            "balm" => Ok(Algorithm::Balm),
            "pda" => Ok(Algorithm::Pda),
            "lalm" => Ok(Algorithm::Lalm),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}' (expected dp-balm, balm, pda or lalm)"
            ))),
        }
    }
}

pub fn solve(algorithm: Algorithm, problem: &Problem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    match algorithm {
        Algorithm::DpBalm => solve_dp_balm(problem, cfg, w0),
        Algorithm::Balm => solve_balm(problem, cfg, w0),
        Algorithm::Pda => solve_pda(problem, cfg, w0),
        Algorithm::Lalm => solve_lalm(problem, cfg, w0),
    }
}

pub fn solve_observed(
    algorithm: Algorithm,
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    match algorithm {
        Algorithm::DpBalm => solve_dp_balm_observed(problem, cfg, w0, observer),
        Algorithm::Balm => solve_balm_observed(problem, cfg, w0, observer),
        Algorithm::Pda => solve_pda_observed(problem, cfg, w0, observer),
        Algorithm::Lalm => solve_lalm_observed(problem, cfg, w0, observer),
    }
}
