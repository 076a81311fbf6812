use super::problem::Iterate;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// `‖x^k − x*‖ / ‖x*‖ < tol`; needs a known solution.
    RelativeError(f64),
    /// `‖w^k − w̄^k‖_H ≤ tol`.
    FixedPointResidual(f64),
}

impl StopRule {
    pub fn tol(&self) -> f64 {
        match *self {
            StopRule::RelativeError(t) | StopRule::FixedPointResidual(t) => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Proximal/penalty weight of the balanced schemes; the linearized ALM
    /// uses it as its penalty. Multi-block solves take `β_i` from the blocks.
    pub beta: f64,
    pub delta: f64,
    /// Correction step, `0 < α < 2`.
    pub alpha: f64,
    /// Proximal weight of the linearized ALM and primal weight of the PDA.
    pub r: f64,
    /// Dual weight of the PDA.
    pub s: f64,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub seed: u64,
    /// Apply the `α` correction to the balanced ALM as well. Off by default,
    /// in which case that scheme always takes `α = 1`.
    pub relaxed_balm: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            delta: 1e-3,
            alpha: 1.0,
            r: 1.0,
            s: 1.0,
            max_iter: 100_000,
            stop_rule: StopRule::RelativeError(1e-7),
            inner_tol: 1e-12,
            inner_max_iter: 50_000,
            seed: 0,
            relaxed_balm: false,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl SolverConfig {
    /// Checks that apply to every algorithm.
    pub fn validate_common(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        positive("stop tolerance", self.stop_rule.tol())?;
        positive("inner_tol", self.inner_tol)?;
        if self.inner_max_iter == 0 {
            return Err(Error::InvalidArgument("inner_max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Checks for the balanced / dual-primal balanced schemes.
    pub fn validate_balanced(&self) -> Result<()> {
        self.validate_common()?;
        positive("beta", self.beta)?;
        positive("delta", self.delta)
    }

    pub(crate) fn validate_positive_r_s(&self, need_beta: bool) -> Result<()> {
        self.validate_common()?;
        positive("r", self.r)?;
        if need_beta {
            positive("beta", self.beta)
        } else {
            positive("s", self.s)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    InvalidConfig,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::InvalidConfig => "invalid_config",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRecord {
    pub iter: usize,
    /// Relative error against the known solution, when there is one.
    pub rel_err: Option<f64>,
    /// `‖Ax − b‖` (equality) or `‖min(Ax − b, 0)‖` (inequality).
    pub primal_res: f64,
    /// `‖w^k − w̄^k‖_H`; Euclidean displacement for schemes without an `H`.
    pub fp_res_h: f64,
    pub elapsed_s: f64,
    /// Projected-gradient residual of the inequality dual subproblem.
    pub inner_res: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportFlags {
    /// The balanced ALM ran with an `α ≠ 1` correction.
    pub relaxed_correction: bool,
    /// `fp_res_h` holds the plain Euclidean iterate displacement.
    pub euclidean_residual: bool,
    /// Dual subproblems that hit the inner iteration cap.
    pub inexact_dual_steps: usize,
    pub spectral_radius: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_time_s: f64,
    /// One record per visited iterate, `k = 0..=iterations`. Empty when the
    /// configuration was rejected.
    pub history: Vec<HistoryRecord>,
    pub final_iterate: Iterate,
    pub flags: ReportFlags,
    pub warnings: Vec<String>,
    /// Why the configuration was rejected.
    pub message: Option<String>,
}

impl SolveReport {
    pub(crate) fn invalid(w0: Iterate, message: String) -> Self {
        Self {
            status: SolveStatus::InvalidConfig,
            iterations: 0,
            wall_time_s: 0.0,
            history: Vec::new(),
            final_iterate: w0,
            flags: ReportFlags::default(),
            warnings: Vec::new(),
            message: Some(message),
        }
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.history.last()
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_range_is_enforced() {
        for alpha in [0.0, 2.0, -0.5, 2.5, f64::NAN] {
            let cfg = SolverConfig {
                alpha,
                ..Default::default()
            };
            assert!(cfg.validate_balanced().is_err(), "alpha {alpha}");
        }
        for alpha in [1e-6, 1.0, 1.999] {
            let cfg = SolverConfig {
                alpha,
                ..Default::default()
            };
            assert!(cfg.validate_balanced().is_ok());
        }
    }

    #[test]
    fn non_positive_parameters_are_rejected() {
        let base = SolverConfig::default();
        assert!(SolverConfig {
            beta: 0.0,
            ..base.clone()
        }
        .validate_balanced()
        .is_err());
        assert!(SolverConfig {
            delta: -1e-3,
            ..base.clone()
        }
        .validate_balanced()
        .is_err());
        let bad_tol = SolverConfig {
            stop_rule: StopRule::FixedPointResidual(0.0),
            ..base.clone()
        };
        assert!(bad_tol.validate_common().is_err());
        assert!(SolverConfig { max_iter: 0, ..base }.validate_common().is_err());
    }
}
