use std::time::Instant;

use super::engine::{drive, Observer, PredictionPair, Scheme};
use crate::diagnostics::HMetric;
use crate::error::Result;
use crate::linalg::{factor_metric, metric_solve, norm, sub, CholFactor, Matrix};
use crate::model::{Iterate, Problem, ProxOracle, SolveReport, SolverConfig};

/// `prox(x + (1/β) Aᵀ t, β)`.
pub(crate) fn prox_step(prox: &dyn ProxOracle, a: &Matrix, beta: f64, x: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let at = a.tr_mul_vec(t)?;
    let inv_beta = 1.0 / beta;
    let point: Vec<f64> = x.iter().zip(&at).map(|(xi, ai)| xi + inv_beta * ai).collect();
    prox.evaluate(&point, beta)
}

/// `2 λ̄ − λ`.
pub(crate) fn extrapolate(lambda_bar: &[f64], lambda: &[f64]) -> Vec<f64> {
    lambda_bar.iter().zip(lambda).map(|(lb, l)| 2.0 * lb - l).collect()
}

pub(crate) fn equality_residual(a: &Matrix, b: &[f64], x: &[f64]) -> Result<f64> {
    Ok(norm(&sub(&a.mul_vec(x)?, b)))
}

fn dp_predictor(problem: &Problem, w: &Iterate, beta: f64, factor: &CholFactor) -> Result<Iterate> {
    let a = problem.a();
    // dual step uses x^k only
    let r = sub(&a.mul_vec(&w.x)?, problem.b());
    let y = metric_solve(factor, &r)?;
    let lambda_bar = sub(&w.lambda, &y);
    let t = extrapolate(&lambda_bar, &w.lambda);
    let x_bar = prox_step(problem.prox(), a, beta, &w.x, &t)?;
    Ok(Iterate::new(x_bar, lambda_bar))
}

fn balm_predictor(problem: &Problem, w: &Iterate, beta: f64, factor: &CholFactor) -> Result<Iterate> {
    let a = problem.a();
    // primal step uses λ^k only
    let x_bar = prox_step(problem.prox(), a, beta, &w.x, &w.lambda)?;
    let ext: Vec<f64> = x_bar.iter().zip(&w.x).map(|(xb, x)| 2.0 * xb - x).collect();
    let r = sub(&a.mul_vec(&ext)?, problem.b());
    let y = metric_solve(factor, &r)?;
    let lambda_bar = sub(&w.lambda, &y);
    Ok(Iterate::new(x_bar, lambda_bar))
}

/// Dual-primal prediction: `λ̄ = λ − M⁻¹(Ax − b)`, then
/// `x̄ = prox(x + (1/β)Aᵀ(2λ̄ − λ), β)`.
///
/// `factor` must factor `(1/β) A Aᵀ + δ I` for `cfg.beta`, `cfg.delta`.
pub fn dp_balm_predict(
    problem: &Problem,
    w: &Iterate,
    cfg: &SolverConfig,
    factor: &CholFactor,
) -> Result<PredictionPair> {
    w.check_dims(problem.n(), problem.m())?;
    Ok(PredictionPair {
        current: w.clone(),
        predictor: dp_predictor(problem, w, cfg.beta, factor)?,
    })
}

/// Balanced-ALM step in prediction form: `x̄ = prox(x + (1/β)Aᵀλ, β)`,
/// then `λ̄ = λ − M⁻¹(A(2x̄ − x) − b)`. With `α = 1` the correction
/// reproduces the original scheme exactly.
pub fn balm_predict(problem: &Problem, w: &Iterate, cfg: &SolverConfig, factor: &CholFactor) -> Result<PredictionPair> {
    w.check_dims(problem.n(), problem.m())?;
    Ok(PredictionPair {
        current: w.clone(),
        predictor: balm_predictor(problem, w, cfg.beta, factor)?,
    })
}

#[derive(Clone, Copy)]
enum Order {
    DualPrimal,
    PrimalDual,
}

struct BalancedScheme<'p> {
    problem: &'p Problem,
    factor: CholFactor,
    metric: HMetric<'p>,
    beta: f64,
    order: Order,
}

impl Scheme for BalancedScheme<'_> {
    fn predict(&mut self, w: &Iterate) -> Result<Iterate> {
        match self.order {
            Order::DualPrimal => dp_predictor(self.problem, w, self.beta, &self.factor),
            Order::PrimalDual => balm_predictor(self.problem, w, self.beta, &self.factor),
        }
    }

    fn residual(&self, w: &Iterate, predictor: &Iterate) -> Result<f64> {
        self.metric.dist(w, predictor)
    }

    fn primal_residual(&self, x: &[f64]) -> Result<f64> {
        equality_residual(self.problem.a(), self.problem.b(), x)
    }

    fn known_solution(&self) -> Option<&[f64]> {
        self.problem.known_solution()
    }
}

pub(crate) fn stop_rule_problem(problem: &Problem, cfg: &SolverConfig) -> Option<String> {
    match cfg.stop_rule {
        crate::model::StopRule::RelativeError(_) if problem.known_solution().is_none() => {
            Some("relative-error stopping needs a known solution; use the fixed-point residual rule".into())
        }
        _ => None,
    }
}

fn solve_balanced(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    order: Order,
    alpha: f64,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    w0.check_dims(problem.n(), problem.m())?;
    if let Err(e) = cfg.validate_balanced() {
        return Ok(SolveReport::invalid(w0, e.to_string()));
    }
    if let Some(msg) = stop_rule_problem(problem, cfg) {
        return Ok(SolveReport::invalid(w0, msg));
    }
    let start = Instant::now();
    let factor = factor_metric(problem.a(), cfg.beta, cfg.delta)?;
    let metric = match order {
        Order::DualPrimal => HMetric::single(problem.a(), cfg.beta, cfg.delta)?,
        Order::PrimalDual => HMetric::balanced(problem.a(), cfg.beta, cfg.delta)?,
    };
    let mut scheme = BalancedScheme {
        problem,
        factor,
        metric,
        beta: cfg.beta,
        order,
    };
    drive(&mut scheme, cfg, alpha, w0, start, observer)
}

/// Dual-primal balanced ALM. Factors `M` once and iterates
/// prediction/correction until the configured stop rule fires.
pub fn solve_dp_balm(problem: &Problem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    solve_balanced(problem, cfg, w0, Order::DualPrimal, cfg.alpha, None)
}

pub fn solve_dp_balm_observed(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    solve_balanced(problem, cfg, w0, Order::DualPrimal, cfg.alpha, Some(observer))
}

/// Balanced ALM. The correction uses `α = 1` unless `cfg.relaxed_balm` is
/// set, in which case `cfg.alpha` is applied and the report is flagged.
pub fn solve_balm(problem: &Problem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    solve_balm_inner(problem, cfg, w0, None)
}

pub fn solve_balm_observed(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    solve_balm_inner(problem, cfg, w0, Some(observer))
}

fn solve_balm_inner(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    let alpha = if cfg.relaxed_balm { cfg.alpha } else { 1.0 };
    let mut report = solve_balanced(problem, cfg, w0, Order::PrimalDual, alpha, observer)?;
    report.flags.relaxed_correction = cfg.relaxed_balm && alpha != 1.0;
    Ok(report)
}

/// Runs the dual-primal scheme with an unvalidated correction step. Only
/// meant for mutation tests of the certification checks.
#[doc(hidden)]
pub fn solve_dp_balm_raw_alpha(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    alpha: f64,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    let checked = SolverConfig {
        alpha: 1.0,
        ..cfg.clone()
    };
    w0.check_dims(problem.n(), problem.m())?;
    if let Err(e) = checked.validate_balanced() {
        return Ok(SolveReport::invalid(w0, e.to_string()));
    }
    if let Some(msg) = stop_rule_problem(problem, cfg) {
        return Ok(SolveReport::invalid(w0, msg));
    }
    let start = Instant::now();
    let factor = factor_metric(problem.a(), cfg.beta, cfg.delta)?;
    let metric = HMetric::single(problem.a(), cfg.beta, cfg.delta)?;
    let mut scheme = BalancedScheme {
        problem,
        factor,
        metric,
        beta: cfg.beta,
        order: Order::DualPrimal,
    };
    drive(&mut scheme, &checked, alpha, w0, start, Some(observer))
}
