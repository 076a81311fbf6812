//! Generalized dual-primal balanced ALM for separable problems
//! `min Σ θ_i(x_i) s.t. Σ A_i x_i = b (or ≥ b), x_i ∈ X_i`.
//!
//! The dual step solves
//! `min_{λ ∈ Λ} ½ (λ − λ^k)ᵀ M_p (λ − λ^k) + λᵀ(Σ A_i x_i^k − b)` with
//! `M_p = Σ (1/β_i) A_i A_iᵀ + δ I`. For equality constraints that is one
//! Cholesky solve; for inequality constraints (`Λ = ℝᵐ₊`) it is a
//! bound-constrained QP handled by projected gradient. Each block then takes
//! an independent proximal step with the extrapolated multiplier.

use std::time::Instant;

use crate::diagnostics::HMetric;
use crate::error::{check_len, Error, Result};
use crate::linalg::{assemble_metric, norm, spectral_radius_gram, sub, CholFactor, Matrix};
use crate::model::{ConstraintSense, Iterate, MultiBlockProblem, SolveReport, SolverConfig, StopRule};
use crate::solver::{drive, extrapolate, prox_step, Observer, PredictionPair, Scheme};

pub const DEFAULT_INNER_TOL: f64 = 1e-12;
pub const DEFAULT_INNER_MAX_ITER: usize = 50_000;

/// Factored `M_p` together with its largest eigenvalue.
#[derive(Clone, Debug)]
pub struct MetricMp {
    chol: CholFactor,
    dense: Matrix,
    top_eig: f64,
}

impl MetricMp {
    pub fn chol(&self) -> &CholFactor {
        &self.chol
    }

    pub fn matrix(&self) -> &Matrix {
        &self.dense
    }

    pub fn top_eig(&self) -> f64 {
        self.top_eig
    }

    pub fn dim(&self) -> usize {
        self.dense.rows()
    }
}

/// Assembles and factors `M_p = Σ (1/β_i) A_i A_iᵀ + δ I`.
pub fn build_metric(problem: &MultiBlockProblem, delta: f64) -> Result<MetricMp> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let blocks: Vec<(&Matrix, f64)> = problem.blocks().iter().map(|b| (&b.a, b.beta)).collect();
    let dense = assemble_metric(&blocks, delta, problem.m())?;
    let chol = CholFactor::factor(&dense)?;
    // ρ(MᵀM) = λ_max(M)² for symmetric M
    let top_eig = spectral_radius_gram(&dense, 1e-10, 10_000)?.value.sqrt().max(delta);
    Ok(MetricMp { chol, dense, top_eig })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerParams {
    fn default() -> Self {
        Self {
            tol: DEFAULT_INNER_TOL,
            max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    pub iterations: usize,
    /// Projected-gradient residual `‖λ − max(λ − ∇q(λ), 0)‖`; zero for the
    /// exact equality solve.
    pub residual: f64,
    pub converged: bool,
}

/// Minimizes `½ (λ − λ_k)ᵀ M_p (λ − λ_k) + λᵀ g` over `Λ`.
pub fn dual_subproblem(
    metric: &MetricMp,
    lambda_k: &[f64],
    g: &[f64],
    sense: ConstraintSense,
    inner: InnerParams,
) -> Result<DualSolution> {
    let m = metric.dim();
    check_len("dual subproblem lambda", m, lambda_k.len())?;
    check_len("dual subproblem gradient", m, g.len())?;
    if !(inner.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inner_tol must be positive, got {}",
            inner.tol
        )));
    }
    let unconstrained = sub(lambda_k, &metric.chol.solve(g)?);
    if sense == ConstraintSense::Equality {
        return Ok(DualSolution {
            lambda: unconstrained,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }

    let step = 1.0 / metric.top_eig;
    let threshold = inner.tol * (1.0 + norm(g));
    let mut lambda: Vec<f64> = unconstrained.into_iter().map(|v| v.max(0.0)).collect();
    let gradient = |lambda: &[f64]| -> Result<Vec<f64>> {
        let mut grad = metric.dense.mul_vec(&sub(lambda, lambda_k))?;
        for (gi, bi) in grad.iter_mut().zip(g) {
            *gi += bi;
        }
        Ok(grad)
    };
    let pg_residual = |lambda: &[f64], grad: &[f64]| -> f64 {
        lambda
            .iter()
            .zip(grad)
            .map(|(l, d)| (l - (l - d).max(0.0)).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let mut grad = gradient(&lambda)?;
    let mut residual = pg_residual(&lambda, &grad);
    let mut iterations = 0;
    while residual > threshold && iterations < inner.max_iter {
        for (l, d) in lambda.iter_mut().zip(&grad) {
            *l = (*l - step * d).max(0.0);
        }
        grad = gradient(&lambda)?;
        residual = pg_residual(&lambda, &grad);
        iterations += 1;
    }
    Ok(DualSolution {
        lambda,
        iterations,
        residual,
        converged: residual <= threshold,
    })
}

#[derive(Clone, Debug)]
pub struct MultiBlockPrediction {
    pub pair: PredictionPair,
    pub dual: DualSolution,
}

fn predict_inner(
    problem: &MultiBlockProblem,
    w: &Iterate,
    metric: &MetricMp,
    inner: InnerParams,
) -> Result<(Iterate, DualSolution)> {
    let g = sub(&problem.constraint_value(&w.x)?, problem.b());
    let dual = dual_subproblem(metric, &w.lambda, &g, problem.sense(), inner)?;
    let t = extrapolate(&dual.lambda, &w.lambda);
    let mut x_bar = Vec::with_capacity(problem.n());
    for (i, blk) in problem.blocks().iter().enumerate() {
        let xi = &w.x[problem.block_range(i)];
        x_bar.extend(prox_step(blk.prox.as_ref(), &blk.a, blk.beta, xi, &t)?);
    }
    Ok((Iterate::new(x_bar, dual.lambda.clone()), dual))
}

/// One prediction of the generalized scheme: the dual subproblem with
/// `g = Σ A_i x_i^k − b`, then per block
/// `x̄_i = prox_i(x_i^k + (1/β_i) A_iᵀ(2λ̄ − λ^k), β_i)`.
pub fn multiblock_predict(
    problem: &MultiBlockProblem,
    w: &Iterate,
    metric: &MetricMp,
    inner: InnerParams,
) -> Result<MultiBlockPrediction> {
    w.check_dims(problem.n(), problem.m())?;
    check_len("metric dimension", problem.m(), metric.dim())?;
    let (predictor, dual) = predict_inner(problem, w, metric, inner)?;
    Ok(MultiBlockPrediction {
        pair: PredictionPair {
            current: w.clone(),
            predictor,
        },
        dual,
    })
}

/// `‖Σ A_i x_i − b‖` for equality, `‖min(Σ A_i x_i − b, 0)‖` for inequality.
pub fn multiblock_primal_residual(problem: &MultiBlockProblem, x: &[f64]) -> Result<f64> {
    let r = sub(&problem.constraint_value(x)?, problem.b());
    Ok(match problem.sense() {
        ConstraintSense::Equality => norm(&r),
        ConstraintSense::Inequality => r.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt(),
    })
}

struct MultiScheme<'p> {
    problem: &'p MultiBlockProblem,
    metric: MetricMp,
    h: HMetric<'p>,
    inner: InnerParams,
    last_inner: Option<f64>,
    inexact: usize,
}

impl Scheme for MultiScheme<'_> {
    fn predict(&mut self, w: &Iterate) -> Result<Iterate> {
        let (pred, dual) = predict_inner(self.problem, w, &self.metric, self.inner)?;
        if !dual.converged {
            self.inexact += 1;
        }
        self.last_inner = match self.problem.sense() {
            ConstraintSense::Equality => None,
            ConstraintSense::Inequality => Some(dual.residual),
        };
        Ok(pred)
    }

    fn residual(&self, w: &Iterate, predictor: &Iterate) -> Result<f64> {
        self.h.dist(w, predictor)
    }

    fn primal_residual(&self, x: &[f64]) -> Result<f64> {
        multiblock_primal_residual(self.problem, x)
    }

    fn inner_residual(&self) -> Option<f64> {
        self.last_inner
    }
}

/// Generalized dual-primal balanced ALM. Penalties come from the blocks'
/// `β_i`; `cfg.delta`, `cfg.alpha`, the iteration cap and the inner-solver
/// settings come from the config. Only the fixed-point residual stop rule
/// applies, measured in the block `H` metric.
pub fn solve_multiblock(problem: &MultiBlockProblem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    solve_multiblock_inner(problem, cfg, w0, None)
}

pub fn solve_multiblock_observed(
    problem: &MultiBlockProblem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    solve_multiblock_inner(problem, cfg, w0, Some(observer))
}

fn solve_multiblock_inner(
    problem: &MultiBlockProblem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    w0.check_dims(problem.n(), problem.m())?;
    if let Err(e) = cfg.validate_common() {
        return Ok(SolveReport::invalid(w0, e.to_string()));
    }
    if !(cfg.delta > 0.0) || !cfg.delta.is_finite() {
        return Ok(SolveReport::invalid(
            w0,
            format!("delta must be positive, got {}", cfg.delta),
        ));
    }
    if let StopRule::RelativeError(_) = cfg.stop_rule {
        return Ok(SolveReport::invalid(
            w0,
            "multi-block problems carry no known solution; use the fixed-point residual rule".into(),
        ));
    }
    let start = Instant::now();
    let mut scheme = MultiScheme {
        problem,
        metric: build_metric(problem, cfg.delta)?,
        h: HMetric::multi(problem, cfg.delta)?,
        inner: InnerParams {
            tol: cfg.inner_tol,
            max_iter: cfg.inner_max_iter,
        },
        last_inner: None,
        inexact: 0,
    };
    let mut report = drive(&mut scheme, cfg, cfg.alpha, w0, start, observer)?;
    report.flags.inexact_dual_steps = scheme.inexact;
    if scheme.inexact > 0 {
        report.warnings.push(format!(
            "{} dual subproblems stopped at the inner iteration cap ({})",
            scheme.inexact, cfg.inner_max_iter
        ));
    }
    Ok(report)
}
