//! Numerical certificates for the convergence theory: the prediction
//! inequality, strict contraction in the `H` norm, skew symmetry of `F`
//! and positive definiteness of `H`. All checks report worst margins
//! instead of failing, so callers decide what to do with a violation.

use super::metric::HMetric;
use super::vi::{vi_operator, SaddleProblem};
use crate::error::{Error, Result};
use crate::linalg::{CholFactor, Rng};
use crate::model::{Iterate, SolveReport};
use crate::solver::{Observer, PredictionPair};

pub const PREDICTION_TOL: f64 = 1e-8;
pub const CONTRACTION_TOL: f64 = 1e-7;
pub const SUMMABILITY_SLACK: f64 = 1e-6;
pub const SKEW_TOL: f64 = 1e-12;
pub const ASSEMBLED_MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub samples: usize,
    /// Smallest `(lhs − rhs) / scale` over the samples, where `scale` is the
    /// largest magnitude among the terms involved (at least 1).
    pub min_margin: f64,
    /// Unscaled `lhs − rhs` at the worst sample.
    pub worst_raw: f64,
    pub passed: bool,
}

/// Samples `w ∈ Ω` and evaluates
/// `θ(x) − θ(x̄) + (w − w̄)ᵀF(w̄) − (w − w̄)ᵀH(w^k − w̄)`,
/// which is nonnegative for an exact predictor `w̄` generated from `w^k`.
///
/// Samples are Gaussian perturbations of `w̄` at several scales plus
/// Gaussian points around the origin, projected onto `Ω`; the first sample
/// is `w̄` itself.
pub fn check_prediction_inequality<'a>(
    problem: impl Into<SaddleProblem<'a>>,
    pair: &PredictionPair,
    metric: &HMetric<'_>,
    samples: usize,
    rng: &mut Rng,
) -> Result<InequalityCheck> {
    let p = problem.into();
    let w_bar = &pair.predictor;
    w_bar.check_dims(p.n(), p.m())?;
    pair.current.check_dims(p.n(), p.m())?;
    let f_bar = vi_operator(p, w_bar)?;
    let h_d = metric.apply(&pair.current.sub(w_bar))?;
    let theta_bar = p.objective(&w_bar.x);
    if !theta_bar.is_finite() {
        return Err(Error::InvalidArgument("predictor lies outside the domain".into()));
    }
    let spread = 1.0 + w_bar.x.iter().chain(&w_bar.lambda).fold(0.0f64, |a, v| a.max(v.abs()));
    let origin = Iterate::zeros(p.n(), p.m());

    let mut min_margin = f64::INFINITY;
    let mut worst_raw = 0.0;
    for s in 0..samples {
        let w = match s % 4 {
            0 if s == 0 => w_bar.clone(),
            0 => p.sample_omega(&origin, spread, rng),
            1 => p.sample_omega(w_bar, 1e-3 * spread, rng),
            2 => p.sample_omega(w_bar, 0.1 * spread, rng),
            _ => p.sample_omega(w_bar, 3.0 * spread, rng),
        };
        let theta = p.objective(&w.x);
        let diff = w.sub(w_bar);
        let lhs = theta - theta_bar + diff.dot(&f_bar);
        let rhs = diff.dot(&h_d);
        let raw = lhs - rhs;
        let scale = [1.0, theta.abs(), theta_bar.abs(), lhs.abs(), rhs.abs()]
            .into_iter()
            .fold(0.0f64, f64::max);
        let margin = raw / scale;
        if margin < min_margin {
            min_margin = margin;
            worst_raw = raw;
        }
    }
    if samples == 0 {
        min_margin = 0.0;
    }
    Ok(InequalityCheck {
        samples,
        min_margin,
        worst_raw,
        passed: min_margin >= -PREDICTION_TOL,
    })
}

/// `(k, w^k, w̄^k)` as seen by a solver observer.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub k: usize,
    pub w: Iterate,
    pub w_bar: Iterate,
}

/// Runs `run` with an observer that records every visited iterate and its
/// predictor.
pub fn record_trace<F>(run: F) -> Result<(SolveReport, Vec<TraceStep>)>
where
    F: FnOnce(Observer<'_>) -> Result<SolveReport>,
{
    let mut trace = Vec::new();
    let mut obs = |k: usize, w: &Iterate, w_bar: &Iterate| {
        trace.push(TraceStep {
            k,
            w: w.clone(),
            w_bar: w_bar.clone(),
        })
    };
    let report = run(&mut obs)?;
    Ok((report, trace))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCheck {
    /// Number of transitions `w^k → w^{k+1}` checked.
    pub steps: usize,
    /// `max_k ‖w^{k+1}−w*‖²_H − ‖w^k−w*‖²_H + α(2−α)‖w^k−w̄^k‖²_H`.
    pub worst_violation: f64,
    pub worst_step: Option<usize>,
    /// `1e-7 · (1 + ‖w⁰ − w*‖²_H)`.
    pub threshold: f64,
    pub initial_dist_sq: f64,
    /// `Σ_k α(2−α)‖w^k − w̄^k‖²_H` over the trace.
    pub residual_sum: f64,
    pub summable: bool,
    pub passed: bool,
}

/// Checks `‖w^{k+1}−w*‖²_H ≤ ‖w^k−w*‖²_H − α(2−α)‖w^k−w̄^k‖²_H` along a
/// recorded trace, with `w^{k+1}` taken from the next trace entry.
pub fn check_contraction(
    trace: &[TraceStep],
    w_star: &Iterate,
    metric: &HMetric<'_>,
    alpha: f64,
) -> Result<ContractionCheck> {
    let coef = alpha * (2.0 - alpha);
    let initial_dist_sq = match trace.first() {
        Some(t) => metric.dist_sq(&t.w, w_star)?,
        None => 0.0,
    };
    let mut dists = Vec::with_capacity(trace.len());
    let mut residual_sum = 0.0;
    for t in trace {
        dists.push(metric.dist_sq(&t.w, w_star)?);
        residual_sum += coef * metric.dist_sq(&t.w, &t.w_bar)?;
    }
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_step = None;
    for k in 0..trace.len().saturating_sub(1) {
        let gap = coef * metric.dist_sq(&trace[k].w, &trace[k].w_bar)?;
        let v = dists[k + 1] - dists[k] + gap;
        if v > worst_violation {
            worst_violation = v;
            worst_step = Some(trace[k].k);
        }
    }
    if worst_step.is_none() {
        worst_violation = 0.0;
    }
    let threshold = CONTRACTION_TOL * (1.0 + initial_dist_sq);
    Ok(ContractionCheck {
        steps: trace.len().saturating_sub(1),
        worst_violation,
        worst_step,
        threshold,
        initial_dist_sq,
        residual_sum,
        summable: residual_sum <= initial_dist_sq + SUMMABILITY_SLACK,
        passed: worst_violation <= threshold,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkewCheck {
    pub pairs: usize,
    /// `max |(u−v)ᵀ(F(u)−F(v))| / (‖u‖+‖v‖)²`.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Samples Gaussian pairs at scales between `1e-3` and `1e3` and measures
/// `(u−v)ᵀ(F(u)−F(v))`, which vanishes identically.
pub fn check_skew_identity<'a>(
    problem: impl Into<SaddleProblem<'a>>,
    pairs: usize,
    rng: &mut Rng,
) -> Result<SkewCheck> {
    let p = problem.into();
    let draw = |rng: &mut Rng| {
        let scale = 10f64.powf(rng.uniform_in(-3.0, 3.0));
        let x = rng.gauss_sample(p.n()).into_iter().map(|v| scale * v).collect();
        let l = rng.gauss_sample(p.m()).into_iter().map(|v| scale * v).collect();
        Iterate::new(x, l)
    };
    let mut worst_ratio = 0.0f64;
    for _ in 0..pairs {
        let u = draw(rng);
        let v = draw(rng);
        let fu = vi_operator(p, &u)?;
        let fv = vi_operator(p, &v)?;
        let value = u.sub(&v).dot(&fu.sub(&fv));
        let denom = (u.norm() + v.norm()).powi(2);
        let ratio = if denom > 0.0 { value.abs() / denom } else { value.abs() };
        worst_ratio = worst_ratio.max(ratio);
    }
    Ok(SkewCheck {
        pairs,
        worst_ratio,
        passed: worst_ratio <= SKEW_TOL,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdWitness {
    pub samples: usize,
    /// `min wᵀHw / ‖w‖²` over the random samples.
    pub min_ratio: f64,
    /// Whether Cholesky succeeded on the assembled `H`; `None` when `H` is
    /// too large to assemble.
    pub cholesky_ok: Option<bool>,
    /// Largest relative gap between the implicit and assembled quadratic forms.
    pub max_rel_mismatch: Option<f64>,
    pub passed: bool,
}

/// Random witnesses of `H ≻ 0`, plus the assembled cross-check for small
/// dimensions.
pub fn check_h_positive_definite(metric: &HMetric<'_>, samples: usize, rng: &mut Rng) -> Result<PdWitness> {
    let (n, m) = (metric.n(), metric.m());
    let dense = if n + m <= super::metric::ASSEMBLY_LIMIT {
        Some(metric.assemble()?)
    } else {
        None
    };
    let cholesky_ok = dense.as_ref().map(|h| CholFactor::factor(h).is_ok());
    let mut min_ratio = f64::INFINITY;
    let mut max_rel: Option<f64> = dense.as_ref().map(|_| 0.0);
    for _ in 0..samples {
        let w = Iterate::new(rng.gauss_sample(n), rng.gauss_sample(m));
        let nsq = w.dot(&w);
        if nsq == 0.0 {
            continue;
        }
        let q = metric.quadratic(&w)?;
        min_ratio = min_ratio.min(q / nsq);
        if let Some(h) = &dense {
            let stacked: Vec<f64> = w.x.iter().chain(&w.lambda).copied().collect();
            let explicit = h.quadratic_form(&stacked)?;
            let rel = (q - explicit).abs() / q.abs().max(explicit.abs()).max(f64::MIN_POSITIVE);
            max_rel = max_rel.map(|r| r.max(rel));
        }
    }
    if samples == 0 {
        min_ratio = 0.0;
    }
    let passed = min_ratio > 0.0 && cholesky_ok != Some(false) && max_rel.is_none_or(|r| r <= ASSEMBLED_MATCH_TOL);
    Ok(PdWitness {
        samples,
        min_ratio,
        cholesky_ok,
        max_rel_mismatch: max_rel,
        passed,
    })
}
