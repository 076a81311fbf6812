use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{norm, sub};
use crate::model::{HistoryRecord, Iterate, ReportFlags, SolveReport, SolveStatus, SolverConfig, StopRule};

/// Called once per visited iterate with `(k, w^k, w̄^k)`.
pub type Observer<'o> = &'o mut dyn FnMut(usize, &Iterate, &Iterate);

/// Current iterate and the predictor generated from it.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionPair {
    pub current: Iterate,
    pub predictor: Iterate,
}

/// One iteration's worth of a prediction-correction method.
pub(crate) trait Scheme {
    fn predict(&mut self, w: &Iterate) -> Result<Iterate>;

    /// Fixed-point residual recorded as `fp_res_h`.
    fn residual(&self, w: &Iterate, predictor: &Iterate) -> Result<f64>;

    fn primal_residual(&self, x: &[f64]) -> Result<f64>;

    fn known_solution(&self) -> Option<&[f64]> {
        None
    }

    /// Inner-solver residual of the most recent prediction, if any.
    fn inner_residual(&self) -> Option<f64> {
        None
    }
}

/// `w^{k+1} = w^k + α (w̄^k − w^k)`; `α = 1` returns the predictor exactly.
pub fn correct(pair: &PredictionPair, alpha: f64) -> Result<Iterate> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    Ok(correct_unchecked(&pair.current, &pair.predictor, alpha))
}

pub(crate) fn correct_unchecked(w: &Iterate, predictor: &Iterate, alpha: f64) -> Iterate {
    if alpha == 1.0 {
        return predictor.clone();
    }
    let blend =
        |cur: &[f64], pred: &[f64]| -> Vec<f64> { cur.iter().zip(pred).map(|(c, p)| c + alpha * (p - c)).collect() };
    Iterate::new(blend(&w.x, &predictor.x), blend(&w.lambda, &predictor.lambda))
}

/// `‖x − x*‖ / ‖x*‖`, or the plain distance when `x* = 0`.
pub fn relative_error(x: &[f64], reference: &[f64]) -> f64 {
    let denom = norm(reference);
    let diff = norm(&sub(x, reference));
    if denom > 0.0 {
        diff / denom
    } else {
        diff
    }
}

/// Shared predict → record → stop-check → correct loop.
pub(crate) fn drive<S: Scheme>(
    scheme: &mut S,
    cfg: &SolverConfig,
    alpha: f64,
    w0: Iterate,
    start: Instant,
    mut observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    let mut history = Vec::with_capacity(cfg.max_iter.min(4096) + 1);
    let mut warnings = Vec::new();
    let mut w = w0;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;

    for k in 0..=cfg.max_iter {
        let predictor = scheme.predict(&w)?;
        let fp = scheme.residual(&w, &predictor)?;
        let rel_err = scheme.known_solution().map(|xs| relative_error(&w.x, xs));
        let primal_res = scheme.primal_residual(&w.x)?;
        let record = HistoryRecord {
            iter: k,
            rel_err,
            primal_res,
            fp_res_h: fp,
            elapsed_s: start.elapsed().as_secs_f64(),
            inner_res: scheme.inner_residual(),
        };
        let finite = fp.is_finite() && primal_res.is_finite() && rel_err.is_none_or(f64::is_finite);
        if !finite || !predictor.is_finite() {
            if k == 0 {
                return Err(Error::InvalidArgument(
                    "non-finite values at the initial iterate".into(),
                ));
            }
            warnings.push(format!("iterates became non-finite at iteration {k}"));
            iterations = k - 1;
            break;
        }
        history.push(record);
        if let Some(obs) = observer.as_mut() {
            obs(k, &w, &predictor);
        }
        iterations = k;
        let done = match cfg.stop_rule {
            StopRule::RelativeError(tol) => rel_err.is_some_and(|e| e < tol),
            StopRule::FixedPointResidual(tol) => fp <= tol,
        };
        if done {
            status = SolveStatus::Converged;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        w = correct_unchecked(&w, &predictor, alpha);
    }

    Ok(SolveReport {
        status,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        history,
        final_iterate: w,
        flags: ReportFlags::default(),
        warnings,
        message: None,
    })
}
