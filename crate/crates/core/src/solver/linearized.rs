use std::time::Instant;

use super::balanced::{equality_residual, stop_rule_problem};
use super::engine::{drive, Observer, Scheme};
use crate::error::Result;
use crate::model::{Iterate, Problem, SolveReport, SolverConfig};

/// Added to the estimated `ρ(AᵀA)` before checking step-size conditions;
/// power iteration approaches `ρ` from below.
pub const STEP_RULE_SLACK: f64 = 1e-12;

struct LinearizedAlm<'p> {
    problem: &'p Problem,
    beta: f64,
    r: f64,
}

impl Scheme for LinearizedAlm<'_> {
    fn predict(&mut self, w: &Iterate) -> Result<Iterate> {
        let (a, b) = (self.problem.a(), self.problem.b());
        let ax = a.mul_vec(&w.x)?;
        let t: Vec<f64> = w
            .lambda
            .iter()
            .zip(ax.iter().zip(b))
            .map(|(l, (axi, bi))| l - self.beta * (axi - bi))
            .collect();
        let at = a.tr_mul_vec(&t)?;
        let inv_r = 1.0 / self.r;
        let point: Vec<f64> = w.x.iter().zip(&at).map(|(x, g)| x + inv_r * g).collect();
        let x_next = self.problem.prox().evaluate(&point, self.r)?;
        let ax_next = a.mul_vec(&x_next)?;
        let lambda_next = w
            .lambda
            .iter()
            .zip(ax_next.iter().zip(b))
            .map(|(l, (axi, bi))| l - self.beta * (axi - bi))
            .collect();
        Ok(Iterate::new(x_next, lambda_next))
    }

    fn residual(&self, w: &Iterate, next: &Iterate) -> Result<f64> {
        Ok(w.sub(next).norm())
    }

    fn primal_residual(&self, x: &[f64]) -> Result<f64> {
        equality_residual(self.problem.a(), self.problem.b(), x)
    }

    fn known_solution(&self) -> Option<&[f64]> {
        self.problem.known_solution()
    }
}

struct PrimalDual<'p> {
    problem: &'p Problem,
    r: f64,
    s: f64,
}

impl Scheme for PrimalDual<'_> {
    fn predict(&mut self, w: &Iterate) -> Result<Iterate> {
        let (a, b) = (self.problem.a(), self.problem.b());
        let at = a.tr_mul_vec(&w.lambda)?;
        let inv_r = 1.0 / self.r;
        let point: Vec<f64> = w.x.iter().zip(&at).map(|(x, g)| x + inv_r * g).collect();
        let x_next = self.problem.prox().evaluate(&point, self.r)?;
        let ext: Vec<f64> = x_next.iter().zip(&w.x).map(|(xn, x)| 2.0 * xn - x).collect();
        let a_ext = a.mul_vec(&ext)?;
        let inv_s = 1.0 / self.s;
        let lambda_next = w
            .lambda
            .iter()
            .zip(a_ext.iter().zip(b))
            .map(|(l, (v, bi))| l - inv_s * (v - bi))
            .collect();
        Ok(Iterate::new(x_next, lambda_next))
    }

    fn residual(&self, w: &Iterate, next: &Iterate) -> Result<f64> {
        Ok(w.sub(next).norm())
    }

    fn primal_residual(&self, x: &[f64]) -> Result<f64> {
        equality_residual(self.problem.a(), self.problem.b(), x)
    }

    fn known_solution(&self) -> Option<&[f64]> {
        self.problem.known_solution()
    }
}

/// Linearized ALM:
/// `x⁺ = prox(x + (1/r)Aᵀ(λ − β(Ax − b)), r)`, `λ⁺ = λ − β(Ax⁺ − b)`.
///
/// Requires `r > β ρ(AᵀA)`. `fp_res_h` records the Euclidean displacement
/// `‖w^{k+1} − w^k‖`, since this scheme has no `H` metric.
pub fn solve_lalm(problem: &Problem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    solve_lalm_inner(problem, cfg, w0, None)
}

pub fn solve_lalm_observed(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    solve_lalm_inner(problem, cfg, w0, Some(observer))
}

fn solve_lalm_inner(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    w0.check_dims(problem.n(), problem.m())?;
    if let Err(e) = cfg.validate_positive_r_s(true) {
        return Ok(SolveReport::invalid(w0, e.to_string()));
    }
    if let Some(msg) = stop_rule_problem(problem, cfg) {
        return Ok(SolveReport::invalid(w0, msg));
    }
    let rho = problem.spectral_radius()?.value;
    let bound = cfg.beta * (rho + STEP_RULE_SLACK);
    if !(cfg.r > bound) {
        return Ok(SolveReport::invalid(
            w0,
            format!(
                "linearized ALM requires r > beta * rho(A^T A): r = {}, beta * rho = {}",
                cfg.r,
                cfg.beta * rho
            ),
        ));
    }
    let start = Instant::now();
    let mut scheme = LinearizedAlm {
        problem,
        beta: cfg.beta,
        r: cfg.r,
    };
    let mut report = drive(&mut scheme, cfg, 1.0, w0, start, observer)?;
    report.flags.euclidean_residual = true;
    report.flags.spectral_radius = Some(rho);
    Ok(report)
}

/// Chambolle–Pock primal-dual method:
/// `x⁺ = prox(x + (1/r)Aᵀλ, r)`, `λ⁺ = λ − (1/s)(A(2x⁺ − x) − b)`.
///
/// Requires `r s ≥ ρ(AᵀA)`. Like the linearized ALM it records the
/// Euclidean displacement in `fp_res_h`.
pub fn solve_pda(problem: &Problem, cfg: &SolverConfig, w0: Iterate) -> Result<SolveReport> {
    solve_pda_inner(problem, cfg, w0, None)
}

pub fn solve_pda_observed(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Observer<'_>,
) -> Result<SolveReport> {
    solve_pda_inner(problem, cfg, w0, Some(observer))
}

fn solve_pda_inner(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: Iterate,
    observer: Option<Observer<'_>>,
) -> Result<SolveReport> {
    w0.check_dims(problem.n(), problem.m())?;
    if let Err(e) = cfg.validate_positive_r_s(false) {
        return Ok(SolveReport::invalid(w0, e.to_string()));
    }
    if let Some(msg) = stop_rule_problem(problem, cfg) {
        return Ok(SolveReport::invalid(w0, msg));
    }
    let rho = problem.spectral_radius()?.value;
    if !(cfg.r * cfg.s >= rho + STEP_RULE_SLACK) {
        return Ok(SolveReport::invalid(
            w0,
            format!(
                "primal-dual method requires r * s >= rho(A^T A): r * s = {}, rho = {}",
                cfg.r * cfg.s,
                rho
            ),
        ));
    }
    let start = Instant::now();
    let mut scheme = PrimalDual {
        problem,
        r: cfg.r,
        s: cfg.s,
    };
    let mut report = drive(&mut scheme, cfg, 1.0, w0, start, observer)?;
    report.flags.euclidean_residual = true;
    report.flags.spectral_radius = Some(rho);
    Ok(report)
}
