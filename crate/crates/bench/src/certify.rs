//! Runs the diagnostics suites on generated instances and collects one
//! verdict per check.

use std::fmt;
use std::sync::Arc;

use balm::diagnostics::{
    check_contraction, check_h_positive_definite, check_prediction_inequality, check_skew_identity, record_trace,
    Coupling, HMetric, TraceStep, PREDICTION_TOL, SKEW_TOL,
};
use balm::instances::{generate_basis_pursuit, reference_saddle, BasisPursuitSpec, REFERENCE_CAP, REFERENCE_TOL};
use balm::linalg::{Matrix, Rng};
use balm::solver::{solve_dp_balm_observed, solve_dp_balm_raw_alpha, PredictionPair};
use balm::{
    make_l1_prox, solve_multiblock_observed, Algorithm, Block, ConstraintSense, MultiBlockProblem, Problem,
    SolverConfig, StopRule,
};

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyPlan {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Correction step used by the runs and claimed to the checks.
    pub alpha: f64,
    /// Random `Ω` samples per checked prediction.
    pub samples: usize,
    /// Predictions checked per run.
    pub steps: usize,
    pub skew_pairs: usize,
    /// Random small `H` configurations for the assembled Cholesky test.
    pub pd_configs: usize,
    /// Iteration cap of the traced runs.
    pub trace_cap: usize,
    /// Test hook: apply this step in the correction while the checks keep
    /// assuming `alpha`.
    pub corrupt_alpha: Option<f64>,
}

impl CertifyPlan {
    pub fn new(sizes: Vec<usize>, seeds: Vec<u64>) -> Self {
        Self {
            sizes,
            seeds,
            alpha: 1.0,
            samples: 100,
            steps: 20,
            skew_pairs: 1000,
            pd_configs: 50,
            trace_cap: 5000,
            corrupt_alpha: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.seeds.is_empty() {
            return Err(BenchError::usage("certify needs at least one size and one seed"));
        }
        for &n in &self.sizes {
            BasisPursuitSpec::new(n, 0)
                .validate()
                .map_err(|e| BenchError::usage(format!("size {n}: {e}")))?;
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(BenchError::usage(format!(
                "alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub check: &'static str,
    pub instance: String,
    /// Worst observed value; compared against `limit` in the check's own
    /// direction.
    pub worst: f64,
    pub limit: f64,
    /// Steps, pairs or configurations the verdict rests on.
    pub evaluated: usize,
    pub passed: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} {:<16} worst={:+.3e} limit={:+.3e} evaluated={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check,
            self.instance,
            self.worst,
            self.limit,
            self.evaluated
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertifyOutcome {
    pub lines: Vec<CheckLine>,
    pub warnings: Vec<String>,
    pub contraction_runs: usize,
}

impl CertifyOutcome {
    /// Every executed check passed and at least one contraction check ran.
    pub fn passed(&self) -> bool {
        self.contraction_runs > 0 && self.lines.iter().all(|l| l.passed)
    }
}

fn pick_steps(trace: &[TraceStep], count: usize) -> Vec<&TraceStep> {
    trace.iter().take(count).collect()
}

fn worst_prediction<'a>(
    problem: impl Into<balm::diagnostics::SaddleProblem<'a>> + Copy,
    steps: &[&TraceStep],
    metric: &HMetric<'_>,
    samples: usize,
    rng: &mut Rng,
) -> Result<(f64, usize)> {
    let mut worst = f64::INFINITY;
    for step in steps {
        let pair = PredictionPair {
            current: step.w.clone(),
            predictor: step.w_bar.clone(),
        };
        worst = worst.min(check_prediction_inequality(problem, &pair, metric, samples, rng)?.min_margin);
    }
    Ok((worst, steps.len()))
}

/// Splits the columns of a single-block problem into two blocks with
/// different penalties.
fn two_block_split(problem: &Problem, sense: ConstraintSense) -> Result<MultiBlockProblem> {
    let (m, n) = (problem.m(), problem.n());
    let cut = n / 2;
    let a = problem.a();
    let left = Matrix::from_fn(m, cut, |i, j| a[(i, j)]);
    let right = Matrix::from_fn(m, n - cut, |i, j| a[(i, cut + j)]);
    let blocks = vec![
        Block::new(Arc::new(make_l1_prox()), left, 10.0),
        Block::new(Arc::new(make_l1_prox()), right, 4.0),
    ];
    Ok(MultiBlockProblem::new(blocks, problem.b().to_vec(), sense)?)
}

fn certify_instance(plan: &CertifyPlan, spec: BasisPursuitSpec, out: &mut CertifyOutcome) -> Result<()> {
    let label = format!("n={} seed={}", spec.n, spec.seed);
    let problem = generate_basis_pursuit(&spec)?;
    let rho = problem.spectral_radius()?.value;
    let mut rng = Rng::new(spec.seed ^ 0x9E37_79B9_7F4A_7C15);
    let cfg = SolverConfig {
        alpha: plan.alpha,
        stop_rule: StopRule::FixedPointResidual(1e-10),
        max_iter: plan.trace_cap,
        ..Algorithm::DpBalm.tuned_config(rho)
    };
    let h = HMetric::single(problem.a(), cfg.beta, cfg.delta)?;

    let (_, trace) = record_trace(|obs| match plan.corrupt_alpha {
        Some(raw) => solve_dp_balm_raw_alpha(&problem, &cfg, problem.zero_iterate(), raw, obs),
        None => solve_dp_balm_observed(&problem, &cfg, problem.zero_iterate(), obs),
    })?;

    let steps = pick_steps(&trace, plan.steps);
    let (worst, evaluated) = worst_prediction(&problem, &steps, &h, plan.samples, &mut rng)?;
    out.lines.push(CheckLine {
        check: "prediction-inequality",
        instance: label.clone(),
        worst,
        limit: -PREDICTION_TOL,
        evaluated,
        passed: worst >= -PREDICTION_TOL,
    });

    for sense in [ConstraintSense::Equality, ConstraintSense::Inequality] {
        let mb = two_block_split(&problem, sense)?;
        let mcfg = SolverConfig {
            delta: cfg.delta,
            alpha: plan.alpha,
            stop_rule: StopRule::FixedPointResidual(1e-10),
            max_iter: plan.steps,
            ..SolverConfig::default()
        };
        let (_, mtrace) = record_trace(|obs| solve_multiblock_observed(&mb, &mcfg, mb.zero_iterate(), obs))?;
        let mh = HMetric::multi(&mb, mcfg.delta)?;
        let (worst, evaluated) = worst_prediction(&mb, &pick_steps(&mtrace, plan.steps), &mh, plan.samples, &mut rng)?;
        out.lines.push(CheckLine {
            check: match sense {
                ConstraintSense::Equality => "prediction-multi-eq",
                ConstraintSense::Inequality => "prediction-multi-ineq",
            },
            instance: label.clone(),
            worst,
            limit: -PREDICTION_TOL,
            evaluated,
            passed: worst >= -PREDICTION_TOL,
        });
    }

    match reference_saddle(&problem, REFERENCE_TOL, REFERENCE_CAP) {
        Ok(w_star) => {
            let c = check_contraction(&trace, &w_star, &h, plan.alpha)?;
            out.contraction_runs += 1;
            out.lines.push(CheckLine {
                check: "contraction",
                instance: label.clone(),
                worst: c.worst_violation,
                limit: c.threshold,
                evaluated: c.steps,
                passed: c.passed,
            });
            out.lines.push(CheckLine {
                check: "residual-summability",
                instance: label.clone(),
                worst: c.residual_sum - c.initial_dist_sq,
                limit: balm::diagnostics::SUMMABILITY_SLACK,
                evaluated: c.steps,
                passed: c.summable,
            });
        }
        Err(e) => out.warnings.push(format!(
            "{label}: reference solve failed ({e}); contraction check skipped"
        )),
    }

    let skew = check_skew_identity(&problem, plan.skew_pairs, &mut rng)?;
    out.lines.push(CheckLine {
        check: "skew-identity",
        instance: label.clone(),
        worst: skew.worst_ratio,
        limit: SKEW_TOL,
        evaluated: skew.pairs,
        passed: skew.passed,
    });

    let pd = check_h_positive_definite(&h, plan.samples, &mut rng)?;
    out.lines.push(CheckLine {
        check: "h-positive-definite",
        instance: label,
        worst: pd.min_ratio,
        limit: 0.0,
        evaluated: pd.samples,
        passed: pd.passed,
    });
    Ok(())
}

/// Cholesky on assembled `H` for random small single- and multi-block
/// configurations with `β ∈ [1e-3, 1e3]`, `δ ∈ [1e-6, 10]`.
fn certify_assembled(plan: &CertifyPlan, seed: u64, out: &mut CertifyOutcome) -> Result<()> {
    let mut rng = Rng::new(seed);
    let mut worst_mismatch = 0.0f64;
    let mut all_ok = true;
    for i in 0..plan.pd_configs {
        let m = 1 + rng.below(15);
        let p = 1 + rng.below(3);
        let mut mats = Vec::with_capacity(p);
        let mut budget = 60 - m;
        for _ in 0..p {
            if budget == 0 {
                break;
            }
            let cols = 1 + rng.below(budget.min(20));
            budget -= cols;
            let beta = 10f64.powf(rng.uniform_in(-3.0, 3.0));
            mats.push((Matrix::new(m, cols, rng.gauss_sample(m * cols))?, beta));
        }
        let delta = 10f64.powf(rng.uniform_in(-6.0, 1.0));
        let coupling = if i % 2 == 0 {
            Coupling::DualPrimal
        } else {
            Coupling::PrimalDual
        };
        let coupling = if mats.len() > 1 { Coupling::DualPrimal } else { coupling };
        let h = HMetric::from_blocks(mats.iter().map(|(a, b)| (a, *b)).collect(), delta, coupling)?;
        let w = check_h_positive_definite(&h, 20, &mut rng)?;
        all_ok &= w.passed && w.cholesky_ok == Some(true);
        worst_mismatch = worst_mismatch.max(w.max_rel_mismatch.unwrap_or(0.0));
    }
    out.lines.push(CheckLine {
        check: "h-assembled-cholesky",
        instance: format!("{} configs", plan.pd_configs),
        worst: worst_mismatch,
        limit: balm::diagnostics::ASSEMBLED_MATCH_TOL,
        evaluated: plan.pd_configs,
        passed: all_ok,
    });
    Ok(())
}

pub fn run_certify(plan: &CertifyPlan) -> Result<CertifyOutcome> {
    plan.validate()?;
    let mut out = CertifyOutcome::default();
    for &n in &plan.sizes {
        for &seed in &plan.seeds {
            certify_instance(plan, BasisPursuitSpec::new(n, seed), &mut out)?;
        }
    }
    certify_assembled(plan, plan.seeds[0], &mut out)?;
    Ok(out)
}
