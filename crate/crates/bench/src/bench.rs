use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use balm::instances::{generate_basis_pursuit, BasisPursuitSpec};
use balm::{solve, Algorithm, Problem};
use rayon::prelude::*;

use crate::config::{solver_config, ParamOverrides, StopRuleKind, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::csv::{median_csv, medians, summary_csv, SummaryRow};
use crate::error::{BenchError, Result};

/// The benchmark matrix: every `(n, seed, algorithm)` cell on the
/// basis-pursuit instance `BasisPursuitSpec::new(n, seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    /// Applied to every algorithm.
    pub params: ParamOverrides,
    /// Applied to one algorithm, winning over `params`.
    pub per_algorithm: BTreeMap<Algorithm, ParamOverrides>,
    pub tol: f64,
    pub max_iter: usize,
    pub stop_rule: StopRuleKind,
}

impl BenchPlan {
    pub fn new(sizes: Vec<usize>, seeds: Vec<u64>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            sizes,
            seeds,
            algorithms,
            params: ParamOverrides::default(),
            per_algorithm: BTreeMap::new(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            stop_rule: StopRuleKind::RelativeError,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(BenchError::usage("benchmark needs at least one size"));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::usage("benchmark needs at least one seed"));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::usage("benchmark needs at least one algorithm"));
        }
        for &n in &self.sizes {
            BasisPursuitSpec::new(n, 0)
                .validate()
                .map_err(|e| BenchError::usage(format!("size {n}: {e}")))?;
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(BenchError::usage(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    fn params_for(&self, alg: Algorithm) -> ParamOverrides {
        self.per_algorithm
            .get(&alg)
            .copied()
            .unwrap_or_default()
            .over(self.params)
    }
}

fn run_cell(plan: &BenchPlan, n: usize, seed: u64, alg: Algorithm, problem: &Problem) -> SummaryRow {
    let mut row = SummaryRow {
        n,
        seed,
        algorithm: alg,
        rho: f64::NAN,
        iters: 0,
        time_s: 0.0,
        status: "error".into(),
    };
    let rho = match problem.spectral_radius() {
        Ok(est) => est.value,
        Err(_) => return row,
    };
    row.rho = rho;
    let cfg = solver_config(
        alg,
        rho,
        &plan.params_for(alg),
        plan.stop_rule.with_tol(plan.tol),
        plan.max_iter,
    );
    if let Ok(report) = solve(alg, problem, &cfg, problem.zero_iterate()) {
        row.iters = report.iterations;
        row.time_s = report.wall_time_s;
        row.status = report.status.as_str().into();
    }
    row
}

/// Runs every cell on up to `jobs` worker threads. Rows come back sorted
/// by `(n, seed, algorithm)` whatever the scheduling.
pub fn run_benchmark(plan: &BenchPlan, jobs: usize) -> Result<Vec<SummaryRow>> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::usage(format!("cannot start worker pool: {e}")))?;
    let instances: Vec<(usize, u64)> = plan
        .sizes
        .iter()
        .flat_map(|&n| plan.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let mut rows = pool.install(|| {
        let problems: Vec<(usize, u64, Result<Problem>)> = instances
            .par_iter()
            .map(|&(n, seed)| {
                (
                    n,
                    seed,
                    generate_basis_pursuit(&BasisPursuitSpec::new(n, seed)).map_err(Into::into),
                )
            })
            .collect();
        let cells: Vec<(usize, u64, Algorithm, &Result<Problem>)> = problems
            .iter()
            .flat_map(|(n, seed, p)| plan.algorithms.iter().map(move |&a| (*n, *seed, a, p)))
            .collect();
        cells
            .par_iter()
            .map(|&(n, seed, alg, p)| match p {
                Ok(problem) => run_cell(plan, n, seed, alg, problem),
                Err(_) => SummaryRow {
                    n,
                    seed,
                    algorithm: alg,
                    rho: f64::NAN,
                    iters: 0,
                    time_s: 0.0,
                    status: "error".into(),
                },
            })
            .collect::<Vec<_>>()
    });
    rows.sort_by_key(|r| (r.n, r.seed, r.algorithm));
    Ok(rows)
}

/// Writes `summary.csv` and `median.csv` into `out_dir`.
pub fn write_benchmark(rows: &[SummaryRow], out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let summary = out_dir.join("summary.csv");
    let median = out_dir.join("median.csv");
    std::fs::write(&summary, summary_csv(rows)).map_err(|e| BenchError::io(&summary, e))?;
    std::fs::write(&median, median_csv(&medians(rows))).map_err(|e| BenchError::io(&median, e))?;
    Ok((summary, median))
}
