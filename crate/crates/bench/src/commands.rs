use std::io::Write;
use std::path::{Path, PathBuf};

use balm::instances::{generate_basis_pursuit, read_instance, write_instance, BasisPursuitSpec};
use balm::{solve, Algorithm, SolveStatus};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::bench::{run_benchmark, write_benchmark, BenchPlan};
use crate::certify::{run_certify, CertifyPlan};
use crate::config::{
    parse_algorithms, parse_list, resolve, solver_config, ConfigFile, ParamOverrides, StopRuleKind, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::csv::history_csv;
use crate::error::{BenchError, Result, EXIT_CHECK_FAILED, EXIT_ITERATION_LIMIT, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "balm-bench",
    version,
    about = "Basis-pursuit benchmarks and certification for balanced ALM solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a basis-pursuit instance file and print its checksum.
    Generate(GenerateArgs),
    /// Run one solver on an instance file (or a freshly generated one).
    Solve(SolveArgs),
    /// Run the size x seed x algorithm matrix and write summary tables.
    Bench(BenchArgs),
    /// Run the numerical certification suites.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Rows; defaults to n/2.
    #[arg(long)]
    pub m: Option<usize>,
    /// Nonzeros of x*; defaults to n/10.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    /// Penalty of the balanced schemes and the linearized ALM.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Regularization in M = (1/beta) A A^T + delta I.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Correction step in (0, 2).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Proximal weight of the linearized ALM, primal step of the primal-dual method.
    #[arg(long)]
    pub r: Option<f64>,
    /// Dual step parameter `s` of the primal-dual method.
    #[arg(long = "s-step")]
    pub s_step: Option<f64>,
    /// Stop tolerance; defaults to 1e-7.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// `ree` (relative error against x*) or `fp` (fixed-point residual).
    #[arg(long = "stop-rule")]
    pub stop_rule: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file; when absent an instance is generated from --n/--seed.
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub algo: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// History CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sizes, e.g. `100,500` or `100..102`.
    #[arg(long)]
    pub n: Option<String>,
    /// Seeds, e.g. `0..10`.
    #[arg(long)]
    pub seed: Option<String>,
    /// Algorithms, comma-separated, or `all`.
    #[arg(long)]
    pub algo: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory for summary.csv and median.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to 1.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Flat `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Flat `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "corrupt-alpha", hide = true)]
    pub corrupt_alpha: Option<f64>,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn spec_from(
    n: Option<usize>,
    m: Option<usize>,
    s: Option<usize>,
    seed: Option<u64>,
    cfg: &ConfigFile,
) -> Result<BasisPursuitSpec> {
    let n = resolve(n, cfg, "n")?.ok_or_else(|| BenchError::usage("--n is required"))?;
    let mut spec = BasisPursuitSpec::new(n, resolve(seed, cfg, "seed")?.unwrap_or(0));
    if let Some(m) = resolve(m, cfg, "m")? {
        spec.m = m;
    }
    if let Some(s) = resolve(s, cfg, "s")? {
        spec.s = s;
    }
    spec.validate().map_err(|e| BenchError::usage(e.to_string()))?;
    Ok(spec)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

/// Flags, then `<algo>.<param>` config keys, then plain config keys.
fn layered_params(args: &SolverArgs, cfg: &ConfigFile, alg: Algorithm) -> Result<ParamOverrides> {
    let flags = ParamOverrides {
        beta: args.beta,
        delta: args.delta,
        alpha: args.alpha,
        r: args.r,
        s_step: args.s_step,
    };
    let global = ParamOverrides {
        beta: cfg.get("beta")?,
        delta: cfg.get("delta")?,
        alpha: cfg.get("alpha")?,
        r: cfg.get("r")?,
        s_step: cfg.get("s-step")?,
    };
    Ok(flags.over(ParamOverrides::from_config(cfg, alg)?.over(global)))
}

fn stop_settings(args: &SolverArgs, cfg: &ConfigFile) -> Result<(StopRuleKind, f64, usize)> {
    let rule = match resolve(args.stop_rule.clone(), cfg, "stop-rule")? {
        Some(s) => s.parse::<StopRuleKind>().map_err(BenchError::usage)?,
        None => StopRuleKind::default(),
    };
    let tol = resolve(args.tol, cfg, "tol")?.unwrap_or(DEFAULT_TOL);
    let max_iter = resolve(args.max_iter, cfg, "max-iter")?.unwrap_or(DEFAULT_MAX_ITER);
    Ok((rule, tol, max_iter))
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let spec = spec_from(args.n, args.m, args.s, args.seed, &cfg)?;
    let path = resolve(args.out.clone(), &cfg, "out")?.ok_or_else(|| BenchError::usage("--out is required"))?;
    let problem = generate_basis_pursuit(&spec)?;
    let text = write_instance(&spec, &problem)?;
    write_file(&path, &text)?;
    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    let _ = writeln!(out, "sha256 {digest}  {}", path.display());
    Ok(EXIT_OK)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let problem = match &args.instance {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
            read_instance(&text)
                .map_err(|e| BenchError::usage(format!("{}: {e}", path.display())))?
                .1
        }
        None => generate_basis_pursuit(&spec_from(args.n, args.m, args.s, args.seed, &cfg)?)?,
    };
    let alg: Algorithm = match resolve(args.algo.clone(), &cfg, "algo")? {
        Some(a) => a.parse().map_err(|e: balm::Error| BenchError::usage(e.to_string()))?,
        None => Algorithm::DpBalm,
    };
    let (rule, tol, max_iter) = stop_settings(&args.solver, &cfg)?;
    let params = layered_params(&args.solver, &cfg, alg)?;
    let rho = problem.spectral_radius()?.value;
    let sc = solver_config(alg, rho, &params, rule.with_tol(tol), max_iter);
    let report = solve(alg, &problem, &sc, problem.zero_iterate())?;
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if report.status == SolveStatus::InvalidConfig {
        let _ = writeln!(
            err,
            "error: {}",
            report.message.as_deref().unwrap_or("invalid configuration")
        );
        return Ok(EXIT_USAGE);
    }
    if let Some(path) = resolve(args.out.clone(), &cfg, "out")? {
        write_file(&path, &history_csv(&report))?;
    }
    let last = report.last();
    let ree = last
        .and_then(|r| r.rel_err)
        .map_or_else(|| "none".to_string(), |v| format!("{v:.6e}"));
    let fp = last.map_or(f64::NAN, |r| r.fp_res_h);
    let _ = writeln!(
        out,
        "{} {} {} {:.6} {} {:.6e}",
        alg,
        problem.n(),
        report.iterations,
        report.wall_time_s,
        ree,
        fp
    );
    Ok(if report.converged() {
        EXIT_OK
    } else {
        EXIT_ITERATION_LIMIT
    })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let sizes = match resolve(args.n.clone(), &cfg, "n")? {
        Some(s) => parse_list::<usize>(&s)?,
        None => vec![100, 200, 300, 500, 1000],
    };
    let seeds = match resolve(args.seed.clone(), &cfg, "seed")? {
        Some(s) => parse_list::<u64>(&s)?,
        None => (0..10).collect(),
    };
    let algorithms = match resolve(args.algo.clone(), &cfg, "algo")? {
        Some(s) => parse_algorithms(&s)?,
        None => Algorithm::ALL.to_vec(),
    };
    let (rule, tol, max_iter) = stop_settings(&args.solver, &cfg)?;
    let mut plan = BenchPlan::new(sizes, seeds, algorithms);
    for &alg in &plan.algorithms {
        let params = layered_params(&args.solver, &cfg, alg)?;
        plan.per_algorithm.insert(alg, params);
    }
    plan.tol = tol;
    plan.max_iter = max_iter;
    plan.stop_rule = rule;
    let jobs = resolve(args.jobs, &cfg, "jobs")?.unwrap_or(1);
    let dir = resolve(args.out.clone(), &cfg, "out")?.unwrap_or_else(|| PathBuf::from("bench-out"));

    let rows = run_benchmark(&plan, jobs)?;
    let (summary, median) = write_benchmark(&rows, &dir)?;
    for m in crate::csv::medians(&rows) {
        let _ = writeln!(
            out,
            "n={:<5} {:<8} seeds={:<3} median_iters={:<8} median_time_s={:.4}",
            m.n, m.algorithm, m.seeds, m.median_iters, m.median_time_s
        );
    }
    let _ = writeln!(out, "wrote {} and {}", summary.display(), median.display());
    Ok(EXIT_OK)
}

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let sizes = match resolve(args.n.clone(), &cfg, "n")? {
        Some(s) => parse_list::<usize>(&s)?,
        None => vec![50],
    };
    let seeds = match resolve(args.seed.clone(), &cfg, "seed")? {
        Some(s) => parse_list::<u64>(&s)?,
        None => vec![0, 1, 2],
    };
    let mut plan = CertifyPlan::new(sizes, seeds);
    plan.alpha = resolve(args.alpha, &cfg, "alpha")?.unwrap_or(1.0);
    plan.corrupt_alpha = args.corrupt_alpha;
    let outcome = run_certify(&plan)?;
    for line in &outcome.lines {
        let _ = writeln!(out, "{line}");
    }
    for w in &outcome.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if outcome.contraction_runs == 0 {
        let _ = writeln!(err, "error: no contraction check could run");
    }
    Ok(if outcome.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Certify(a) => cmd_certify(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
