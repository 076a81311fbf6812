//! Basis-pursuit instances `min ‖x‖₁ s.t. Ax = b`, a brute-force oracle
//! for tiny ones, numerically certified saddle points, and a plain-text
//! instance format.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::diagnostics::HMetric;
use crate::error::{Error, Result};
use crate::linalg::{factor_metric, norm, norm_l1, sub, CholFactor, Matrix, Rng};
use crate::model::{make_l1_prox, Iterate, Problem, SolverConfig, StopRule};
use crate::solver::{dp_balm_predict, solve_dp_balm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisPursuitSpec {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub seed: u64,
}

impl BasisPursuitSpec {
    /// `m = n/2`, `s = n/10`.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            m: n / 2,
            s: n / 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.n {
            return Err(Error::InvalidArgument(format!(
                "sparsity must satisfy 0 < s <= n, got s = {} with n = {}",
                self.s, self.n
            )));
        }
        if self.m == 0 || self.m >= self.n {
            return Err(Error::InvalidArgument(format!(
                "rows must satisfy 0 < m < n, got m = {} with n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Draws the support, then its `𝒩(0,1)` values, then `A` row by row, all
/// from one [`Rng`] seeded with `spec.seed`; `b = A x*`.
pub fn generate_basis_pursuit(spec: &BasisPursuitSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let support = rng.choose_indices(spec.n, spec.s);
    let values = rng.gauss_sample(spec.s);
    let mut x_star = vec![0.0; spec.n];
    for (&i, v) in support.iter().zip(values) {
        x_star[i] = v;
    }
    let a = Matrix::new(spec.m, spec.n, rng.gauss_sample(spec.m * spec.n))?;
    let b = a.mul_vec(&x_star)?;
    Problem::new(Arc::new(make_l1_prox()), a, b)?.with_known_solution(x_star)
}

/// Largest `n` accepted by [`tiny_bp_oracle`].
pub const ORACLE_MAX_N: usize = 12;

/// The `ℓ₁`-minimal solution of `Ax = b` by exhaustive support search.
///
/// Every support of size at most `m` is tried in lexicographic order; a
/// support counts when the least-squares fit restricted to it has residual
/// at most `1e-10 (1 + ‖b‖)`. Among those, the smallest `‖x‖₁` wins and
/// ties go to the lexicographically smallest support.
pub fn tiny_bp_oracle(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if n > ORACLE_MAX_N || m >= n {
        return Err(Error::InvalidArgument(format!(
            "oracle needs m < n <= {ORACLE_MAX_N}, got {m}x{n}"
        )));
    }
    crate::error::check_len("oracle right-hand side", m, b.len())?;
    let feas_tol = 1e-10 * (1.0 + norm(b));
    if norm(b) <= feas_tol {
        return Ok(vec![0.0; n]);
    }

    let mut supports: Vec<Vec<usize>> = (1u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize <= m)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    supports.sort();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in &supports {
        let Some(x) = restricted_lsq(a, b, support) else {
            continue;
        };
        if norm(&sub(&a.mul_vec(&x)?, b)) > feas_tol {
            continue;
        }
        let l1 = norm_l1(&x);
        let better = match &best {
            None => true,
            Some((v, _)) => l1 < v - 1e-12 * (1.0 + v),
        };
        if better {
            best = Some((l1, x));
        }
    }
    best.map(|(_, x)| x)
        .ok_or_else(|| Error::Infeasible("no support of size <= m fits Ax = b".into()))
}

/// Least squares on the columns in `support` via the normal equations;
/// `None` when those columns are numerically dependent.
fn restricted_lsq(a: &Matrix, b: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let gram = Matrix::from_fn(k, k, |i, j| {
        (0..a.rows()).map(|r| a[(r, support[i])] * a[(r, support[j])]).sum()
    });
    let rhs: Vec<f64> = support
        .iter()
        .map(|&c| (0..a.rows()).map(|r| a[(r, c)] * b[r]).sum())
        .collect();
    let chol = CholFactor::factor(&gram).ok()?;
    let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0f64, f64::max);
    let min_pivot = (0..k).map(|i| chol.entry(i, i).powi(2)).fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-12 * scale {
        return None;
    }
    let xs = chol.solve(&rhs).ok()?;
    let mut x = vec![0.0; a.cols()];
    for (&c, v) in support.iter().zip(xs) {
        x[c] = v;
    }
    Some(x)
}

pub const REFERENCE_TOL: f64 = 1e-13;
pub const REFERENCE_CAP: usize = 100_000;

/// A numerical saddle point `(x*, λ*)` from a long dual-primal run with
/// `β = 10, δ = 0.001, α = 1`, stopped on the `H`-norm fixed-point
/// residual and certified by recomputing that residual at the returned
/// point (must not exceed `10 · tol`).
pub fn reference_saddle(problem: &Problem, tol: f64, cap: usize) -> Result<Iterate> {
    let cfg = SolverConfig {
        beta: 10.0,
        delta: 1e-3,
        alpha: 1.0,
        stop_rule: StopRule::FixedPointResidual(tol),
        max_iter: cap,
        ..Default::default()
    };
    reference_saddle_with(problem, &cfg)
}

/// [`reference_saddle`] with explicit solver parameters; the stop rule must
/// be the fixed-point residual.
pub fn reference_saddle_with(problem: &Problem, cfg: &SolverConfig) -> Result<Iterate> {
    let StopRule::FixedPointResidual(tol) = cfg.stop_rule else {
        return Err(Error::InvalidArgument(
            "reference solve needs the fixed-point residual rule".into(),
        ));
    };
    let report = solve_dp_balm(problem, cfg, problem.zero_iterate())?;
    if let Some(msg) = &report.message {
        return Err(Error::InvalidArgument(msg.clone()));
    }
    let residual = report.last().map_or(f64::INFINITY, |r| r.fp_res_h);
    if !report.converged() {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual,
        });
    }
    let w = report.final_iterate;
    let factor = factor_metric(problem.a(), cfg.beta, cfg.delta)?;
    let pair = dp_balm_predict(problem, &w, cfg, &factor)?;
    let h = HMetric::single(problem.a(), cfg.beta, cfg.delta)?;
    let certified = h.dist(&pair.current, &pair.predictor)?;
    if !(certified <= 10.0 * tol) {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: certified,
        });
    }
    Ok(w)
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// Serializes an instance: `bp n m s seed`, the rows of `A`, then `x*`
/// (or `none`), then `b`, every number with 17 significant digits.
pub fn write_instance(spec: &BasisPursuitSpec, problem: &Problem) -> Result<String> {
    crate::error::check_len("instance columns", spec.n, problem.n())?;
    crate::error::check_len("instance rows", spec.m, problem.m())?;
    let mut out = format!("bp {} {} {} {}\n", spec.n, spec.m, spec.s, spec.seed);
    for i in 0..problem.m() {
        push_row(&mut out, problem.a().row(i));
    }
    match problem.known_solution() {
        Some(x) => push_row(&mut out, x),
        None => out.push_str("none\n"),
    }
    push_row(&mut out, problem.b());
    Ok(out)
}

fn parse_row(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad number '{tok}': {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {expected} values, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Inverse of [`write_instance`].
pub fn read_instance(text: &str) -> Result<(BasisPursuitSpec, Problem)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty instance file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "bp" {
        return Err(Error::Parse {
            line: hline,
            message: "header must read 'bp n m s seed'".into(),
        });
    }
    let num = |tok: &str| {
        tok.parse::<u64>().map_err(|e| Error::Parse {
            line: hline,
            message: format!("bad header field '{tok}': {e}"),
        })
    };
    let spec = BasisPursuitSpec {
        n: num(fields[1])? as usize,
        m: num(fields[2])? as usize,
        s: num(fields[3])? as usize,
        seed: num(fields[4])?,
    };
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of file while reading {what}"),
        })
    };
    let mut data = Vec::with_capacity(spec.m * spec.n);
    for _ in 0..spec.m {
        let (ln, l) = next("A")?;
        data.extend(parse_row(l, ln, spec.n)?);
    }
    let (ln, l) = next("x*")?;
    let x_star = if l == "none" {
        None
    } else {
        Some(parse_row(l, ln, spec.n)?)
    };
    let (ln, l) = next("b")?;
    let b = parse_row(l, ln, spec.m)?;
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            message: "trailing content after b".into(),
        });
    }
    let mut problem = Problem::new(Arc::new(make_l1_prox()), Matrix::new(spec.m, spec.n, data)?, b)?;
    if let Some(x) = x_star {
        problem = problem.with_known_solution(x)?;
    }
    Ok((spec, problem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;

    #[test]
    fn generation_is_deterministic_and_shaped() {
        let spec = BasisPursuitSpec::new(100, 7);
        let p = generate_basis_pursuit(&spec).unwrap();
        let q = generate_basis_pursuit(&spec).unwrap();
        assert_eq!(p.a(), q.a());
        assert_eq!(p.b(), q.b());
        assert_eq!(p.known_solution(), q.known_solution());
        assert_eq!((p.m(), p.n()), (50, 100));
        let xs = p.known_solution().unwrap();
        assert_eq!(xs.iter().filter(|v| **v != 0.0).count(), 10);
        let r = norm(&sub(&p.a().mul_vec(xs).unwrap(), p.b()));
        assert!(r <= 1e-12 * p.a().frobenius() * norm(xs));
        assert_ne!(
            generate_basis_pursuit(&BasisPursuitSpec::new(100, 8)).unwrap().b(),
            p.b()
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_basis_pursuit(&BasisPursuitSpec::new(0, 1)).is_err());
        assert!(generate_basis_pursuit(&BasisPursuitSpec::new(5, 1)).is_err());
        assert!(generate_basis_pursuit(&BasisPursuitSpec {
            n: 10,
            m: 10,
            s: 1,
            seed: 0
        })
        .is_err());
        assert!(generate_basis_pursuit(&BasisPursuitSpec {
            n: 10,
            m: 5,
            s: 11,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn oracle_hand_cases() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]).unwrap();
        assert_eq!(tiny_bp_oracle(&a, &[1.0, -1.0]).unwrap(), vec![1.0, -1.0, 0.0]);
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(tiny_bp_oracle(&a, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0, 0.0]);
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(tiny_bp_oracle(&a, &[1.0, 1.0]), Err(Error::Infeasible(_))));
        assert_eq!(tiny_bp_oracle(&a, &[0.0, 0.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn oracle_tie_breaks_lexicographically() {
        let a = Matrix::from_rows(&[[1.0, 1.0, 3.0]]).unwrap();
        assert_eq!(tiny_bp_oracle(&a, &[3.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        // x1 + x2 = 1: supports {0} and {1} tie at ‖x‖₁ = 1
        let a = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(tiny_bp_oracle(&a, &[1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn oracle_rejects_large_inputs() {
        assert!(tiny_bp_oracle(&Matrix::zeros(2, 13), &[0.0; 2]).is_err());
        assert!(tiny_bp_oracle(&Matrix::zeros(3, 3), &[0.0; 3]).is_err());
    }

    #[test]
    fn reference_saddle_on_oracle_example() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]).unwrap();
        let p = Problem::new(Arc::new(make_l1_prox()), a, vec![1.0, -1.0]).unwrap();
        let w = reference_saddle(&p, REFERENCE_TOL, REFERENCE_CAP).unwrap();
        let oracle = tiny_bp_oracle(p.a(), p.b()).unwrap();
        assert!(norm_inf(&sub(&w.x, &oracle)) <= 1e-6);
        assert!(norm(&sub(&p.a().mul_vec(&w.x).unwrap(), p.b())) <= 1e-9 * (1.0 + norm(p.b())));
        let atl = p.a().tr_mul_vec(&w.lambda).unwrap();
        for (g, x) in atl.iter().zip(&w.x) {
            assert!(g.abs() <= 1.0 + 1e-6);
            if x.abs() > 1e-9 {
                assert!((g - x.signum()).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn reference_saddle_reports_cap() {
        let p = generate_basis_pursuit(&BasisPursuitSpec::new(20, 1)).unwrap();
        assert!(matches!(
            reference_saddle(&p, 1e-13, 3),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let spec = BasisPursuitSpec::new(30, 11);
        let p = generate_basis_pursuit(&spec).unwrap();
        let text = write_instance(&spec, &p).unwrap();
        assert!(text.starts_with("bp 30 15 3 11\n"));
        let (spec2, q) = read_instance(&text).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(p.a(), q.a());
        assert_eq!(p.b(), q.b());
        assert_eq!(p.known_solution(), q.known_solution());
        assert_eq!(write_instance(&spec2, &q).unwrap(), text);
    }

    #[test]
    fn text_without_solution_and_errors() {
        let spec = BasisPursuitSpec {
            n: 3,
            m: 1,
            s: 1,
            seed: 0,
        };
        let p = Problem::new(
            Arc::new(make_l1_prox()),
            Matrix::from_rows(&[[1.0, -0.0, 2.5]]).unwrap(),
            vec![1.0],
        )
        .unwrap();
        let text = write_instance(&spec, &p).unwrap();
        assert!(text.contains("\nnone\n"));
        let (_, q) = read_instance(&text).unwrap();
        assert!(q.known_solution().is_none());
        assert!(q.a()[(0, 1)].is_sign_negative());

        assert!(matches!(read_instance(""), Err(Error::Parse { .. })));
        assert!(matches!(
            read_instance("bq 3 1 1 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let short = "bp 3 1 1 0\n1 2\nnone\n1\n";
        assert!(matches!(read_instance(short), Err(Error::Parse { line: 2, .. })));
        let extra = format!("{text}1\n");
        assert!(read_instance(&extra).is_err());
    }
}
