use std::sync::Arc;

use balm::diagnostics::{vi_operator, HMetric};
use balm::instances::{generate_basis_pursuit, read_instance, write_instance, BasisPursuitSpec};
use balm::linalg::{dot, factor_metric, metric_solve, norm, spectral_radius_gram, sub, CholFactor, Matrix, Rng};
use balm::multiblock::{build_metric, dual_subproblem, InnerParams};
use balm::solver::correct;
use balm::{
    make_l1_prox, make_linear_nonneg_prox, make_nonneg_l1_prox, make_quadratic_prox, solve, Algorithm, Block,
    ConstraintSense, Iterate, MultiBlockProblem, PredictionPair, Problem, ProxOracle, SolverConfig, StopRule,
};
use proptest::prelude::*;

fn gauss_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn oracles(rng: &mut Rng, n: usize) -> Vec<Arc<dyn ProxOracle>> {
    let l = gauss_matrix(rng, n, n);
    let q = l.transpose().matmul(&l).unwrap();
    vec![
        Arc::new(make_l1_prox()),
        Arc::new(make_nonneg_l1_prox()),
        Arc::new(make_linear_nonneg_prox(rng.gauss_sample(n)).unwrap()),
        Arc::new(make_quadratic_prox(q, rng.gauss_sample(n)).unwrap()),
    ]
}

fn log_uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.uniform_in(lo, hi))
}

fn random_iterate(rng: &mut Rng, n: usize, m: usize) -> Iterate {
    Iterate::new(rng.gauss_sample(n), rng.gauss_sample(m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_firmly_nonexpansive(seed in any::<u64>(), n in 1usize..8, logw in -2.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let w = 10f64.powf(logw);
        for prox in oracles(&mut rng, n) {
            let p = rng.gauss_sample(n);
            let q = rng.gauss_sample(n);
            let (fp, fq) = (prox.evaluate(&p, w).unwrap(), prox.evaluate(&q, w).unwrap());
            let d = sub(&fp, &fq);
            prop_assert!(dot(&d, &d) <= dot(&sub(&p, &q), &d) + 1e-10, "{prox:?}");
            prop_assert!(prox.in_domain(&fp));
        }
    }

    #[test]
    fn prox_output_beats_every_feasible_point(seed in any::<u64>(), n in 1usize..8, logw in -2.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let w = 10f64.powf(logw);
        for prox in oracles(&mut rng, n) {
            let p = rng.gauss_sample(n);
            let x = prox.evaluate(&p, w).unwrap();
            let value = |z: &[f64]| prox.objective_value(z) + 0.5 * w * dot(&sub(z, &p), &sub(z, &p));
            let best = value(&x);
            for _ in 0..20 {
                let z = prox.project(&rng.gauss_sample(n));
                prop_assert!(value(&z) >= best - 1e-10 * (1.0 + best.abs()), "{prox:?}");
            }
        }
    }

    #[test]
    fn metric_solve_round_trip(seed in any::<u64>(), m in 1usize..10, n in 1usize..12) {
        let mut rng = Rng::new(seed);
        let a = gauss_matrix(&mut rng, m, n);
        // keeps κ(M) below ~1e6; past that no backward-stable solve meets the bound
        let (beta, delta) = (log_uniform(&mut rng, -2.0, 2.0), log_uniform(&mut rng, -3.0, 1.0));
        let factor = factor_metric(&a, beta, delta).unwrap();
        let r = rng.gauss_sample(m);
        let y = metric_solve(&factor, &r).unwrap();
        // M y = (1/β) A (Aᵀ y) + δ y
        let at_y = a.tr_mul_vec(&y).unwrap();
        let my: Vec<f64> = a.mul_vec(&at_y).unwrap().iter().zip(&y).map(|(v, yi)| v / beta + delta * yi).collect();
        prop_assert!(norm(&sub(&my, &r)) <= 1e-9 * (1.0 + norm(&r)));
    }

    #[test]
    fn spectral_radius_bounds_every_rayleigh_quotient(seed in any::<u64>(), m in 1usize..10, n in 1usize..12) {
        let mut rng = Rng::new(seed);
        let a = gauss_matrix(&mut rng, m, n);
        let rho = spectral_radius_gram(&a, 1e-10, 10_000).unwrap().value;
        for _ in 0..10 {
            let v = rng.gauss_sample(n);
            let av = a.mul_vec(&v).unwrap();
            prop_assert!(dot(&av, &av) / dot(&v, &v) <= rho * (1.0 + 1e-6));
        }
    }

    #[test]
    fn cholesky_reconstructs_random_spd(seed in any::<u64>(), dim in 1usize..40) {
        let mut rng = Rng::new(seed);
        let l = gauss_matrix(&mut rng, dim, dim);
        let mut spd = l.transpose().matmul(&l).unwrap();
        spd = Matrix::from_fn(dim, dim, |i, j| spd.row(i)[j] + if i == j { 1e-3 } else { 0.0 });
        let f = CholFactor::factor(&spd).unwrap();
        let diff = Matrix::from_fn(dim, dim, |i, j| f.reconstruct().row(i)[j] - spd.row(i)[j]);
        prop_assert!(diff.frobenius() <= 1e-10 * spd.frobenius());
        prop_assert!((0..dim).all(|i| f.entry(i, i) > 0.0));
    }

    #[test]
    fn h_metric_is_positive_and_shift_invariant(seed in any::<u64>(), m in 1usize..8, n in 1usize..10) {
        let mut rng = Rng::new(seed);
        let a = gauss_matrix(&mut rng, m, n);
        let (beta, delta) = (log_uniform(&mut rng, -3.0, 3.0), log_uniform(&mut rng, -6.0, 1.0));
        for h in [HMetric::single(&a, beta, delta).unwrap(), HMetric::balanced(&a, beta, delta).unwrap()] {
            let (u, v, c) = (random_iterate(&mut rng, n, m), random_iterate(&mut rng, n, m), random_iterate(&mut rng, n, m));
            prop_assert!(h.quadratic(&u).unwrap() > 0.0);
            let base = h.dist_sq(&u, &v).unwrap();
            let shifted = h.dist_sq(&u.add(&c), &v.add(&c)).unwrap();
            prop_assert!((base - shifted).abs() <= 1e-12 * (1.0 + base.abs()) * 10.0);
            let full = h.assemble().unwrap();
            let mut flat = u.x.clone();
            flat.extend(&u.lambda);
            let explicit = full.quadratic_form(&flat).unwrap();
            let implicit = h.quadratic(&u).unwrap();
            prop_assert!((explicit - implicit).abs() <= 1e-10 * explicit.abs().max(1.0));
        }
    }

    #[test]
    fn vi_operator_is_skew(seed in any::<u64>(), m in 1usize..8, n in 1usize..10) {
        let mut rng = Rng::new(seed);
        let a = gauss_matrix(&mut rng, m, n);
        let problem = Problem::new(Arc::new(make_l1_prox()), a, rng.gauss_sample(m)).unwrap();
        let (u, v) = (random_iterate(&mut rng, n, m), random_iterate(&mut rng, n, m));
        let fu = vi_operator(&problem, &u).unwrap();
        let fv = vi_operator(&problem, &v).unwrap();
        let lhs = u.sub(&v).dot(&fu.sub(&fv));
        prop_assert!(lhs.abs() <= 1e-12 * (u.norm() + v.norm()).powi(2));
    }

    #[test]
    fn correction_is_an_affine_step(seed in any::<u64>(), alpha in 0.01f64..1.99) {
        let mut rng = Rng::new(seed);
        let pair = PredictionPair { current: random_iterate(&mut rng, 5, 3), predictor: random_iterate(&mut rng, 5, 3) };
        let next = correct(&pair, alpha).unwrap();
        let step = pair.predictor.sub(&pair.current);
        let expect = pair.current.add(&Iterate::new(
            step.x.iter().map(|v| alpha * v).collect(),
            step.lambda.iter().map(|v| alpha * v).collect(),
        ));
        prop_assert!(next.sub(&expect).norm() <= 1e-14 * (1.0 + expect.norm()));
    }

    #[test]
    fn inequality_dual_step_is_nonnegative(seed in any::<u64>(), m in 1usize..6, n in 1usize..6) {
        let mut rng = Rng::new(seed);
        let a = gauss_matrix(&mut rng, m, n);
        let block = Block::new(Arc::new(make_nonneg_l1_prox()), a, log_uniform(&mut rng, -1.0, 1.0));
        let problem = MultiBlockProblem::new(vec![block], rng.gauss_sample(m), ConstraintSense::Inequality).unwrap();
        let metric = build_metric(&problem, 0.1).unwrap();
        let lambda_k: Vec<f64> = rng.gauss_sample(m).iter().map(|v| v.abs()).collect();
        let dual = dual_subproblem(&metric, &lambda_k, &rng.gauss_sample(m), ConstraintSense::Inequality, InnerParams::default()).unwrap();
        prop_assert!(dual.lambda.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn instance_text_round_trip(seed in any::<u64>(), n in 10usize..40) {
        let spec = BasisPursuitSpec::new(n, seed);
        let problem = generate_basis_pursuit(&spec).unwrap();
        let text = write_instance(&spec, &problem).unwrap();
        let (spec2, back) = read_instance(&text).unwrap();
        prop_assert_eq!(spec, spec2);
        prop_assert_eq!(back.a().as_slice(), problem.a().as_slice());
        prop_assert_eq!(back.b(), problem.b());
        prop_assert_eq!(back.known_solution(), problem.known_solution());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_keep_their_shape(seed in 0u64..1000, alg in 0usize..4, max_iter in 1usize..60) {
        let problem = generate_basis_pursuit(&BasisPursuitSpec::new(30, seed)).unwrap();
        let rho = problem.spectral_radius().unwrap().value;
        let alg = Algorithm::ALL[alg];
        let cfg = SolverConfig { max_iter, ..alg.tuned_config(rho) };
        let report = solve(alg, &problem, &cfg, problem.zero_iterate()).unwrap();
        prop_assert_eq!(report.history.len(), report.iterations + 1);
        prop_assert!(report.wall_time_s >= 0.0);
        for (k, rec) in report.history.iter().enumerate() {
            prop_assert_eq!(rec.iter, k);
            prop_assert!(rec.primal_res.is_finite() && rec.primal_res >= 0.0);
            prop_assert!(rec.fp_res_h.is_finite() && rec.fp_res_h >= 0.0);
            prop_assert!(rec.rel_err.is_some_and(|r| r.is_finite() && r >= 0.0));
        }
    }

    #[test]
    fn inequality_multipliers_stay_nonnegative(seed in 0u64..1000, alpha in 0.1f64..1.0) {
        let mut rng = Rng::new(seed);
        let (m, n) = (3, 4);
        let a = Matrix::from_fn(m, n, |_, _| rng.uniform_in(0.2, 2.0));
        let cost = (0..n).map(|_| rng.uniform_in(0.5, 2.0)).collect();
        let block = Block::new(Arc::new(make_linear_nonneg_prox(cost).unwrap()), a, 1.0);
        let problem = MultiBlockProblem::new(vec![block], vec![1.0; m], ConstraintSense::Inequality).unwrap();
        let cfg = SolverConfig { alpha, delta: 0.1, max_iter: 200, stop_rule: StopRule::FixedPointResidual(1e-12), ..Default::default() };
        let mut ok = true;
        balm::solve_multiblock_observed(&problem, &cfg, problem.zero_iterate(), &mut |_, w, wb| {
            ok &= w.lambda.iter().chain(&wb.lambda).all(|&l| l >= 0.0);
        }).unwrap();
        prop_assert!(ok);
    }
}
