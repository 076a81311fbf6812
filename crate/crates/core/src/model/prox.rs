use std::fmt::Debug;
use std::sync::Mutex;

use crate::error::{check_len, Error, Result};
use crate::linalg::{CholFactor, Matrix};

/// Proximal oracle for `θ` restricted to a closed convex domain `X`.
///
/// `evaluate(p, w)` returns `argmin_{x ∈ X} θ(x) + (w/2)‖x − p‖²`. The
/// objective and the domain always travel together: every subproblem the
/// solvers pose has exactly this shape.
pub trait ProxOracle: Debug + Send + Sync {
    /// Fixed dimension, if the oracle carries one (e.g. a quadratic form).
    fn dim(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, point: &[f64], weight: f64) -> Result<Vec<f64>>;

    /// `θ(x)`, or `+∞` outside the domain.
    fn objective_value(&self, x: &[f64]) -> f64;

    fn in_domain(&self, x: &[f64]) -> bool;

    /// Euclidean projection onto the domain.
    fn project(&self, point: &[f64]) -> Vec<f64>;
}

fn check_weight(weight: f64) -> Result<()> {
    if weight > 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "prox weight must be positive and finite, got {weight}"
        )))
    }
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    // sign(v) * max(|v| - t, 0); keeps the exact zero when |v| <= t
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `θ = ‖·‖₁` on `ℝⁿ`; the prox is soft thresholding at `1/w`.
#[derive(Clone, Copy, Debug, Default)]
pub struct L1Prox;

impl ProxOracle for L1Prox {
    fn evaluate(&self, point: &[f64], weight: f64) -> Result<Vec<f64>> {
        check_weight(weight)?;
        let t = 1.0 / weight;
        Ok(point.iter().map(|&p| shrink(p, t)).collect())
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| v.is_finite()) {
            x.iter().map(|v| v.abs()).sum()
        } else {
            f64::INFINITY
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    fn project(&self, point: &[f64]) -> Vec<f64> {
        point.to_vec()
    }
}

/// Linear objective `cᵀx` on the nonnegative orthant. With `c = 1` this is
/// `‖·‖₁` restricted to `ℝⁿ₊`.
#[derive(Clone, Debug)]
pub struct LinearNonnegProx {
    // `None` means the all-ones cost of any length
    cost: Option<Vec<f64>>,
}

impl LinearNonnegProx {
    fn cost_at(&self, i: usize) -> f64 {
        self.cost.as_ref().map_or(1.0, |c| c[i])
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match &self.cost {
            Some(c) => check_len("linear prox", c.len(), len),
            None => Ok(()),
        }
    }
}

impl ProxOracle for LinearNonnegProx {
    fn dim(&self) -> Option<usize> {
        self.cost.as_ref().map(Vec::len)
    }

    fn evaluate(&self, point: &[f64], weight: f64) -> Result<Vec<f64>> {
        check_weight(weight)?;
        self.check_dim(point.len())?;
        let inv = 1.0 / weight;
        Ok(point
            .iter()
            .enumerate()
            .map(|(i, &p)| (p - self.cost_at(i) * inv).max(0.0))
            .collect())
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        if self.check_dim(x.len()).is_err() || !self.in_domain(x) {
            return f64::INFINITY;
        }
        x.iter().enumerate().map(|(i, v)| self.cost_at(i) * v).sum()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= 0.0 && v.is_finite())
    }

    fn project(&self, point: &[f64]) -> Vec<f64> {
        point.iter().map(|v| v.max(0.0)).collect()
    }
}

/// `θ(x) = ½ xᵀQx + cᵀx` on `ℝⁿ` with `Q` symmetric positive semidefinite.
#[derive(Debug)]
pub struct QuadraticProx {
    q: Matrix,
    c: Vec<f64>,
    // solvers call with one weight over and over
    cache: Mutex<Option<(f64, CholFactor)>>,
}

impl QuadraticProx {
    fn factor_for(&self, weight: f64) -> Result<CholFactor> {
        let mut guard = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((w, f)) = guard.as_ref() {
            if *w == weight {
                return Ok(f.clone());
            }
        }
        let mut shifted = self.q.clone();
        for i in 0..shifted.rows() {
            shifted[(i, i)] += weight;
        }
        let f = CholFactor::factor(&shifted)?;
        *guard = Some((weight, f.clone()));
        Ok(f)
    }
}

impl ProxOracle for QuadraticProx {
    fn dim(&self) -> Option<usize> {
        Some(self.c.len())
    }

    fn evaluate(&self, point: &[f64], weight: f64) -> Result<Vec<f64>> {
        check_weight(weight)?;
        check_len("quadratic prox", self.c.len(), point.len())?;
        let rhs: Vec<f64> = point.iter().zip(&self.c).map(|(p, c)| weight * p - c).collect();
        self.factor_for(weight)?.solve(&rhs)
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        if x.len() != self.c.len() || !self.in_domain(x) {
            return f64::INFINITY;
        }
        let qx = self.q.quadratic_form(x).unwrap_or(f64::INFINITY);
        0.5 * qx + crate::linalg::dot(&self.c, x)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    fn project(&self, point: &[f64]) -> Vec<f64> {
        point.to_vec()
    }
}

/// Shrinkage oracle for `‖·‖₁` on `ℝⁿ`.
pub fn make_l1_prox() -> L1Prox {
    L1Prox
}

/// `‖·‖₁` on `ℝⁿ₊`: `evaluate(p, w)_i = max(p_i − 1/w, 0)`.
pub fn make_nonneg_l1_prox() -> LinearNonnegProx {
    LinearNonnegProx { cost: None }
}

/// `cᵀx` on `ℝⁿ₊`.
pub fn make_linear_nonneg_prox(cost: Vec<f64>) -> Result<LinearNonnegProx> {
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite linear cost".into()));
    }
    Ok(LinearNonnegProx { cost: Some(cost) })
}

/// `½ xᵀQx + cᵀx`; evaluate solves `(Q + wI) x = w p − c`.
pub fn make_quadratic_prox(q: Matrix, c: Vec<f64>) -> Result<QuadraticProx> {
    check_len("quadratic prox rows", c.len(), q.rows())?;
    check_len("quadratic prox cols", c.len(), q.cols())?;
    if !q.is_finite() {
        return Err(Error::InvalidArgument("non-finite entries in Q".into()));
    }
    let n = q.rows();
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (q[(i, j)], q[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::InvalidArgument(format!("Q is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(QuadraticProx {
        q,
        c,
        cache: Mutex::new(None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm, sub, Rng};

    /// Dense grid search for `argmin_x f(x) + (w/2)(x − p)²` on `[lo, hi]`,
    /// refined once around the best coarse node.
    fn grid_argmin(f: impl Fn(f64) -> f64, p: f64, w: f64, lo: f64, hi: f64) -> f64 {
        let obj = |x: f64| f(x) + 0.5 * w * (x - p).powi(2);
        let mut best = lo;
        let mut span = (lo, hi);
        for _ in 0..2 {
            let steps = 200_000;
            let h = (span.1 - span.0) / steps as f64;
            for k in 0..=steps {
                let x = span.0 + h * k as f64;
                if obj(x) < obj(best) {
                    best = x;
                }
            }
            span = ((best - 2.0 * h).max(lo), (best + 2.0 * h).min(hi));
        }
        best
    }

    #[test]
    fn l1_hand_cases() {
        let p = make_l1_prox();
        assert_eq!(p.evaluate(&[0.0, 0.0, 0.0], 1.0).unwrap(), vec![0.0; 3]);
        let x = p.evaluate(&[3.0], 1.0).unwrap();
        let oracle = grid_argmin(f64::abs, 3.0, 1.0, -5.0, 5.0);
        assert!((oracle - 2.0).abs() < 1e-6);
        assert_eq!(x, vec![2.0]);
        let x = p.evaluate(&[0.5, -0.2], 2.0).unwrap();
        for (xi, pi) in x.iter().zip([0.5, -0.2]) {
            let oracle = grid_argmin(f64::abs, pi, 2.0, -5.0, 5.0);
            assert!(oracle.abs() < 1e-6);
            assert_eq!(*xi, 0.0);
        }
    }

    #[test]
    fn nonneg_hand_cases() {
        let p = make_nonneg_l1_prox();
        assert_eq!(p.evaluate(&[-5.0], 1.0).unwrap(), vec![0.0]);
        let f = |x: f64| x;
        assert!((grid_argmin(f, 3.0, 1.0, 0.0, 10.0) - 2.0).abs() < 1e-6);
        assert_eq!(p.evaluate(&[3.0], 1.0).unwrap(), vec![2.0]);
        assert!(grid_argmin(f, 0.2, 1.0, 0.0, 10.0).abs() < 1e-6);
        assert_eq!(p.evaluate(&[0.2], 1.0).unwrap(), vec![0.0]);
        assert!(p.objective_value(&[-1.0]).is_infinite());
        assert!(!p.in_domain(&[-1e-300]));
    }

    #[test]
    fn quadratic_hand_cases() {
        let zero = make_quadratic_prox(Matrix::zeros(2, 2), vec![0.0; 2]).unwrap();
        let x = zero.evaluate(&[1.5, -2.0], 3.0).unwrap();
        assert!((x[0] - 1.5).abs() <= 4.0 * f64::EPSILON && (x[1] + 2.0).abs() <= 4.0 * f64::EPSILON);
        let id = make_quadratic_prox(Matrix::identity(1), vec![0.0]).unwrap();
        assert!((id.evaluate(&[2.0], 1.0).unwrap()[0] - 1.0).abs() <= 2.0 * f64::EPSILON);
        let shifted = make_quadratic_prox(Matrix::identity(1), vec![1.0]).unwrap();
        let first = shifted.evaluate(&[2.0], 1.0).unwrap();
        assert!((first[0] - 0.5).abs() <= 2.0 * f64::EPSILON);
        // second call hits the cached factor and must agree
        assert_eq!(shifted.evaluate(&[2.0], 1.0).unwrap(), first);
    }

    #[test]
    fn quadratic_rejects_bad_shapes() {
        assert!(make_quadratic_prox(Matrix::zeros(2, 2), vec![0.0]).is_err());
        let asym = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(make_quadratic_prox(asym, vec![0.0; 2]).is_err());
        let q = make_quadratic_prox(Matrix::identity(2), vec![0.0; 2]).unwrap();
        assert!(matches!(q.evaluate(&[1.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_positive_weight_is_invalid() {
        assert!(matches!(
            make_l1_prox().evaluate(&[1.0], 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_nonneg_l1_prox().evaluate(&[1.0], -1.0).is_err());
        assert!(make_l1_prox().evaluate(&[1.0], f64::NAN).is_err());
    }

    fn oracles(n: usize, rng: &mut Rng) -> Vec<Box<dyn ProxOracle>> {
        let g = Matrix::new(n, n, rng.gauss_sample(n * n)).unwrap();
        let q = g.transpose().matmul(&g).unwrap();
        vec![
            Box::new(make_l1_prox()),
            Box::new(make_nonneg_l1_prox()),
            Box::new(make_linear_nonneg_prox(rng.gauss_sample(n)).unwrap()),
            Box::new(make_quadratic_prox(q, rng.gauss_sample(n)).unwrap()),
        ]
    }

    #[test]
    fn firm_nonexpansiveness_and_domain() {
        let mut rng = Rng::new(99);
        for _ in 0..40 {
            let n = 1 + rng.below(8);
            for oracle in oracles(n, &mut rng) {
                let w = 10f64.powf(rng.uniform_in(-2.0, 2.0));
                let p = rng.gauss_sample(n);
                let q = rng.gauss_sample(n);
                let (xp, xq) = (oracle.evaluate(&p, w).unwrap(), oracle.evaluate(&q, w).unwrap());
                assert!(oracle.in_domain(&xp) && oracle.in_domain(&xq));
                let dx = sub(&xp, &xq);
                let dp = sub(&p, &q);
                assert!(norm(&dx) <= norm(&dp) + 1e-12, "{oracle:?}");
                assert!(dot(&dx, &dx) <= dot(&dp, &dx) + 1e-10, "{oracle:?}");
            }
        }
    }

    #[test]
    fn prox_optimality_against_feasible_points() {
        let mut rng = Rng::new(123);
        for _ in 0..40 {
            let n = 1 + rng.below(6);
            for oracle in oracles(n, &mut rng) {
                let w = 10f64.powf(rng.uniform_in(-1.0, 1.0));
                let p = rng.gauss_sample(n);
                let x = oracle.evaluate(&p, w).unwrap();
                let val = |z: &[f64]| oracle.objective_value(z) + 0.5 * w * norm(&sub(z, &p)).powi(2);
                let best = val(&x);
                for _ in 0..20 {
                    let z = oracle.project(&rng.gauss_sample(n));
                    assert!(val(&z) >= best - 1e-10, "{oracle:?}");
                }
            }
        }
    }
}
