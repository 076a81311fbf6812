use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{Iterate, MultiBlockProblem};

/// Largest `n + m` for which [`HMetric::assemble`] builds `H` densely.
pub const ASSEMBLY_LIMIT: usize = 60;

/// Sign of the off-diagonal blocks of `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// `[[β I, −Aᵀ], [−A, M]]`: dual step first, then primal.
    DualPrimal,
    /// `[[β I, Aᵀ], [A, M]]`: primal step first, then dual (balanced ALM).
    PrimalDual,
}

impl Coupling {
    fn sign(self) -> f64 {
        match self {
            Coupling::DualPrimal => -1.0,
            Coupling::PrimalDual => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct HBlock<'a> {
    a: &'a Matrix,
    beta: f64,
    offset: usize,
}

/// The metric `H` of a prediction-correction scheme, kept implicit.
///
/// `M = Σ (1/β_i) A_i A_iᵀ + δ I` sits in the dual block and `β_i I` on the
/// primal diagonal. Quadratic forms use
/// `wᵀHw = Σ ‖β_i^{-1/2} A_iᵀλ ± β_i^{1/2} x_i‖² + δ‖λ‖²`, so `H` is never
/// stored unless [`HMetric::assemble`] is asked for it.
#[derive(Clone, Debug)]
pub struct HMetric<'a> {
    blocks: Vec<HBlock<'a>>,
    delta: f64,
    coupling: Coupling,
    n: usize,
    m: usize,
}

impl<'a> HMetric<'a> {
    fn build(blocks: Vec<(&'a Matrix, f64)>, delta: f64, coupling: Coupling) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let m = blocks.first().map_or(0, |(a, _)| a.rows());
        let mut offset = 0;
        let mut out = Vec::with_capacity(blocks.len());
        for (a, beta) in blocks {
            check_len("H block rows", m, a.rows())?;
            if !(beta > 0.0) {
                return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
            }
            out.push(HBlock { a, beta, offset });
            offset += a.cols();
        }
        Ok(Self {
            blocks: out,
            delta,
            coupling,
            n: offset,
            m,
        })
    }

    /// Metric of the dual-primal balanced ALM.
    pub fn single(a: &'a Matrix, beta: f64, delta: f64) -> Result<Self> {
        Self::build(vec![(a, beta)], delta, Coupling::DualPrimal)
    }

    /// Metric of the (primal-dual) balanced ALM.
    pub fn balanced(a: &'a Matrix, beta: f64, delta: f64) -> Result<Self> {
        Self::build(vec![(a, beta)], delta, Coupling::PrimalDual)
    }

    /// Block metric of the generalized dual-primal scheme.
    pub fn multi(problem: &'a MultiBlockProblem, delta: f64) -> Result<Self> {
        let blocks = problem.blocks().iter().map(|b| (&b.a, b.beta)).collect();
        Self::build(blocks, delta, Coupling::DualPrimal)
    }

    pub fn from_blocks(blocks: Vec<(&'a Matrix, f64)>, delta: f64, coupling: Coupling) -> Result<Self> {
        Self::build(blocks, delta, coupling)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// `wᵀ H w` via the sum-of-squares identity.
    pub fn quadratic(&self, w: &Iterate) -> Result<f64> {
        w.check_dims(self.n, self.m)?;
        let sign = self.coupling.sign();
        let mut total = 0.0;
        for blk in &self.blocks {
            let atl = blk.a.tr_mul_vec(&w.lambda)?;
            let x = &w.x[blk.offset..blk.offset + blk.a.cols()];
            let (inv_sqrt, sqrt) = (1.0 / blk.beta.sqrt(), blk.beta.sqrt());
            total += atl
                .iter()
                .zip(x)
                .map(|(t, xi)| {
                    let v = inv_sqrt * t + sign * sqrt * xi;
                    v * v
                })
                .sum::<f64>();
        }
        Ok(total + self.delta * dot(&w.lambda, &w.lambda))
    }

    /// `‖u − v‖²_H`.
    pub fn dist_sq(&self, u: &Iterate, v: &Iterate) -> Result<f64> {
        u.check_dims(self.n, self.m)?;
        v.check_dims(self.n, self.m)?;
        self.quadratic(&u.sub(v))
    }

    /// `‖u − v‖_H`.
    pub fn dist(&self, u: &Iterate, v: &Iterate) -> Result<f64> {
        Ok(self.dist_sq(u, v)?.max(0.0).sqrt())
    }

    /// Matrix-free product `H w`.
    pub fn apply(&self, w: &Iterate) -> Result<Iterate> {
        w.check_dims(self.n, self.m)?;
        let sign = self.coupling.sign();
        let mut x_out = vec![0.0; self.n];
        let mut l_out: Vec<f64> = w.lambda.iter().map(|l| self.delta * l).collect();
        for blk in &self.blocks {
            let range = blk.offset..blk.offset + blk.a.cols();
            let x = &w.x[range.clone()];
            let atl = blk.a.tr_mul_vec(&w.lambda)?;
            for ((o, xi), t) in x_out[range].iter_mut().zip(x).zip(&atl) {
                *o = blk.beta * xi + sign * t;
            }
            let ax = blk.a.mul_vec(x)?;
            let aatl = blk.a.mul_vec(&atl)?;
            let inv = 1.0 / blk.beta;
            for ((o, axi), ai) in l_out.iter_mut().zip(&ax).zip(&aatl) {
                *o += sign * axi + inv * ai;
            }
        }
        Ok(Iterate::new(x_out, l_out))
    }

    /// `uᵀ H v`.
    pub fn bilinear(&self, u: &Iterate, v: &Iterate) -> Result<f64> {
        Ok(u.dot(&self.apply(v)?))
    }

    /// Dense `H`, ordered `(x_1, …, x_p, λ)`. Refused above
    /// [`ASSEMBLY_LIMIT`].
    pub fn assemble(&self) -> Result<Matrix> {
        let dim = self.n + self.m;
        if dim > ASSEMBLY_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "refusing to assemble H of dimension {dim} (limit {ASSEMBLY_LIMIT})"
            )));
        }
        let sign = self.coupling.sign();
        let mut h = Matrix::zeros(dim, dim);
        for i in 0..self.m {
            h[(self.n + i, self.n + i)] = self.delta;
        }
        for blk in &self.blocks {
            for j in 0..blk.a.cols() {
                h[(blk.offset + j, blk.offset + j)] = blk.beta;
            }
            for i in 0..self.m {
                for j in 0..blk.a.cols() {
                    let v = sign * blk.a[(i, j)];
                    h[(self.n + i, blk.offset + j)] = v;
                    h[(blk.offset + j, self.n + i)] = v;
                }
                for k in 0..self.m {
                    h[(self.n + i, self.n + k)] += dot(blk.a.row(i), blk.a.row(k)) / blk.beta;
                }
            }
        }
        Ok(h)
    }
}

/// `wᵀ H w`.
pub fn h_quadratic(metric: &HMetric<'_>, w: &Iterate) -> Result<f64> {
    metric.quadratic(w)
}

/// `‖u − v‖²_H`.
pub fn h_dist_sq(metric: &HMetric<'_>, u: &Iterate, v: &Iterate) -> Result<f64> {
    metric.dist_sq(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CholFactor, Rng};

    fn stacked(w: &Iterate) -> Vec<f64> {
        w.x.iter().chain(&w.lambda).copied().collect()
    }

    #[test]
    fn zero_and_x_only_cases() {
        let a = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let h = HMetric::single(&a, 10.0, 0.5).unwrap();
        assert_eq!(h.quadratic(&Iterate::zeros(3, 2)).unwrap(), 0.0);
        let w = Iterate::new(vec![0.6, 0.0, 0.8], vec![0.0; 2]);
        assert!((h.quadratic(&w).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_hand_case() {
        let a = Matrix::identity(1);
        let h = HMetric::single(&a, 1.0, 1.0).unwrap();
        let w = Iterate::new(vec![1.0], vec![1.0]);
        assert_eq!(h.quadratic(&w).unwrap(), 1.0);
        let dense = h.assemble().unwrap();
        assert_eq!(dense, Matrix::from_rows(&[[1.0, -1.0], [-1.0, 2.0]]).unwrap());
        assert_eq!(dense.quadratic_form(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn distance_is_symmetric_and_shift_invariant() {
        let mut rng = Rng::new(8);
        let a = Matrix::new(4, 6, rng.gauss_sample(24)).unwrap();
        let h = HMetric::single(&a, 3.0, 0.1).unwrap();
        let draw = |rng: &mut Rng| Iterate::new(rng.gauss_sample(6), rng.gauss_sample(4));
        for _ in 0..20 {
            let (u, v, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            assert_eq!(h.dist_sq(&u, &u).unwrap(), 0.0);
            let d = h.dist_sq(&u, &v).unwrap();
            assert!((d - h.dist_sq(&v, &u).unwrap()).abs() <= 1e-12 * (1.0 + d));
            let shifted = h.dist_sq(&u.add(&c), &v.add(&c)).unwrap();
            assert!((d - shifted).abs() <= 1e-12 * (1.0 + d));
        }
    }

    #[test]
    fn implicit_matches_assembled_for_every_coupling() {
        let mut rng = Rng::new(21);
        for trial in 0..30 {
            let m = 1 + rng.below(8);
            let n1 = 1 + rng.below(10);
            let n2 = 1 + rng.below(10);
            let a1 = Matrix::new(m, n1, rng.gauss_sample(m * n1)).unwrap();
            let a2 = Matrix::new(m, n2, rng.gauss_sample(m * n2)).unwrap();
            let (b1, b2) = (rng.uniform_in(0.1, 5.0), rng.uniform_in(0.1, 5.0));
            let delta = rng.uniform_in(1e-3, 1.0);
            let metrics = [
                HMetric::single(&a1, b1, delta).unwrap(),
                HMetric::balanced(&a1, b1, delta).unwrap(),
                HMetric::from_blocks(vec![(&a1, b1), (&a2, b2)], delta, Coupling::DualPrimal).unwrap(),
            ];
            for h in &metrics {
                let dense = h.assemble().unwrap();
                assert!(CholFactor::factor(&dense).is_ok(), "trial {trial}");
                let w = Iterate::new(rng.gauss_sample(h.n()), rng.gauss_sample(h.m()));
                let implicit = h.quadratic(&w).unwrap();
                let explicit = dense.quadratic_form(&stacked(&w)).unwrap();
                assert!((implicit - explicit).abs() <= 1e-10 * explicit.abs().max(1.0));
                let hw = h.apply(&w).unwrap();
                let dense_hw = dense.mul_vec(&stacked(&w)).unwrap();
                for (p, q) in stacked(&hw).iter().zip(&dense_hw) {
                    assert!((p - q).abs() <= 1e-10 * (1.0 + q.abs()));
                }
            }
        }
    }

    #[test]
    fn positive_on_random_nonzero_vectors() {
        let mut rng = Rng::new(1000);
        for _ in 0..1000 {
            let m = 1 + rng.below(5);
            let n = 1 + rng.below(7);
            let a = Matrix::new(m, n, rng.gauss_sample(m * n)).unwrap();
            let beta = 10f64.powf(rng.uniform_in(-3.0, 3.0));
            let delta = 10f64.powf(rng.uniform_in(-6.0, 1.0));
            let h = HMetric::single(&a, beta, delta).unwrap();
            let w = Iterate::new(rng.gauss_sample(n), rng.gauss_sample(m));
            assert!(h.quadratic(&w).unwrap() > 0.0);
        }
    }

    #[test]
    fn assembly_limit_is_enforced() {
        let a = Matrix::zeros(30, 31);
        let h = HMetric::single(&a, 1.0, 1.0).unwrap();
        assert!(h.assemble().is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Matrix::zeros(2, 3);
        let h = HMetric::single(&a, 1.0, 1.0).unwrap();
        assert!(matches!(
            h.quadratic(&Iterate::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
