use super::matrix::{dot, Matrix};
use crate::error::{check_len, Error, Result};

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Clone, Debug)]
pub struct CholFactor {
    dim: usize,
    // row-major, full square storage; upper part stays zero
    l: Vec<f64>,
}

impl CholFactor {
    /// Unpivoted Cholesky–Banachiewicz factorization of a symmetric matrix.
    /// Only the lower triangle of `m` is read.
    pub fn factor(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::InvalidArgument(format!(
                "cholesky needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let dim = m.rows();
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let (ri, rj) = (&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
                let s = m[(i, j)] - dot(ri, rj);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { pivot: i, value: s });
                    }
                    l[i * dim + i] = s.sqrt();
                } else {
                    l[i * dim + j] = s / l[j * dim + j];
                }
            }
        }
        Ok(Self { dim, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.dim, self.dim, self.l.clone()).expect("square storage")
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim;
        Matrix::from_fn(n, n, |i, j| {
            let k = i.min(j) + 1;
            dot(&self.l[i * n..i * n + k], &self.l[j * n..j * n + k])
        })
    }

    /// Solves `L Lᵀ y = r` by forward then back substitution.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len("cholesky solve", self.dim, r.len())?;
        let n = self.dim;
        let mut y = r.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        Ok(y)
    }
}

/// Assembles `Σ (1/β_i) A_i A_iᵀ + δ I` densely.
///
/// Single- and multi-block solvers both go through here so the p = 1 case
/// produces the same bits.
pub(crate) fn assemble_metric(blocks: &[(&Matrix, f64)], delta: f64, m: usize) -> Result<Matrix> {
    let mut out = Matrix::zeros(m, m);
    for &(a, beta) in blocks {
        check_len("metric block rows", m, a.rows())?;
        let inv_beta = 1.0 / beta;
        for i in 0..m {
            let ri = a.row(i);
            for j in 0..=i {
                out[(i, j)] += inv_beta * dot(ri, a.row(j));
            }
        }
    }
    for i in 0..m {
        out[(i, i)] += delta;
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    Ok(out)
}

/// Factors `M = (1/β) A Aᵀ + δ I`.
pub fn factor_metric(a: &Matrix, beta: f64, delta: f64) -> Result<CholFactor> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(
            "constraint matrix has non-finite entries".into(),
        ));
    }
    let m = assemble_metric(&[(a, beta)], delta, a.rows())?;
    CholFactor::factor(&m)
}

/// Solves `M y = r` with a factor from [`factor_metric`].
pub fn metric_solve(factor: &CholFactor, r: &[f64]) -> Result<Vec<f64>> {
    factor.solve(r)
}
