//! Brute-force oracle for tiny inequality LPs `min cᵀx s.t. Ax ≥ b, x ≥ 0`.
//!
//! Every vertex is the solution of n active constraints picked from the
//! rows of `[A; I]`. Each candidate system is solved by Gaussian
//! elimination with partial pivoting, kept when feasible, and the cheapest
//! vertex wins. Instances whose optimum is not isolated by a clear cost gap
//! are rejected so that the comparison has a unique answer.

#![allow(dead_code)]

use balm::linalg::{Matrix, Rng};

pub const FEAS_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-10;
/// Cheapest and second-cheapest distinct vertices must differ by this much.
pub const GAP: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct TinyLp {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Solves a square system in place; `None` if a pivot is (nearly) zero.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < PIVOT_TOL * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            let pivot_row = m[col].clone();
            for (dst, src) in m[i][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            rhs[i] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (rhs[i] - tail) / m[i][i];
    }
    Some(x)
}

fn subsets(total: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            rec(i + 1, total, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, total, k, &mut Vec::new(), &mut out);
    out
}

/// All feasible vertices of `{x ≥ 0, Ax ≥ b}`, deduplicated.
pub fn vertices(lp: &TinyLp) -> Vec<Vec<f64>> {
    let (m, n) = (lp.a.rows(), lp.a.cols());
    let row = |i: usize| -> (Vec<f64>, f64) {
        if i < m {
            (lp.a.row(i).to_vec(), lp.b[i])
        } else {
            let mut e = vec![0.0; n];
            e[i - m] = 1.0;
            (e, 0.0)
        }
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    for set in subsets(m + n, n) {
        let (rows, rhs): (Vec<_>, Vec<_>) = set.iter().map(|&i| row(i)).unzip();
        let Some(x) = gauss_solve(rows, rhs) else { continue };
        let feasible = x.iter().all(|&v| v >= -FEAS_TOL)
            && (0..m).all(|i| {
                let ax: f64 = lp.a.row(i).iter().zip(&x).map(|(a, v)| a * v).sum();
                ax >= lp.b[i] - FEAS_TOL
            });
        let fresh = found
            .iter()
            .all(|v| v.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) > 1e-9);
        if feasible && fresh {
            found.push(x);
        }
    }
    found
}

/// The unique optimal vertex, or `None` when the optimum is not separated
/// from the next-best vertex by [`GAP`] (or nothing is feasible).
pub fn vertex_oracle(lp: &TinyLp) -> Option<Vec<f64>> {
    let cost = |x: &[f64]| x.iter().zip(&lp.c).map(|(v, c)| v * c).sum::<f64>();
    let mut vs = vertices(lp);
    vs.sort_by(|p, q| cost(p).total_cmp(&cost(q)));
    match vs.as_slice() {
        [] => None,
        [only] => Some(only.clone()),
        [best, next, ..] => (cost(next) - cost(best) >= GAP).then(|| best.clone()),
    }
}

/// Positive data keeps the LP feasible (scale x up) and bounded (`c > 0`).
pub fn random_lp(rng: &mut Rng, m: usize, n: usize) -> TinyLp {
    let a = Matrix::from_fn(m, n, |_, _| rng.uniform_in(0.2, 2.0));
    let b = (0..m).map(|_| rng.uniform_in(0.5, 2.0)).collect();
    let c = (0..n).map(|_| rng.uniform_in(0.5, 2.0)).collect();
    TinyLp { a, b, c }
}

/// Draws LPs until one has a gap-separated optimum.
pub fn random_lp_with_oracle(rng: &mut Rng, m: usize, n: usize) -> (TinyLp, Vec<f64>) {
    loop {
        let lp = random_lp(rng, m, n);
        if let Some(x) = vertex_oracle(&lp) {
            return (lp, x);
        }
    }
}

pub fn cols(a: &Matrix, range: std::ops::Range<usize>) -> Matrix {
    Matrix::from_fn(a.rows(), range.len(), |i, j| a.row(i)[range.start + j])
}
