use std::ops::Range;
use std::sync::{Arc, OnceLock};

use super::prox::ProxOracle;
use crate::error::{check_len, Error, Result};
use crate::linalg::{
    norm, spectral_radius_gram, sub, Matrix, SpectralEstimate, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL,
};

/// `min θ(x) s.t. Ax = b, x ∈ X`, with `θ` and `X` carried by the prox oracle.
#[derive(Clone, Debug)]
pub struct Problem {
    prox: Arc<dyn ProxOracle>,
    a: Matrix,
    b: Vec<f64>,
    known_solution: Option<Vec<f64>>,
    spectral: OnceLock<std::result::Result<SpectralEstimate, Error>>,
}

impl Problem {
    pub fn new(prox: Arc<dyn ProxOracle>, a: Matrix, b: Vec<f64>) -> Result<Self> {
        check_len("rows(A) vs dim(b)", a.rows(), b.len())?;
        if let Some(d) = prox.dim() {
            check_len("cols(A) vs prox dimension", d, a.cols())?;
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite problem data".into()));
        }
        Ok(Self {
            prox,
            a,
            b,
            known_solution: None,
            spectral: OnceLock::new(),
        })
    }

    /// Attaches a reference solution used for relative-error tracking. It
    /// must satisfy `‖A x* − b‖ ≤ 1e−10 (1 + ‖b‖)`.
    pub fn with_known_solution(mut self, x: Vec<f64>) -> Result<Self> {
        check_len("known solution", self.a.cols(), x.len())?;
        let res = norm(&sub(&self.a.mul_vec(&x)?, &self.b));
        if res > 1e-10 * (1.0 + norm(&self.b)) {
            return Err(Error::InvalidArgument(format!(
                "known solution violates Ax = b (residual {res:e})"
            )));
        }
        self.known_solution = Some(x);
        Ok(self)
    }

    pub fn prox(&self) -> &dyn ProxOracle {
        self.prox.as_ref()
    }

    pub fn prox_arc(&self) -> Arc<dyn ProxOracle> {
        Arc::clone(&self.prox)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn known_solution(&self) -> Option<&[f64]> {
        self.known_solution.as_deref()
    }

    /// Number of primal variables.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// `ρ(AᵀA)` by power iteration, computed once and cached.
    pub fn spectral_radius(&self) -> Result<SpectralEstimate> {
        self.spectral
            .get_or_init(|| spectral_radius_gram(&self.a, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER))
            .clone()
    }

    pub fn zero_iterate(&self) -> Iterate {
        Iterate::zeros(self.n(), self.m())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSense {
    /// `Σ A_i x_i = b`, multipliers in `ℝᵐ`.
    Equality,
    /// `Σ A_i x_i ≥ b`, multipliers in `ℝᵐ₊`.
    Inequality,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub prox: Arc<dyn ProxOracle>,
    pub a: Matrix,
    pub beta: f64,
}

impl Block {
    pub fn new(prox: Arc<dyn ProxOracle>, a: Matrix, beta: f64) -> Self {
        Self { prox, a, beta }
    }
}

/// Separable `min Σ θ_i(x_i) s.t. Σ A_i x_i = b (or ≥ b), x_i ∈ X_i`.
#[derive(Clone, Debug)]
pub struct MultiBlockProblem {
    blocks: Vec<Block>,
    b: Vec<f64>,
    sense: ConstraintSense,
    offsets: Vec<usize>,
}

impl MultiBlockProblem {
    pub fn new(blocks: Vec<Block>, b: Vec<f64>, sense: ConstraintSense) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("at least one block is required".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for blk in &blocks {
            check_len("block rows vs dim(b)", b.len(), blk.a.rows())?;
            if let Some(d) = blk.prox.dim() {
                check_len("block cols vs prox dimension", d, blk.a.cols())?;
            }
            if !(blk.beta > 0.0) || !blk.beta.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "block beta must be positive, got {}",
                    blk.beta
                )));
            }
            if !blk.a.is_finite() {
                return Err(Error::InvalidArgument("non-finite block matrix".into()));
            }
            offsets.push(offsets.last().unwrap() + blk.a.cols());
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite right-hand side".into()));
        }
        Ok(Self {
            blocks,
            b,
            sense,
            offsets,
        })
    }

    /// The one-block equality view of `problem` with penalty `beta`.
    pub fn from_problem(problem: &Problem, beta: f64) -> Result<Self> {
        Self::new(
            vec![Block::new(problem.prox_arc(), problem.a().clone(), beta)],
            problem.b().to_vec(),
            ConstraintSense::Equality,
        )
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sense(&self) -> ConstraintSense {
        self.sense
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Total primal dimension `Σ n_i`.
    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Location of block `i` inside the stacked primal vector.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// `Σ A_i x_i` for a stacked `x`.
    pub fn constraint_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("stacked x", self.n(), x.len())?;
        // start from the first product so p = 1 matches `A x` bit for bit
        let mut out = self.blocks[0].a.mul_vec(&x[self.block_range(0)])?;
        for (i, blk) in self.blocks.iter().enumerate().skip(1) {
            let ax = blk.a.mul_vec(&x[self.block_range(i)])?;
            for (o, v) in out.iter_mut().zip(ax) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// `Σ θ_i(x_i)`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        if x.len() != self.n() {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, blk)| blk.prox.objective_value(&x[self.block_range(i)]))
            .sum()
    }

    pub fn zero_iterate(&self) -> Iterate {
        Iterate::zeros(self.n(), self.m())
    }
}

/// `w = (x, λ)`. Multi-block iterates stack the blocks in `x` in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Iterate {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self { x, lambda }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            lambda: vec![0.0; m],
        }
    }

    pub fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        check_len("iterate x", n, self.x.len())?;
        check_len("iterate lambda", m, self.lambda.len())
    }

    pub fn sub(&self, other: &Iterate) -> Iterate {
        Iterate {
            x: sub(&self.x, &other.x),
            lambda: sub(&self.lambda, &other.lambda),
        }
    }

    pub fn add(&self, other: &Iterate) -> Iterate {
        Iterate {
            x: crate::linalg::add(&self.x, &other.x),
            lambda: crate::linalg::add(&self.lambda, &other.lambda),
        }
    }

    pub fn dot(&self, other: &Iterate) -> f64 {
        crate::linalg::dot(&self.x, &other.x) + crate::linalg::dot(&self.lambda, &other.lambda)
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.lambda).all(|v| v.is_finite())
    }
}
