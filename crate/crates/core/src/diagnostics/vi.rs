use crate::error::{check_len, Result};
use crate::linalg::{dot, sub, Rng};
use crate::model::{ConstraintSense, Iterate, MultiBlockProblem, Problem};

/// Either kind of problem, seen as the variational inequality
/// `w̄ ∈ Ω, θ(x) − θ(x̄) + (w − w̄)ᵀF(w̄) ≥ 0 ∀ w ∈ Ω`.
#[derive(Clone, Copy, Debug)]
pub enum SaddleProblem<'a> {
    Single(&'a Problem),
    Multi(&'a MultiBlockProblem),
}

impl<'a> From<&'a Problem> for SaddleProblem<'a> {
    fn from(p: &'a Problem) -> Self {
        SaddleProblem::Single(p)
    }
}

impl<'a> From<&'a MultiBlockProblem> for SaddleProblem<'a> {
    fn from(p: &'a MultiBlockProblem) -> Self {
        SaddleProblem::Multi(p)
    }
}

impl SaddleProblem<'_> {
    pub fn n(&self) -> usize {
        match self {
            SaddleProblem::Single(p) => p.n(),
            SaddleProblem::Multi(p) => p.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            SaddleProblem::Single(p) => p.m(),
            SaddleProblem::Multi(p) => p.m(),
        }
    }

    pub fn sense(&self) -> ConstraintSense {
        match self {
            SaddleProblem::Single(_) => ConstraintSense::Equality,
            SaddleProblem::Multi(p) => p.sense(),
        }
    }

    pub fn b(&self) -> &[f64] {
        match self {
            SaddleProblem::Single(p) => p.b(),
            SaddleProblem::Multi(p) => p.b(),
        }
    }

    /// `θ(x)`, `+∞` outside `X`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        match self {
            SaddleProblem::Single(p) if x.len() == p.n() => p.prox().objective_value(x),
            SaddleProblem::Single(_) => f64::INFINITY,
            SaddleProblem::Multi(p) => p.objective_value(x),
        }
    }

    /// `Σ A_i x_i`.
    pub fn constraint_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            SaddleProblem::Single(p) => p.a().mul_vec(x),
            SaddleProblem::Multi(p) => p.constraint_value(x),
        }
    }

    /// `(A_iᵀ λ)_i`, stacked.
    pub fn adjoint(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        match self {
            SaddleProblem::Single(p) => p.a().tr_mul_vec(lambda),
            SaddleProblem::Multi(p) => {
                let mut out = Vec::with_capacity(p.n());
                for blk in p.blocks() {
                    out.extend(blk.a.tr_mul_vec(lambda)?);
                }
                Ok(out)
            }
        }
    }

    /// Euclidean projection of a stacked `x` onto `X`.
    pub fn project_x(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SaddleProblem::Single(p) => p.prox().project(x),
            SaddleProblem::Multi(p) => {
                let mut out = Vec::with_capacity(x.len());
                for (i, blk) in p.blocks().iter().enumerate() {
                    out.extend(blk.prox.project(&x[p.block_range(i)]));
                }
                out
            }
        }
    }

    /// Projection onto `Ω = X × Λ`.
    pub fn project(&self, w: &Iterate) -> Iterate {
        let lambda = match self.sense() {
            ConstraintSense::Equality => w.lambda.clone(),
            ConstraintSense::Inequality => w.lambda.iter().map(|l| l.max(0.0)).collect(),
        };
        Iterate::new(self.project_x(&w.x), lambda)
    }

    /// A random point of `Ω`: `center + scale·ξ` with Gaussian `ξ`, projected.
    pub fn sample_omega(&self, center: &Iterate, scale: f64, rng: &mut Rng) -> Iterate {
        let x: Vec<f64> = center.x.iter().map(|c| c + scale * rng.normal()).collect();
        let lambda: Vec<f64> = center.lambda.iter().map(|c| c + scale * rng.normal()).collect();
        self.project(&Iterate::new(x, lambda))
    }
}

/// `F(w) = (−Aᵀλ, Ax − b)`; block form `((−A_iᵀλ)_i, Σ A_i x_i − b)`.
pub fn vi_operator<'a>(problem: impl Into<SaddleProblem<'a>>, w: &Iterate) -> Result<Iterate> {
    let p = problem.into();
    w.check_dims(p.n(), p.m())?;
    let x_part: Vec<f64> = p.adjoint(&w.lambda)?.into_iter().map(|v| -v).collect();
    let l_part = sub(&p.constraint_value(&w.x)?, p.b());
    Ok(Iterate::new(x_part, l_part))
}

/// `L(x, λ) = θ(x) − λᵀ(Σ A_i x_i − b)`; `+∞` for `x ∉ X`.
pub fn lagrangian_value<'a>(problem: impl Into<SaddleProblem<'a>>, w: &Iterate) -> Result<f64> {
    let p = problem.into();
    w.check_dims(p.n(), p.m())?;
    let theta = p.objective(&w.x);
    if !theta.is_finite() {
        return Ok(f64::INFINITY);
    }
    let r = sub(&p.constraint_value(&w.x)?, p.b());
    check_len("lagrangian multiplier", r.len(), w.lambda.len())?;
    Ok(theta - dot(&w.lambda, &r))
}
