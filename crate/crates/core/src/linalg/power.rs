use super::matrix::{norm, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of `AᵀA` by power iteration on `v ↦ Aᵀ(A v)`.
///
/// Starts from the normalized all-ones vector and stops when successive
/// Rayleigh quotients agree to `tol` relatively. If the all-ones vector lies
/// in the null space of `A`, the start falls back to the unit vector of the
/// column with the largest norm. Hitting `max_iter` returns the last
/// estimate with `converged = false`.
pub fn spectral_radius_gram(a: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if a.cols() == 0 || a.rows() == 0 || a.is_zero() {
        return Err(Error::InvalidArgument("spectral radius of a zero matrix".into()));
    }
    let n = a.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    if norm(&a.mul_vec(&v)?) == 0.0 {
        let best = (0..n)
            .max_by(|&i, &j| {
                let ci: f64 = (0..a.rows()).map(|r| a[(r, i)].powi(2)).sum();
                let cj: f64 = (0..a.rows()).map(|r| a[(r, j)].powi(2)).sum();
                ci.total_cmp(&cj)
            })
            .unwrap_or(0);
        v = vec![0.0; n];
        v[best] = 1.0;
    }

    let mut prev = f64::NAN;
    let mut value = 0.0;
    for it in 1..=max_iter {
        let av = a.mul_vec(&v)?;
        value = av.iter().map(|x| x * x).sum::<f64>();
        if (value - prev).abs() <= tol * value {
            return Ok(SpectralEstimate {
                value,
                iterations: it,
                converged: true,
            });
        }
        prev = value;
        let z = a.tr_mul_vec(&av)?;
        let nz = norm(&z);
        if nz == 0.0 {
            break;
        }
        v = z.into_iter().map(|x| x / nz).collect();
    }
    Ok(SpectralEstimate {
        value,
        iterations: max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;

    fn rho(a: &Matrix) -> f64 {
        let est = spectral_radius_gram(a, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!(est.converged);
        est.value
    }

    #[test]
    fn hand_cases() {
        assert!((rho(&Matrix::identity(3)) - 1.0).abs() < 1e-12);
        assert!((rho(&Matrix::from_diag(&[2.0, 1.0])) - 4.0).abs() < 1e-8);
        assert!((rho(&Matrix::from_rows(&[[0.0, 3.0]]).unwrap()) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn ones_in_null_space_falls_back() {
        let a = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert!((rho(&a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        assert!(spectral_radius_gram(&Matrix::zeros(2, 2), 1e-10, 10).is_err());
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let a = Matrix::from_diag(&[1.0, 0.999]);
        let est = spectral_radius_gram(&a, 1e-15, 3).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }

    #[test]
    fn rayleigh_lower_bound() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let a = Matrix::new(8, 13, rng.gauss_sample(8 * 13)).unwrap();
            let r = rho(&a);
            for _ in 0..10 {
                let v = rng.gauss_sample(13);
                let av = a.mul_vec(&v).unwrap();
                let q = norm(&av).powi(2) / norm(&v).powi(2);
                assert!(r >= q * (1.0 - 1e-6));
            }
        }
    }
}
