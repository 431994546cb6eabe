//! Continuous algebraic Riccati equation via Kleinman–Newton iteration.
//!
//! The iteration needs a stabilizing starting gain; it is taken from the
//! shifted-Lyapunov construction: for `σ` above the spectral radius of `A`,
//! `(A + σI) Z + Z (A + σI)ᵀ = 2 B R⁻¹ Bᵀ` has a positive definite solution
//! and `K₀ = R⁻¹ Bᵀ Z⁻¹` places every closed-loop eigenvalue left of `−σ`.

use nalgebra::{Cholesky, DMatrix, DVector, SMatrix};
use thiserror::Error;

/// Maximum Newton steps before giving up.
pub const MAX_ITERATIONS: usize = 200;
/// Convergence: `‖residual‖∞ ≤ RESIDUAL_TOL · ‖Q‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CareError {
    #[error("Riccati iteration did not reach a stabilizing solution within {iterations} steps (residual {residual:e})")]
    RiccatiDiverged { iterations: usize, residual: f64 },
    #[error("weight matrix R is not positive definite")]
    InvalidWeights,
    #[error("pair (A, B) is not controllable enough to build a stabilizing initial gain")]
    NotStabilizable,
}

#[derive(Debug, Clone)]
pub struct CareSolution<const N: usize, const M: usize> {
    pub p: SMatrix<f64, N, N>,
    pub k: SMatrix<f64, M, N>,
    pub iterations: usize,
    pub residual: f64,
}

/// Maximum absolute row sum.
pub fn inf_norm<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `AᵀP + PA − P B R⁻¹ Bᵀ P + Q`.
pub fn riccati_residual<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    p: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    let r_inv = r.try_inverse().unwrap_or_else(SMatrix::zeros);
    a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q
}

/// Solves `Fᵀ X + X F + W = 0` by vectorization. Returns `None` when the
/// operator is singular (F has eigenvalues `λᵢ + λⱼ = 0`).
pub fn solve_lyapunov<const N: usize>(
    f: &SMatrix<f64, N, N>,
    w: &SMatrix<f64, N, N>,
) -> Option<SMatrix<f64, N, N>> {
    // vec(Fᵀ X) = (I ⊗ Fᵀ) vec X,  vec(X F) = (Fᵀ ⊗ I) vec X  (column-major).
    let n = N;
    let mut op = DMatrix::<f64>::zeros(n * n, n * n);
    for col in 0..n {
        for row in 0..n {
            let eq = col * n + row;
            for k in 0..n {
                op[(eq, col * n + k)] += f[(k, row)];
                op[(eq, k * n + row)] += f[(k, col)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, w.iter().map(|v| -v));
    let x = op.lu().solve(&rhs)?;
    let x = SMatrix::<f64, N, N>::from_iterator(x.iter().copied());
    Some((x + x.transpose()) * 0.5)
}

fn stabilizing_gain<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    r_inv: &SMatrix<f64, M, M>,
) -> Result<SMatrix<f64, M, N>, CareError> {
    // Frobenius norm bounds the spectral radius.
    let shift = a.norm() + 1.0;
    let shifted = a + SMatrix::<f64, N, N>::identity() * shift;
    let w = b * r_inv * b.transpose() * 2.0;
    // −shifted is Hurwitz, so (−shiftedᵀ)ᵀ Z + Z (−shiftedᵀ) + W = 0 is well posed.
    let z = solve_lyapunov(&(-shifted.transpose()), &w).ok_or(CareError::NotStabilizable)?;
    let chol = Cholesky::new(z).ok_or(CareError::NotStabilizable)?;
    Ok(r_inv * b.transpose() * chol.inverse())
}

/// Largest real part among the eigenvalues of `m`.
pub fn spectral_abscissa<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let dynamic = DMatrix::from_column_slice(N, N, m.as_slice());
    dynamic.complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Stabilizing solution of `AᵀP + PA − P B R⁻¹ Bᵀ P + Q = 0` and the
/// optimal gain `K = R⁻¹ Bᵀ P`.
pub fn solve_care<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    q: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
) -> Result<CareSolution<N, M>, CareError> {
    let r_inv = Cholesky::new(*r).ok_or(CareError::InvalidWeights)?.inverse();
    let tol = RESIDUAL_TOL * inf_norm(q).max(f64::MIN_POSITIVE);
    let mut k = stabilizing_gain(a, b, &r_inv)?;
    let mut residual = f64::INFINITY;

    for iteration in 1..=MAX_ITERATIONS {
        let closed = a - b * k;
        let w = q + k.transpose() * r * k;
        let Some(p) = solve_lyapunov(&closed, &w) else {
            break;
        };
        k = r_inv * b.transpose() * p;
        residual = inf_norm(&riccati_residual(a, b, q, r, &p));
        if residual <= tol {
            if spectral_abscissa(&(a - b * k)) < 0.0 {
                return Ok(CareSolution { p, k, iterations: iteration, residual });
            }
            break;
        }
    }
    Err(CareError::RiccatiDiverged { iterations: MAX_ITERATIONS, residual })
}
