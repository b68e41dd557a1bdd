//! Dense linear algebra for tracing: SVD tangents, the Newton corrector, and the
//! step-size and chord-error formulas that certify a single tracing step.

mod svd;

pub use svd::{svd, Svd};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::poly::CurveSystem;

/// Condition number above which the augmented corrector matrix is treated as singular.
pub const CONDITION_CUTOFF: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix must be (n-1) x n with n >= 2, got {rows} x {cols}")]
    Shape { rows: usize, cols: usize },
    #[error("rho must be at least {min}, got {rho}")]
    RhoOutOfRange { rho: f64, min: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("augmented Jacobian is near-singular (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("Newton iterates left the trust ball (distance {distance:e} > {radius:e})")]
    Diverged { distance: f64, radius: f64 },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Smallest singular value of `J_F(q)` and the right singular vector spanning its kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFrame {
    pub sigma_min: f64,
    pub tangent: Vec<f64>,
}

/// Tangent operator: last right-singular vector of an `(n-1) x n` Jacobian.
///
/// The sign of the tangent is arbitrary; callers orient it.
pub fn tangent_frame(jac: &DMatrix<f64>) -> Result<TangentFrame, NumericError> {
    let (rows, cols) = jac.shape();
    if cols < 2 || rows + 1 != cols {
        return Err(NumericError::Shape { rows, cols });
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite);
    }
    let d = svd(jac);
    let sigma_min = d.singular_values[cols - 2];
    let tangent: Vec<f64> = d.v.column(cols - 1).iter().copied().collect();
    let norm = tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(TangentFrame { sigma_min, tangent: tangent.iter().map(|v| v / norm).collect() })
}

/// Output of a successful corrector run.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton corrector on the augmented square system `[F; t(J)^T (q - q_i)] = 0`.
///
/// Each iteration rebuilds the tangent row from the Jacobian at the current iterate, so
/// updates stay orthogonal to the running tangent. Converges when both the residual
/// `||F||_inf` and the update length are at most `tol`. A point that already satisfies
/// the residual test is returned unchanged with zero iterations.
pub fn newton_correct(
    sys: &CurveSystem,
    q0: &[f64],
    tangent: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Correction, CorrectorError> {
    let n = sys.nvars();
    let mut q = q0.to_vec();
    let mut residual = sys.residual_inf(&q);
    if residual <= tol {
        return Ok(Correction { point: q, residual, iterations: 0 });
    }
    let mut orient = tangent.to_vec();
    let mut radius: Option<f64> = None;
    for it in 1..=max_iter {
        let f = sys.eval(&q);
        let jac = sys.jacobian(&q);
        let frame = tangent_frame(&jac)?;
        let mut t = frame.tangent;
        if dot(&t, &orient) < 0.0 {
            t.iter_mut().for_each(|v| *v = -*v);
        }
        let aug = DMatrix::from_fn(n, n, |i, j| if i + 1 < n { jac[(i, j)] } else { t[j] });
        let rhs = DVector::from_fn(n, |i, _| if i + 1 < n { -f[i] } else { 0.0 });
        let d = svd(&aug);
        let condition = d.condition();
        if !(condition <= CONDITION_CUTOFF) {
            return Err(CorrectorError::IllConditioned { condition });
        }
        let delta = d.solve(&rhs);
        for (qi, di) in q.iter_mut().zip(delta.iter()) {
            *qi += di;
        }
        let step = delta.norm();
        let r = *radius.get_or_insert(10.0 * step.max(tol));
        let moved = distance(&q, q0);
        if moved > r {
            return Err(CorrectorError::Diverged { distance: moved, radius: r });
        }
        residual = sys.residual_inf(&q);
        if !residual.is_finite() {
            return Err(CorrectorError::Numeric(NumericError::NonFinite));
        }
        if residual <= tol && step <= tol {
            return Ok(Correction { point: q, residual, iterations: it });
        }
        orient = t;
    }
    Err(CorrectorError::MaxIterations { iterations: max_iter, residual })
}

/// Jump-criterion factor `omega(rho) = sqrt(2(2rho-1)(2rho - 2sqrt(rho(rho-1)) - 1))`.
///
/// Evaluated in the algebraically equivalent form
/// `sqrt(2rho(2rho-1)) / (rho + sqrt(rho(rho-1)))`, which avoids the cancellation of
/// the literal expression for large `rho`.
pub fn omega(rho: f64) -> Result<f64, NumericError> {
    if !(rho >= 1.0) {
        return Err(NumericError::RhoOutOfRange { rho, min: 1.0 });
    }
    let root = (rho * (rho - 1.0)).sqrt();
    Ok((2.0 * rho * (2.0 * rho - 1.0)).sqrt() / (rho + root))
}

/// `mu = sqrt(n(n-1))`, the Lipschitz constant of the Jacobian map in the unit frame.
pub fn mu(n: usize) -> f64 {
    ((n * (n - 1)) as f64).sqrt()
}

/// Certified step length `sigma / (2 mu rho)`.
pub fn robust_step(sigma: f64, n: usize, rho: f64) -> f64 {
    debug_assert!(sigma >= 0.0 && n >= 2 && rho >= 1.6);
    sigma / (2.0 * mu(n) * rho)
}

/// True when the corrected point stays within `omega(rho) * s` of the previous one,
/// i.e. the step did not jump to a different component.
pub fn jump_check(z0: &[f64], z1: &[f64], s: f64, rho: f64) -> bool {
    let w = omega(rho).expect("rho >= 1.6");
    distance(z0, z1) < w * s
}

/// Hausdorff bound between a traced chord and the true curve arc:
/// `tan(2 acos(1/omega)) * omega / (4 mu rho) * (mu tau + sigma) + tau`.
pub fn chord_error_bound(sigma_tilde: f64, n: usize, rho_star: f64, tau: f64) -> f64 {
    assert!(rho_star >= 1.6, "rho_star must be at least 1.6");
    let w = omega(rho_star).expect("rho >= 1.6");
    assert!(w >= 1.0, "omega below 1");
    let m = mu(n);
    let theta = (1.0 / w).acos();
    (2.0 * theta).tan() * w / (4.0 * m * rho_star) * (m * tau + sigma_tilde) + tau
}

#[cfg(test)]
mod tests {
    use super::*;

    fn literal_omega(rho: f64) -> f64 {
        (2.0 * (2.0 * rho - 1.0) * (2.0 * rho - 2.0 * (rho * (rho - 1.0)).sqrt() - 1.0)).sqrt()
    }

    #[test]
    fn tangent_axis_aligned() {
        let f = tangent_frame(&DMatrix::from_row_slice(1, 2, &[2.0, 0.0])).unwrap();
        assert!((f.sigma_min - 2.0).abs() < 1e-15);
        assert!((f.tangent[1].abs() - 1.0).abs() < 1e-15 && f.tangent[0].abs() < 1e-15);
    }

    #[test]
    fn tangent_rank_deficient() {
        let f = tangent_frame(&DMatrix::from_row_slice(1, 2, &[0.0, 0.0])).unwrap();
        assert_eq!(f.sigma_min, 0.0);
        assert!((norm(&f.tangent) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_three_dim() {
        let f = tangent_frame(&DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0])).unwrap();
        assert!((f.sigma_min - 1.0).abs() < 1e-15);
        assert!((f.tangent[2].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tangent_rejects_bad_input() {
        assert!(matches!(tangent_frame(&DMatrix::zeros(2, 2)), Err(NumericError::Shape { .. })));
        assert_eq!(
            tangent_frame(&DMatrix::from_row_slice(1, 2, &[f64::NAN, 1.0])),
            Err(NumericError::NonFinite)
        );
    }

    #[test]
    fn omega_values() {
        let w = omega(1.6).unwrap();
        assert!((w - literal_omega(1.6)).abs() < 1e-12);
        assert!((w - 1.0285).abs() < 5e-5);
        let far = omega(1e6).unwrap();
        assert!(far > 1.0 && far < 1.00001);
        assert!(omega(1.6).unwrap() > omega(2.0).unwrap() && omega(2.0).unwrap() > omega(3.0).unwrap());
        assert!(omega(0.5).is_err());
    }

    #[test]
    fn robust_step_values() {
        assert!((robust_step(2.0, 2, 1.6) - 2.0 / (2.0 * 2f64.sqrt() * 1.6)).abs() < 1e-15);
        assert!((robust_step(2.0, 2, 1.6) - 0.4419).abs() < 1e-4);
        assert_eq!(robust_step(0.0, 2, 1.6), 0.0);
        assert!((robust_step(1.0, 3, 1.6) - 0.1276).abs() < 1e-4);
    }

    #[test]
    fn jump_check_examples() {
        let z0 = [0.0, 0.0];
        assert!(jump_check(&z0, &z0, 0.1, 1.6));
        assert!(!jump_check(&z0, &[0.11, 0.0], 0.1, 1.6));
        assert!(jump_check(&z0, &[0.09, 0.0], 0.1, 1.6));
    }

    #[test]
    fn chord_bound_values() {
        assert_eq!(chord_error_bound(0.0, 2, 1.6, 0.0), 0.0);
        let b = chord_error_bound(0.1, 2, 1.6, 1e-10);
        assert!((b - 0.082 * 0.1 / 2f64.sqrt()).abs() < 2e-5, "{b}");
    }
}
