//! Continuous algebraic Riccati equation for a single vehicle,
//! `P A + Aᵀ P − P B Bᵀ P + ε I = 0`, solved by Newton–Kleinman iteration.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::{Error, Result};

const MAX_ITERATIONS: usize = 60;

/// Solves `Aᵀ X + X A + Q = 0` through the 9×9 Kronecker system.
pub fn solve_lyapunov(a: &Matrix3<f64>, q: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let at = a.transpose();
    let eye = Matrix3::<f64>::identity();
    let op: SMatrix<f64, 9, 9> = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = SVector::<f64, 9>::from_column_slice((-q).as_slice());
    let x = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("Lyapunov operator is singular".into()))?;
    Ok(Matrix3::from_column_slice(x.as_slice()))
}

/// Frobenius norm of the Riccati residual.
pub fn care_residual(a: &Matrix3<f64>, b: &Vector3<f64>, epsilon: f64, p: &Matrix3<f64>) -> f64 {
    let pb = p * b;
    (p * a + a.transpose() * p - pb * pb.transpose() + Matrix3::identity() * epsilon).norm()
}

/// Stabilising solution of the Riccati equation for the vehicle model.
///
/// The iteration starts from the gain `(1, 2τ, 0)` with `τ = −1/A₃₃`, which
/// lies strictly inside the stability region of the lag model. Other `(A, B)`
/// pairs need [`solve_care_from`] with a stabilising gain of their own.
pub fn solve_care(a: &Matrix3<f64>, b: &Vector3<f64>, epsilon: f64) -> Result<Matrix3<f64>> {
    let tau = -1.0 / a[(2, 2)];
    solve_care_from(a, b, epsilon, &Vector3::new(1.0, 2.0 * tau, 0.0))
}

/// Newton–Kleinman from an explicit stabilising gain `k0` (control `u = −k0ᵀx`).
pub fn solve_care_from(
    a: &Matrix3<f64>,
    b: &Vector3<f64>,
    epsilon: f64,
    k0: &Vector3<f64>,
) -> Result<Matrix3<f64>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Riccati weight must be positive, got {epsilon}"
        )));
    }
    if !is_hurwitz3(&(a - b * k0.transpose())) {
        return Err(Error::NotStabilizing);
    }

    let mut k = *k0;
    let mut p = Matrix3::zeros();
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let closed = a - b * k.transpose();
        let weight = Matrix3::identity() * epsilon + k * k.transpose();
        let next = solve_lyapunov(&closed, &weight)?;
        let next = (next + next.transpose()) * 0.5;
        let step = (next - p).norm();
        p = next;
        k = p * b;
        residual = care_residual(a, b, epsilon, &p);
        if step <= 1e-14 * (1.0 + p.norm()) || residual <= 1e-13 * (1.0 + p.norm()) {
            break;
        }
    }
    if !(residual <= 1e-10 * (1.0 + p.norm())) {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        });
    }
    Ok(p)
}

pub(crate) fn is_hurwitz3(m: &Matrix3<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}
