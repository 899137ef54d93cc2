//! Small dense helpers: conditioned inversion and the SO(3) maps needed to
//! differentiate rotation-vector coordinates.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Matrices with a 2-norm condition number above this are refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// 2-norm condition number from the singular values. Infinite for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !max.is_finite() || !min.is_finite() || min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refused above [`CONDITION_LIMIT`].
pub fn checked_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    let condition = condition_number(m);
    if condition.is_nan() || condition > CONDITION_LIMIT {
        return Err(Error::Singular { what, condition });
    }
    m.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular { what, condition })
}

/// Solve `m x = b` with the same conditioning guard as [`checked_inverse`].
pub fn checked_solve(m: &DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    let condition = condition_number(m);
    if condition.is_nan() || condition > CONDITION_LIMIT {
        return Err(Error::Singular { what, condition });
    }
    m.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular { what, condition })
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Relative difference `‖a − b‖_F / max(‖b‖_F, floor)`.
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

const SERIES_SWITCH: f64 = 0.3;

/// Coefficients `(c, c'/θ)` of `J⁻¹(r) = I − ½[r] + c(θ)[r]²`.
///
/// Series below [`SERIES_SWITCH`]; the closed form cancels badly near zero.
fn inverse_left_jacobian_coeffs(theta: f64) -> (f64, f64) {
    if theta < SERIES_SWITCH {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        let t6 = t4 * t2;
        let t8 = t4 * t4;
        // from the Laurent series of cot(θ/2)
        let a10 = 1382.0 / 2_615_348_736_000.0;
        let c = 1.0 / 12.0 + t2 / 720.0 + t4 / 30240.0 + t6 / 1_209_600.0 + t8 / 47_900_160.0 + a10 * t8 * t2;
        let c1 = 1.0 / 360.0 + t2 / 7560.0 + t4 / 201_600.0 + t6 / 5_987_520.0 + 10.0 * a10 * t8;
        (c, c1)
    } else {
        let (s, co) = theta.sin_cos();
        let t2 = theta * theta;
        let c = 1.0 / t2 - (1.0 + co) / (2.0 * theta * s);
        let dc = -2.0 / (t2 * theta) + 1.0 / (2.0 * theta * (1.0 - co)) + (1.0 + co) / (2.0 * t2 * s);
        (c, dc / theta)
    }
}

/// Inverse left Jacobian of SO(3): maps a world angular velocity to the
/// rate of the rotation vector `r`.
pub fn inverse_left_jacobian(r: &Vector3<f64>) -> Matrix3<f64> {
    let (c, _) = inverse_left_jacobian_coeffs(r.norm());
    let k = skew(r);
    Matrix3::identity() - k * 0.5 + k * k * c
}

/// Directional derivative `(∂/∂s) J⁻¹(r + s·δ) · w` at `s = 0`.
pub fn inverse_left_jacobian_derivative(r: &Vector3<f64>, delta: &Vector3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
    let (c, c1) = inverse_left_jacobian_coeffs(r.norm());
    let rw = r.cross(w);
    -delta.cross(w) * 0.5 + r.cross(&rw) * (c1 * r.dot(delta)) + (delta.cross(&rw) + r.cross(&delta.cross(w))) * c
}
