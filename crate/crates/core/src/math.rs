//! Scalar helpers backed by `libm` so results do not depend on whether `std`
//! is linked.

use crate::so3::Mat3;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Inverse of a 3x3 matrix together with its Frobenius condition estimate
/// `|A|_F |A^-1|_F`. Returns `None` if the matrix is numerically singular.
pub(crate) fn inverse_with_condition(a: &Mat3) -> Option<(Mat3, f64)> {
    let inv = a.try_inverse()?;
    let cond = a.norm() * inv.norm();
    if cond.is_finite() {
        Some((inv, cond))
    } else {
        None
    }
}
