//! Rotation group SO(3) and its Lie algebra so(3).
//!
//! so(3) is identified with R^3 through the hat map, `hat(x) y = x × y`.
//! Rotations are stored as plain 3x3 matrices; a [`Rotation`] is only built
//! from matrices that pass the orthonormality check, or by group operations
//! that stay on SO(3) by construction.

use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::math;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|R^T R - I|_F` and `|det R - 1|` for a valid rotation.
pub const ORTHO_TOL: f64 = 1e-12;
/// Default tolerance on `|M + M^T|_F` accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-10;
/// Distance from pi below which [`log_so3`] refuses to pick an axis.
pub const PI_GUARD: f64 = 1e-6;

// Below this angle the Rodrigues coefficients switch to Taylor series.
const SERIES_ANGLE: f64 = 1e-4;

pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`], with the default skew tolerance.
pub fn vee(m: &Mat3) -> Result<Vec3> {
    vee_with_tol(m, SKEW_TOL)
}

pub fn vee_with_tol(m: &Mat3, tol: f64) -> Result<Vec3> {
    let asymmetry = (m + m.transpose()).norm();
    if !(asymmetry <= tol) {
        return Err(Error::NotSkew { asymmetry });
    }
    Ok(vee_unchecked(m))
}

#[inline]
pub(crate) fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Axial vector of the skew part, `vee((M - M^T) / 2)`.
#[inline]
pub(crate) fn skew_axial(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
}

/// Coefficients `(sin θ / θ, (1 - cos θ) / θ²)` of the Rodrigues formula.
fn rodrigues_coefficients(theta: f64) -> (f64, f64) {
    if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        let half = math::sin(0.5 * theta) / theta;
        (math::sin(theta) / theta, 2.0 * half * half)
    }
}

/// Exponential map so(3) -> SO(3) (Rodrigues formula).
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta = v.norm();
    let (a, b) = rodrigues_coefficients(theta);
    let k = hat(v);
    Rotation(Mat3::identity() + k * a + k * k * b)
}

/// Right Jacobian of the exponential map: `exp(v + δ) ≈ exp(v) exp(Jr(v) δ)`.
pub fn right_jacobian(v: &Vec3) -> Mat3 {
    let theta = v.norm();
    let (c1, c2) = if theta < SERIES_ANGLE {
        let t2 = theta * theta;
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        let t2 = theta * theta;
        let half = math::sin(0.5 * theta) / theta;
        (2.0 * half * half, (theta - math::sin(theta)) / (t2 * theta))
    };
    let k = hat(v);
    Mat3::identity() - k * c1 + k * k * c2
}

/// Logarithm SO(3) -> so(3), returning the rotation vector with norm in `[0, π)`.
///
/// Fails with [`Error::NearPiAmbiguity`] when the angle is within
/// [`PI_GUARD`] of π.
pub fn log_so3(r: &Rotation) -> Result<Vec3> {
    log_so3_with_guard(r, PI_GUARD)
}

pub fn log_so3_with_guard(r: &Rotation, guard: f64) -> Result<Vec3> {
    let m = &r.0;
    let s = skew_axial(m);
    let cos = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
    let sin = s.norm();
    let theta = math::atan2(sin, cos);
    if theta >= PI - guard {
        return Err(Error::NearPiAmbiguity { angle: theta });
    }
    if theta <= FRAC_PI_2 {
        let scale = if theta < SERIES_ANGLE {
            let t2 = theta * theta;
            1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
        } else {
            theta / sin
        };
        return Ok(s * scale);
    }
    // (R + R^T)/2 - cos θ I = (1 - cos θ) n n^T; read the axis off the
    // column with the largest diagonal and fix its sign with the skew part.
    let b = 0.5 * (m + m.transpose()) - Mat3::identity() * cos;
    let i = (0..3)
        .max_by(|&p, &q| b[(p, p)].total_cmp(&b[(q, q)]))
        .unwrap_or(0);
    let mut axis: Vec3 = b.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&s) < 0.0 {
        axis = -axis;
    }
    Ok(axis * theta)
}

/// Returns `(hat(R x), R hat(x) R^T)`, which agree for any rotation.
pub fn adjoint_identity_check(r: &Rotation, x: &Vec3) -> (Mat3, Mat3) {
    (hat(&(r.0 * x)), r.0 * hat(x) * r.0.transpose())
}

/// `tr(A) I - A`, the matrix for which
/// `hat(x) A + A^T hat(x) = hat((tr(A) I - A) x)`.
pub fn trace_identity_map(a: &Mat3) -> Mat3 {
    Mat3::identity() * a.trace() - a
}

/// `|M^T M - I|_F`.
pub fn ortho_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// A 3x3 matrix in SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Validates `m` against the orthonormality and determinant tolerances.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let err = ortho_error(&m);
        let det = m.determinant();
        if err <= ORTHO_TOL && (det - 1.0).abs() <= ORTHO_TOL {
            Ok(Rotation(m))
        } else {
            Err(Error::NotRotation {
                ortho_error: err,
                det,
            })
        }
    }

    /// Row-major constructor, validated like [`Rotation::from_matrix`].
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Mat3::from_fn(|i, j| rows[i][j]))
    }

    /// Nearest rotation in the Frobenius sense (polar factor), for ingesting
    /// matrices that are only approximately orthonormal. Rejects matrices
    /// with non-positive determinant.
    pub fn renormalize(m: &Mat3) -> Result<Self> {
        let det = m.determinant();
        if !(det > 0.0) || !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NotRotation {
                ortho_error: ortho_error(m),
                det,
            });
        }
        Ok(Rotation(polar_factor(m)))
    }

    /// Rotation by `angle` about the (not necessarily unit) `axis`.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) || !angle.is_finite() {
            return Err(Error::InvalidInput("axis-angle needs a nonzero axis"));
        }
        Ok(exp_so3(&(axis * (angle / n))))
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    #[inline]
    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    /// Inverse rotation.
    #[inline]
    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn ortho_error(&self) -> f64 {
        ortho_error(&self.0)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let cos = (0.5 * (self.0.trace() - 1.0)).clamp(-1.0, 1.0);
        math::atan2(skew_axial(&self.0).norm(), cos)
    }

    /// Geodesic distance `|log(Rᵀ other)|`, valid away from half turns.
    pub fn distance(&self, other: &Rotation) -> Result<f64> {
        log_so3(&(self.transpose() * *other)).map(|v| v.norm())
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    #[inline]
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;

    #[inline]
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;

    #[inline]
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

// Newton iteration X <- (X + X^-T)/2 for the orthogonal polar factor; it
// converges quadratically for any invertible matrix with positive determinant.
fn polar_factor(m: &Mat3) -> Mat3 {
    let mut x = *m;
    for _ in 0..100 {
        let Some(inv) = x.try_inverse() else { break };
        let next = 0.5 * (x + inv.transpose());
        let delta = (next - x).norm();
        x = next;
        if delta <= 1e-15 {
            break;
        }
    }
    x
}
