//! Linearization of the discrete flow on `so(3) × R³`.
//!
//! Attitude variations are right-trivialized, `Rbl^ε = Rbl exp(ε S(ζ))`, and
//! one step maps
//!
//! ```text
//! ζ_{k+1}  = A_k ζ_k + B_k δΠ_k
//! δΠ_{k+1} = C_k ζ_k + D_k δΠ_k
//! ```
//!
//! Products of these block matrices give the transition matrix `Φ` from
//! `(ζ_0, δΠ_0)` to `(ζ_N, δΠ_N)`.

use core::ops::Mul;

use crate::dynamics::{gravity_gradient, lvlh_step, DiscreteState, RigidBodyParams, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::so3::{hat, Mat3, Rotation, Vec3};

/// Largest accepted condition estimate of `tr(F Jd) I - F Jd`.
pub const MAX_STEP_CONDITION: f64 = 1e12;

/// Perturbation `(ζ, δΠ)` of a discrete state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VariationVector {
    pub zeta: Vec3,
    pub dpi: Vec3,
}

impl VariationVector {
    pub fn new(zeta: Vec3, dpi: Vec3) -> Self {
        Self { zeta, dpi }
    }
}

/// Per-step blocks, plus the gravity-moment sensitivity `M_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMatrices {
    pub a: Mat3,
    pub b: Mat3,
    pub c: Mat3,
    pub d: Mat3,
    pub m: Mat3,
}

impl StepMatrices {
    pub fn apply(&self, v: &VariationVector) -> VariationVector {
        VariationVector {
            zeta: self.a * v.zeta + self.b * v.dpi,
            dpi: self.c * v.zeta + self.d * v.dpi,
        }
    }
}

/// 6x6 transition matrix in 3x3 blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub phi11: Mat3,
    pub phi12: Mat3,
    pub phi21: Mat3,
    pub phi22: Mat3,
}

impl Default for TransitionMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransitionMatrix {
    pub fn identity() -> Self {
        Self {
            phi11: Mat3::identity(),
            phi12: Mat3::zeros(),
            phi21: Mat3::zeros(),
            phi22: Mat3::identity(),
        }
    }

    /// `step · self`, i.e. appends one later step.
    pub fn then_step(&self, step: &StepMatrices) -> Self {
        Self {
            phi11: step.a * self.phi11 + step.b * self.phi21,
            phi12: step.a * self.phi12 + step.b * self.phi22,
            phi21: step.c * self.phi11 + step.d * self.phi21,
            phi22: step.c * self.phi12 + step.d * self.phi22,
        }
    }

    pub fn apply(&self, v: &VariationVector) -> VariationVector {
        VariationVector {
            zeta: self.phi11 * v.zeta + self.phi12 * v.dpi,
            dpi: self.phi21 * v.zeta + self.phi22 * v.dpi,
        }
    }

    /// Dense 6x6 form, row-major blocks `[[Φ11, Φ12], [Φ21, Φ22]]`.
    pub fn to_dense(&self) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.phi11[(i, j)];
                out[i][j + 3] = self.phi12[(i, j)];
                out[i + 3][j] = self.phi21[(i, j)];
                out[i + 3][j + 3] = self.phi22[(i, j)];
            }
        }
        out
    }
}

/// `later · earlier`.
impl Mul for TransitionMatrix {
    type Output = TransitionMatrix;

    fn mul(self, earlier: TransitionMatrix) -> TransitionMatrix {
        TransitionMatrix {
            phi11: self.phi11 * earlier.phi11 + self.phi12 * earlier.phi21,
            phi12: self.phi11 * earlier.phi12 + self.phi12 * earlier.phi22,
            phi21: self.phi21 * earlier.phi11 + self.phi22 * earlier.phi21,
            phi22: self.phi21 * earlier.phi12 + self.phi22 * earlier.phi22,
        }
    }
}

/// `M` with `δM^g = M ζ` for `Rbl -> Rbl exp(S(ζ))`:
/// `3 ω0² [-S(J r) S(r) + S(r) J S(r)]`, `r = Rblᵀ e3`.
pub fn delta_mg_matrix(rbl: &Rotation, params: &RigidBodyParams) -> Mat3 {
    let w2 = params.omega0() * params.omega0();
    let r = rbl.matrix().row(2).transpose();
    let sr = hat(&r);
    let j = params.inertia();
    (-hat(&(j * r)) * sr + sr * j * sr) * (3.0 * w2)
}

/// Linearization of the step from `state_k` through `F_k`.
pub fn step_matrices(
    state_k: &DiscreteState,
    f_k: &Rotation,
    mg_k: &Vec3,
    mg_k1: &Vec3,
    params: &RigidBodyParams,
    h: f64,
) -> Result<StepMatrices> {
    // Only the sensitivity of M at the successor attitude enters, not its value.
    let _ = mg_k1;
    let next_rbl = lvlh_step(params, h) * state_k.rbl * *f_k;
    step_matrices_inner(state_k, f_k, mg_k, &next_rbl, params, h)
}

fn step_matrices_inner(
    state_k: &DiscreteState,
    f_k: &Rotation,
    mg_k: &Vec3,
    next_rbl: &Rotation,
    params: &RigidBodyParams,
    h: f64,
) -> Result<StepMatrices> {
    let f = f_k.matrix();
    let ft = f.transpose();
    let fjd = f * params.nonstandard_inertia();
    let g = Mat3::identity() * fjd.trace() - fjd;
    let g_inv = match math::inverse_with_condition(&g) {
        Some((inv, c)) if c <= MAX_STEP_CONDITION => inv,
        other => {
            return Err(Error::SingularStep {
                step: state_k.k,
                condition: other.map_or(f64::INFINITY, |(_, c)| c),
            })
        }
    };

    let m_k = delta_mg_matrix(&state_k.rbl, params);
    let m_k1 = delta_mg_matrix(next_rbl, params);
    let half_h = 0.5 * h;

    let a = ft * (g_inv * m_k * (h * half_h) + Mat3::identity());
    let b = ft * g_inv * h;
    let y = state_k.pi + mg_k * half_h;
    let c = ft * hat(&y) * (f * a - Mat3::identity()) + ft * m_k * half_h + m_k1 * a * half_h;
    let d = hat(&(ft * y)) * b + ft + m_k1 * b * half_h;

    debug_assert!({
        // δΠ_{k+1} transcribed term by term: δFᵀ y + Fᵀ δΠ + h/2 Fᵀ M_k ζ + h/2 M_{k+1} ζ_{k+1}
        // with δFᵀ y = -Fᵀ S(y) ζ_k + S(Fᵀ y) ζ_{k+1}.
        let s_fty = hat(&(ft * y));
        let c_lit = -ft * hat(&y) + s_fty * a + ft * m_k * half_h + m_k1 * a * half_h;
        let d_lit = s_fty * b + ft + m_k1 * b * half_h;
        let scale = 1.0 + c.norm() + d.norm();
        (c - c_lit).norm() <= 1e-10 * scale && (d - d_lit).norm() <= 1e-10 * scale
    });

    Ok(StepMatrices { a, b, c, d, m: m_k })
}

/// Step matrices for every step of `traj`, in order.
pub fn trajectory_step_matrices(traj: &Trajectory) -> impl Iterator<Item = Result<StepMatrices>> + '_ {
    step_matrices_range(traj, 0, traj.steps())
}

fn step_matrices_range(traj: &Trajectory, start: usize, end: usize) -> impl Iterator<Item = Result<StepMatrices>> + '_ {
    let params = &traj.params;
    (start..end).map(move |k| {
        let s = &traj.states[k];
        let next = &traj.states[k + 1];
        let mg = gravity_gradient(&s.rbl, params);
        step_matrices_inner(s, &traj.relative_rotations[k], &mg, &next.rbl, params, traj.h)
    })
}

/// `Φ = A_{N-1} ⋯ A_1 A_0` over the whole trajectory.
pub fn transition(traj: &Trajectory) -> Result<TransitionMatrix> {
    transition_between(traj, 0, traj.steps())
}

/// Transition matrix from node `start` to node `end` of `traj`.
pub fn transition_between(traj: &Trajectory, start: usize, end: usize) -> Result<TransitionMatrix> {
    if start > end || end > traj.steps() {
        return Err(Error::InvalidInput("transition range outside the trajectory"));
    }
    step_matrices_range(traj, start, end).try_fold(TransitionMatrix::identity(), |phi, step| Ok(phi.then_step(&step?)))
}
