//! Rigid-body attitude dynamics in a circular orbit.
//!
//! The discrete flow is the Lie group variational integrator
//!
//! ```text
//! h S(Π_k + h/2 M_k)  = F_k Jd - Jd F_kᵀ
//! Rbl_{k+1}           = exp(-S(ω0 e2) h) Rbl_k F_k
//! Π_{k+1}             = F_kᵀ Π_k + h/2 F_kᵀ M_k + h/2 M_{k+1}
//! ```
//!
//! with `Jd = tr(J)/2 I - J` and the gravity-gradient moment
//! `M = 3 ω0² (Rblᵀ e3) × J (Rblᵀ e3)`. Attitude updates are products of
//! rotations, so every state stays on SO(3) without projection.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::so3::{self, exp_so3, hat, ortho_error, right_jacobian, Mat3, Rotation, Vec3};

/// Newton iteration budget for the implicit relative-rotation equation.
pub const MAX_NEWTON_ITER: usize = 50;
/// Residual bound, scaled by `max(1, h |Π|)`, required of every solved step.
pub const IMPLICIT_RESIDUAL_TOL: f64 = 1e-13;
// Newton stops once the correction is this small relative to |f|; the
// iterate after such a step sits at rounding level.
const NEWTON_STEP_TOL: f64 = 1e-10;

/// Inertia of the spacecraft and the orbital rate of the LVLH frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyParams {
    inertia: Mat3,
    inertia_inv: Mat3,
    nonstandard: Mat3,
    omega0: f64,
}

impl RigidBodyParams {
    /// `inertia` must be symmetric positive definite and `omega0 >= 0`;
    /// `omega0 = 0` is the free rigid body.
    pub fn new(inertia: Mat3, omega0: f64) -> Result<Self> {
        if !inertia.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("inertia must be finite"));
        }
        let asym = (inertia - inertia.transpose()).norm();
        if asym > 1e-12 * inertia.norm() {
            return Err(Error::InvalidInput("inertia must be symmetric"));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::InvalidInput("inertia must be positive definite"));
        }
        if !(omega0 >= 0.0) || !omega0.is_finite() {
            return Err(Error::InvalidInput("orbital rate must be finite and non-negative"));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or(Error::InvalidInput("inertia must be invertible"))?;
        Ok(Self {
            inertia,
            inertia_inv,
            nonstandard: Mat3::identity() * (0.5 * inertia.trace()) - inertia,
            omega0,
        })
    }

    pub fn diagonal(j1: f64, j2: f64, j3: f64, omega0: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::new(j1, j2, j3)), omega0)
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn inertia_inverse(&self) -> &Mat3 {
        &self.inertia_inv
    }

    /// `Jd = tr(J)/2 I - J`.
    pub fn nonstandard_inertia(&self) -> &Mat3 {
        &self.nonstandard
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Body momentum of rest relative to LVLH at attitude `rbl`: `ω0 Rblᵀ J e2`.
    pub fn rest_momentum(&self, rbl: &Rotation) -> Vec3 {
        rbl.matrix().transpose() * (self.inertia.column(1) * self.omega0)
    }

    /// `Rli_k = Rli_0 exp(S(ω0 e2) k h)`.
    pub fn lvlh_to_inertial(&self, rli0: &Rotation, t: f64) -> Rotation {
        *rli0 * exp_so3(&Vec3::new(0.0, self.omega0 * t, 0.0))
    }
}

/// One node of a discrete trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteState {
    pub k: usize,
    /// Body angular momentum Π_k.
    pub pi: Vec3,
    /// Body-to-LVLH attitude.
    pub rbl: Rotation,
}

impl DiscreteState {
    pub fn new(pi: Vec3, rbl: Rotation) -> Self {
        Self { k: 0, pi, rbl }
    }

    pub fn angular_velocity(&self, params: &RigidBodyParams) -> Vec3 {
        params.inertia_inv * self.pi
    }
}

/// States `k = 0..=N` of a propagated maneuver together with the relative
/// rotations `F_k`, `k = 0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: RigidBodyParams,
    pub h: f64,
    pub states: Vec<DiscreteState>,
    pub relative_rotations: Vec<Rotation>,
}

impl Trajectory {
    /// Number of steps N.
    pub fn steps(&self) -> usize {
        self.relative_rotations.len()
    }

    pub fn initial(&self) -> &DiscreteState {
        &self.states[0]
    }

    pub fn terminal(&self) -> &DiscreteState {
        &self.states[self.states.len() - 1]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// Body-to-inertial attitude `Rbi_k = Rli_k Rbl_k` for a given `Rli_0`.
    pub fn body_to_inertial(&self, k: usize, rli0: &Rotation) -> Rotation {
        self.params.lvlh_to_inertial(rli0, self.time(k)) * self.states[k].rbl
    }

    /// Largest `|RblᵀRbl - I|_F` over the stored states.
    pub fn max_ortho_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.rbl.ortho_error())
            .fold(0.0, f64::max)
    }
}

/// Gravity-gradient moment in the body frame.
pub fn gravity_gradient(rbl: &Rotation, params: &RigidBodyParams) -> Vec3 {
    gravity_gradient_raw(rbl.matrix(), params)
}

fn gravity_gradient_raw(rbl: &Mat3, params: &RigidBodyParams) -> Vec3 {
    let w2 = params.omega0 * params.omega0;
    if w2 == 0.0 {
        return Vec3::zeros();
    }
    let radial = rbl.row(2).transpose();
    (3.0 * w2) * radial.cross(&(params.inertia * radial))
}

/// Solves `h S(Π + h/2 M) = F Jd - Jd Fᵀ` for `F ∈ SO(3)`.
///
/// Newton runs on `F = exp(f)` starting from `f = h J⁻¹ Π`; the Jacobian of
/// `vee(F Jd - Jd Fᵀ)` is `(tr(F Jd) I - F Jd) F Jr(f)`.
pub fn solve_implicit_step(pi: &Vec3, mg: &Vec3, params: &RigidBodyParams, h: f64) -> Result<Rotation> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step size must be positive"));
    }
    let jd = &params.nonstandard;
    let target = (pi + mg * (0.5 * h)) * h;
    let tol = IMPLICIT_RESIDUAL_TOL * f64::max(1.0, h * pi.norm());

    let residual = |f: &Rotation| -> (Mat3, Vec3) {
        let a = f.matrix() * jd;
        (a, so3::vee_unchecked(&(a - a.transpose())) - target)
    };

    let mut f = (params.inertia_inv * pi) * h;
    let mut rot = exp_so3(&f);
    for _ in 0..MAX_NEWTON_ITER {
        let (a, g) = residual(&rot);
        let jac = so3::trace_identity_map(&a) * rot.matrix() * right_jacobian(&f);
        let Some(delta) = jac.lu().solve(&g) else {
            return Err(Error::NoConvergence {
                step: None,
                residual: g.norm(),
            });
        };
        f -= delta;
        rot = exp_so3(&f);
        if delta.norm() <= NEWTON_STEP_TOL * f.norm() {
            let res = core::f64::consts::SQRT_2 * residual(&rot).1.norm();
            if res <= tol {
                return Ok(rot);
            }
            return Err(Error::NoConvergence {
                step: None,
                residual: res,
            });
        }
    }
    Err(Error::NoConvergence {
        step: None,
        residual: core::f64::consts::SQRT_2 * residual(&rot).1.norm(),
    })
}

/// Frobenius residual `|h S(Π + h/2 M) - (F Jd - Jd Fᵀ)|_F`.
pub fn implicit_residual(f: &Rotation, pi: &Vec3, mg: &Vec3, params: &RigidBodyParams, h: f64) -> f64 {
    let a = f.matrix() * params.nonstandard;
    (hat(&((pi + mg * (0.5 * h)) * h)) - (a - a.transpose())).norm()
}

/// Rotation of the LVLH frame over one step, seen from LVLH: `exp(-S(ω0 e2) h)`.
pub fn lvlh_step(params: &RigidBodyParams, h: f64) -> Rotation {
    exp_so3(&Vec3::new(0.0, -params.omega0 * h, 0.0))
}

struct Stepper<'a> {
    params: &'a RigidBodyParams,
    h: f64,
}

impl<'a> Stepper<'a> {
    fn new(params: &'a RigidBodyParams, h: f64) -> Self {
        Self { params, h }
    }

    // The attitude update does not involve Π_{k+1}, so M_{k+1} is taken at
    // the updated attitude and the momentum update is explicit. `attitude`
    // maps F_k to Rbl_{k+1}.
    fn step(
        &self,
        state: &DiscreteState,
        mg: &Vec3,
        attitude: impl FnOnce(&Rotation) -> Rotation,
    ) -> Result<(DiscreteState, Rotation, Vec3)> {
        let h = self.h;
        let f = solve_implicit_step(&state.pi, mg, self.params, h).map_err(|e| e.at_step(state.k))?;
        let rbl = attitude(&f);
        let mg_next = gravity_gradient(&rbl, self.params);
        let ft = f.matrix().transpose();
        let pi = ft * (state.pi + mg * (0.5 * h)) + mg_next * (0.5 * h);
        Ok((
            DiscreteState {
                k: state.k + 1,
                pi,
                rbl,
            },
            f,
            mg_next,
        ))
    }
}

/// Advances one step, returning the next state and the relative rotation `F_k`.
/// `Rbl_{k+1} = exp(-S(ω0 e2) h) Rbl_k F_k`.
pub fn lgvi_step(state: &DiscreteState, params: &RigidBodyParams, h: f64) -> Result<(DiscreteState, Rotation)> {
    let mg = gravity_gradient(&state.rbl, params);
    let frame_step = lvlh_step(params, h);
    Stepper::new(params, h)
        .step(state, &mg, |f| frame_step * state.rbl * *f)
        .map(|(next, f, _)| (next, f))
}

/// Propagates `N` steps of size `h` from `(Π0, Rbl0)`.
///
/// The body-to-inertial attitude `Rbi_{k+1} = Rbi_k F_k` is accumulated and
/// `Rbl_k = exp(-S(ω0 e2) t_k) Rbi_k` is formed in closed form, so rounding
/// in the frame rotation does not build up over long runs.
pub fn propagate(pi0: &Vec3, rbl0: &Rotation, params: &RigidBodyParams, n: usize, h: f64) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidInput("at least one step is required"));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step size must be positive"));
    }
    let stepper = Stepper::new(params, h);
    let mut states = Vec::with_capacity(n + 1);
    let mut relative_rotations = Vec::with_capacity(n);
    let mut state = DiscreteState::new(*pi0, *rbl0);
    let mut inertial = *rbl0;
    let mut mg = gravity_gradient(rbl0, params);
    states.push(state);
    for k in 0..n {
        let t = (k + 1) as f64 * h;
        let (next, f, mg_next) = stepper.step(&state, &mg, |f| {
            inertial = inertial * *f;
            params.lvlh_to_inertial(&Rotation::identity(), t).transpose() * inertial
        })?;
        states.push(next);
        relative_rotations.push(f);
        state = next;
        mg = mg_next;
    }
    Ok(Trajectory {
        params: *params,
        h,
        states,
        relative_rotations,
    })
}

/// Step count and step size for a horizon: `N = max(1, round(T/h))`, `h = T/N`.
pub fn steps_for_horizon(horizon: f64, nominal_step: f64) -> (usize, f64) {
    let n = math::round(horizon / nominal_step).max(1.0) as usize;
    (n, horizon / n as f64)
}

/// `½ Πᵀ J⁻¹ Π`.
pub fn kinetic_energy(state: &DiscreteState, params: &RigidBodyParams) -> f64 {
    0.5 * state.pi.dot(&(params.inertia_inv * state.pi))
}

/// State of the continuous-time reference integrator. The attitude is a raw
/// matrix because an unprojected Runge-Kutta solution leaves SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleState {
    pub pi: Vec3,
    pub attitude: Mat3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleTrajectory {
    pub h: f64,
    pub states: Vec<OracleState>,
}

impl OracleTrajectory {
    pub fn terminal(&self) -> &OracleState {
        &self.states[self.states.len() - 1]
    }

    pub fn max_ortho_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| ortho_error(&s.attitude))
            .fold(0.0, f64::max)
    }
}

fn continuous_rhs(pi: &Vec3, r: &Mat3, params: &RigidBodyParams) -> (Vec3, Mat3) {
    let omega = params.inertia_inv * pi;
    let pi_dot = pi.cross(&omega) + gravity_gradient_raw(r, params);
    let rel = omega - r.row(1).transpose() * params.omega0;
    (pi_dot, r * hat(&rel))
}

fn rk4(pi0: &Vec3, rbl0: &Rotation, params: &RigidBodyParams, n: usize, h: f64, project: bool) -> OracleTrajectory {
    let mut states = Vec::with_capacity(n + 1);
    let mut pi = *pi0;
    let mut r = *rbl0.matrix();
    states.push(OracleState { pi, attitude: r });
    for _ in 0..n {
        let (p1, r1) = continuous_rhs(&pi, &r, params);
        let (p2, r2) = continuous_rhs(&(pi + p1 * (0.5 * h)), &(r + r1 * (0.5 * h)), params);
        let (p3, r3) = continuous_rhs(&(pi + p2 * (0.5 * h)), &(r + r2 * (0.5 * h)), params);
        let (p4, r4) = continuous_rhs(&(pi + p3 * h), &(r + r3 * h), params);
        pi += (p1 + (p2 + p3) * 2.0 + p4) * (h / 6.0);
        r += (r1 + (r2 + r3) * 2.0 + r4) * (h / 6.0);
        if project {
            r = Rotation::renormalize(&r).map(Rotation::into_matrix).unwrap_or(r);
        }
        states.push(OracleState { pi, attitude: r });
    }
    OracleTrajectory { h, states }
}

/// Classical RK4 on the continuous equations
/// `Π̇ = Π × Ω + M`, `Ṙbl = Rbl S(Ω - ω0 Rblᵀ e2)`, with the attitude
/// projected back onto SO(3) after every step.
pub fn rk4_oracle(pi0: &Vec3, rbl0: &Rotation, params: &RigidBodyParams, n: usize, h: f64) -> OracleTrajectory {
    rk4(pi0, rbl0, params, n, h, true)
}

/// Same as [`rk4_oracle`] without projection, exhibiting orthonormality drift.
pub fn rk4_unprojected(pi0: &Vec3, rbl0: &Rotation, params: &RigidBodyParams, n: usize, h: f64) -> OracleTrajectory {
    rk4(pi0, rbl0, params, n, h, false)
}
