//! Rest-to-rest maneuver between two attitudes by shooting on `Π0`.
//!
//! Each iteration propagates the current `Π0`, measures the terminal error
//! `ζ_N = vee(log(Rbl_Nᵀ Rbl_Nd))` and corrects
//! `Π0 <- Π0 + c Φ12⁻¹ ζ_N` with the attitude/momentum block of the exact
//! discrete transition matrix of the current trajectory.

use crate::dynamics::{propagate, RigidBodyParams, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::sensitivity::transition;
use crate::so3::{exp_so3, log_so3, Mat3, Rotation, Vec3};

pub const DEFAULT_EPSILON: f64 = 1e-14;
pub const DEFAULT_SCALING: f64 = 0.1;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Largest accepted condition estimate of `Φ12`.
pub const MAX_SENSITIVITY_CONDITION: f64 = 1e12;

// Right factor exp(S(GUESS_NUDGE [1, 1, 1])) applied to the target when
// building the default guess, so a half-turn target still has a well-defined
// logarithm. The sign selects which of the two half-turn branches is used.
const GUESS_NUDGE: f64 = -1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct BvpProblem {
    pub rbl0: Rotation,
    /// Desired terminal attitude.
    pub rbl_nd: Rotation,
    pub params: RigidBodyParams,
    /// Maneuver time T.
    pub horizon: f64,
    /// Number of steps N; the step size is `T / N`.
    pub steps: usize,
    /// Stopping tolerance on `|ζ_N|`.
    pub epsilon: f64,
    /// Scaling factor `c` of the correction.
    pub scaling: f64,
    pub max_iter: usize,
    /// Initial `Π0`; `None` selects [`default_guess`].
    pub guess: Option<Vec3>,
}

impl BvpProblem {
    pub fn new(rbl0: Rotation, rbl_nd: Rotation, params: RigidBodyParams, horizon: f64, steps: usize) -> Self {
        Self {
            rbl0,
            rbl_nd,
            params,
            horizon,
            steps,
            epsilon: DEFAULT_EPSILON,
            scaling: DEFAULT_SCALING,
            max_iter: DEFAULT_MAX_ITER,
            guess: None,
        }
    }

    pub fn with_guess(mut self, guess: Vec3) -> Self {
        self.guess = Some(guess);
        self
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("stopping tolerance must be positive"));
        }
        if !(self.scaling > 0.0 && self.scaling <= 1.0) {
            return Err(Error::InvalidInput("scaling factor must lie in (0, 1]"));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("at least one step is required"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidInput("maneuver time must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BvpSolution {
    pub pi0: Vec3,
    pub pi_n: Vec3,
    /// Initial impulse `Π0 - ω0 Rbl0ᵀ J e2`.
    pub h0: Vec3,
    /// Terminal impulse `ω0 Rbl_Nᵀ J e2 - Π_N`.
    pub hn: Vec3,
    pub iterations: usize,
    pub final_error: f64,
    pub trajectory: Trajectory,
}

/// `vee(log(Rbl_Nᵀ Rbl_Nd))`.
pub fn attitude_error(rbl_n: &Rotation, rbl_nd: &Rotation) -> Result<Vec3> {
    log_so3(&(rbl_n.transpose() * *rbl_nd))
}

/// `Π0 + c Φ12⁻¹ ζ_N`.
pub fn newton_update(pi0: &Vec3, phi12: &Mat3, zeta_n: &Vec3, c: f64) -> Result<Vec3> {
    match math::inverse_with_condition(phi12) {
        Some((inv, cond)) if cond <= MAX_SENSITIVITY_CONDITION => Ok(pi0 + inv * zeta_n * c),
        other => Err(Error::SingularSensitivity {
            condition: other.map_or(f64::INFINITY, |(_, c)| c),
        }),
    }
}

/// Constant-axis kinematic guess plus the rest momentum at `Rbl0`:
/// `J (log(Rbl0ᵀ Rbl_Nd n)/T + ω0 Rbl0ᵀ e2)` with a small nudge rotation `n`.
pub fn default_guess(problem: &BvpProblem) -> Result<Vec3> {
    let nudge = exp_so3(&Vec3::repeat(GUESS_NUDGE));
    let rel = problem.rbl0.transpose() * problem.rbl_nd * nudge;
    let axis_rate = log_so3(&rel)? / problem.horizon;
    let lvlh_rate = problem.rbl0.matrix().row(1).transpose() * problem.params.omega0();
    Ok(problem.params.inertia() * (axis_rate + lvlh_rate))
}

pub fn impulses(params: &RigidBodyParams, traj: &Trajectory) -> (Vec3, Vec3) {
    let first = traj.initial();
    let last = traj.terminal();
    (
        first.pi - params.rest_momentum(&first.rbl),
        params.rest_momentum(&last.rbl) - last.pi,
    )
}

pub fn solve(problem: &BvpProblem) -> Result<BvpSolution> {
    solve_with_observer(problem, |_, _| ())
}

/// Like [`solve`], calling `observer(iteration, |ζ_N|)` after every
/// propagation.
pub fn solve_with_observer(problem: &BvpProblem, mut observer: impl FnMut(usize, f64)) -> Result<BvpSolution> {
    problem.validate()?;
    let guess = match problem.guess {
        Some(g) => g,
        None => default_guess(problem)?,
    };
    match shoot(problem, guess, &mut observer) {
        Err(Error::NearPiAmbiguity { .. }) => {
            let retry = guess + problem.params.inertia() * Vec3::repeat(GUESS_NUDGE);
            shoot(problem, retry, &mut observer)
        }
        other => other,
    }
}

fn shoot(problem: &BvpProblem, guess: Vec3, observer: &mut impl FnMut(usize, f64)) -> Result<BvpSolution> {
    let h = problem.step_size();
    let mut pi0 = guess;
    let mut best = f64::INFINITY;
    for iteration in 0..=problem.max_iter {
        let traj = propagate(&pi0, &problem.rbl0, &problem.params, problem.steps, h)?;
        let zeta = attitude_error(&traj.terminal().rbl, &problem.rbl_nd)?;
        let error = zeta.norm();
        observer(iteration, error);
        best = best.min(error);
        if error <= problem.epsilon {
            let (h0, hn) = impulses(&problem.params, &traj);
            return Ok(BvpSolution {
                pi0,
                pi_n: traj.terminal().pi,
                h0,
                hn,
                iterations: iteration,
                final_error: error,
                trajectory: traj,
            });
        }
        if iteration == problem.max_iter {
            break;
        }
        let phi = transition(&traj)?;
        pi0 = newton_update(&pi0, &phi.phi12, &zeta, problem.scaling)?;
    }
    Err(Error::MaxIterations {
        iterations: problem.max_iter,
        best_error: best,
    })
}
