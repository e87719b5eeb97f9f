//! Minimum-impulse rest-to-rest maneuver of an axially symmetric spacecraft
//! to a terminal reduced attitude.
//!
//! The decision variable is `Π0 ∈ R³`. With `R0 = Rbl_0`, `R_N = Rbl_N`:
//!
//! ```text
//! J(Π0) = |Π0 - ω0 R0ᵀ J e2| + |ω0 R_Nᵀ J e2 - Π_N|  = |H0| + |H_N|
//! C(Π0) = |R_N e3 - Λ_d|²                            = 0
//! ```
//!
//! Both gradients come from the transition matrix of the current trajectory.
//! The constraint is a squared distance, so its gradient vanishes on the
//! feasible set and the multiplier that balances `∇J` diverges like
//! `C^{-1/2}`. The minimizer therefore alternates damped Newton solves of
//! `J + λ C` with a multiplier update extrapolated from that scaling.

use crate::bvp::impulses;
use crate::dynamics::{propagate, RigidBodyParams, Trajectory};
use crate::error::{Error, Impulse, Result};
use crate::math;
use crate::sensitivity::{transition, TransitionMatrix};
use crate::so3::{hat, Mat3, Rotation, Vec3};

/// Impulse norms below this are treated as the non-differentiable origin.
pub const SMOOTHING_FLOOR: f64 = 1e-9;
pub const DEFAULT_CONSTRAINT_TOL: f64 = 1e-10;
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;

const MAX_OUTER: usize = 40;
const INITIAL_MULTIPLIER: f64 = 10.0;
const LINE_SEARCH_STEPS: usize = 40;

/// Direction of the body symmetry axis `Rbl e3` in the LVLH frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedAttitude(Vec3);

impl ReducedAttitude {
    pub fn new(v: Vec3) -> Result<Self> {
        if (v.norm() - 1.0).abs() <= 1e-12 {
            Ok(Self(v))
        } else {
            Err(Error::InvalidInput("reduced attitude must be a unit vector"))
        }
    }

    pub fn normalized(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Ok(Self(v / n))
        } else {
            Err(Error::InvalidInput("reduced attitude needs a nonzero direction"))
        }
    }

    pub fn of(rbl: &Rotation) -> Self {
        Self(rbl.matrix().column(2).into_owned())
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptProblem {
    pub rbl0: Rotation,
    pub lambda_nd: ReducedAttitude,
    pub params: RigidBodyParams,
    pub horizon: f64,
    pub steps: usize,
    pub guess: Vec3,
    pub constraint_tol: f64,
    /// Relative tolerance on `|∇J + λ ∇C|`, scaled by `max(1, |∇J|)`.
    pub stationarity_tol: f64,
    /// Budget of Newton iterations over all multiplier updates.
    pub max_iter: usize,
}

impl OptProblem {
    /// Requires an inertia with `e3` as symmetry axis. The guess defaults to
    /// `J [1, 1, 0]ᵀ`.
    pub fn new(
        rbl0: Rotation,
        lambda_nd: ReducedAttitude,
        params: RigidBodyParams,
        horizon: f64,
        steps: usize,
    ) -> Result<Self> {
        let j = params.inertia();
        let scale = j.norm();
        let symmetric = (j[(0, 0)] - j[(1, 1)]).abs() <= 1e-12 * scale
            && [j[(0, 1)], j[(0, 2)], j[(1, 2)]].iter().all(|x| x.abs() <= 1e-12 * scale);
        if !symmetric {
            return Err(Error::InvalidInput("inertia must be axially symmetric about e3"));
        }
        if steps == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidInput("horizon and step count must be positive"));
        }
        Ok(Self {
            rbl0,
            lambda_nd,
            params,
            horizon,
            steps,
            guess: j * Vec3::new(1.0, 1.0, 0.0),
            constraint_tol: DEFAULT_CONSTRAINT_TOL,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub pi0: Vec3,
    pub pi_n: Vec3,
    /// Performance index `|H0| + |H_N|`.
    pub objective: f64,
    /// Constraint violation `|Λ_N - Λ_d|²`.
    pub constraint: f64,
    pub h0: Vec3,
    pub hn: Vec3,
    pub rbl_n: Rotation,
    /// Newton iterations used.
    pub iterations: usize,
    pub converged: bool,
    /// Least-squares multiplier `-(∇J·∇C)/(∇C·∇C)`.
    pub multiplier: f64,
    /// `|∇J + λ ∇C|` at the returned point.
    pub stationarity: f64,
    pub trajectory: Trajectory,
}

/// Objective, constraint and sensitivities at one `Π0`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub pi0: Vec3,
    pub objective: f64,
    pub constraint: f64,
    pub h0: Vec3,
    pub hn: Vec3,
    pub trajectory: Trajectory,
    pub transition: TransitionMatrix,
}

impl Evaluation {
    pub fn new(pi0: &Vec3, problem: &OptProblem) -> Result<Self> {
        let trajectory = propagate(pi0, &problem.rbl0, &problem.params, problem.steps, problem.step_size())?;
        let transition = transition(&trajectory)?;
        let (h0, hn) = impulses(&problem.params, &trajectory);
        Ok(Self {
            pi0: *pi0,
            objective: h0.norm() + hn.norm(),
            constraint: constraint(&trajectory, &problem.lambda_nd),
            h0,
            hn,
            trajectory,
            transition,
        })
    }

    fn rbl_n(&self) -> &Mat3 {
        self.trajectory.terminal().rbl.matrix()
    }

    /// `∇J = H0/|H0| + (ω0 S(R_Nᵀ J e2) Φ12 - Φ22)ᵀ H_N/|H_N|`.
    pub fn grad_objective(&self, params: &RigidBodyParams) -> Result<Vec3> {
        let n0 = self.h0.norm();
        if n0 < SMOOTHING_FLOOR {
            return Err(Error::NonSmoothPoint {
                impulse: Impulse::Initial,
                norm: n0,
                iterate: self.pi0.into(),
            });
        }
        let nn = self.hn.norm();
        if nn < SMOOTHING_FLOOR {
            return Err(Error::NonSmoothPoint {
                impulse: Impulse::Terminal,
                norm: nn,
                iterate: self.pi0.into(),
            });
        }
        let rest_n = params.rest_momentum(&self.trajectory.terminal().rbl);
        let phi = &self.transition;
        let terminal_map = hat(&rest_n) * phi.phi12 - phi.phi22;
        Ok(self.h0 / n0 + terminal_map.transpose() * (self.hn / nn))
    }

    /// `∇C = (2 Λ_dᵀ R_N S(e3) Φ12)ᵀ`.
    pub fn grad_constraint(&self, lambda_nd: &ReducedAttitude) -> Vec3 {
        let row = lambda_nd.vector().transpose() * self.rbl_n() * hat(&Vec3::z()) * self.transition.phi12;
        row.transpose() * 2.0
    }

    /// Unit tangent of the feasible curve `{Λ_N = const}` through this point,
    /// the null direction of `S(e3) Φ12`.
    pub fn feasible_tangent(&self) -> Vec3 {
        let p = &self.transition.phi12;
        let t = p.row(0).transpose().cross(&p.row(1).transpose());
        t / t.norm()
    }
}

/// `(J, H0, H_N, trajectory)` at `Π0`.
pub fn objective(pi0: &Vec3, problem: &OptProblem) -> Result<(f64, Vec3, Vec3, Trajectory)> {
    let trajectory = propagate(pi0, &problem.rbl0, &problem.params, problem.steps, problem.step_size())?;
    let (h0, hn) = impulses(&problem.params, &trajectory);
    Ok((h0.norm() + hn.norm(), h0, hn, trajectory))
}

/// `|Rbl_N e3 - Λ_d|²`.
pub fn constraint(traj: &Trajectory, lambda_nd: &ReducedAttitude) -> f64 {
    (ReducedAttitude::of(&traj.terminal().rbl).0 - lambda_nd.0).norm_squared()
}

pub fn grad_objective(pi0: &Vec3, problem: &OptProblem) -> Result<Vec3> {
    Evaluation::new(pi0, problem)?.grad_objective(&problem.params)
}

pub fn grad_constraint(pi0: &Vec3, problem: &OptProblem) -> Result<Vec3> {
    Ok(Evaluation::new(pi0, problem)?.grad_constraint(&problem.lambda_nd))
}

/// Least-squares multiplier and the residual `|∇J + λ ∇C|`.
pub fn stationarity(grad_j: &Vec3, grad_c: &Vec3) -> (f64, f64) {
    let cc = grad_c.norm_squared();
    let lambda = if cc > 0.0 { -grad_j.dot(grad_c) / cc } else { 0.0 };
    (lambda, (grad_j + grad_c * lambda).norm())
}

/// Progress report after each Newton iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub multiplier: f64,
    pub objective: f64,
    pub constraint: f64,
    pub gradient_norm: f64,
}

struct Point {
    eval: Evaluation,
    grad_j: Vec3,
    grad_c: Vec3,
}

impl Point {
    fn new(pi0: &Vec3, problem: &OptProblem) -> Result<Self> {
        let eval = Evaluation::new(pi0, problem)?;
        let grad_j = eval.grad_objective(&problem.params)?;
        let grad_c = eval.grad_constraint(&problem.lambda_nd);
        Ok(Self { eval, grad_j, grad_c })
    }

    fn merit(&self, lambda: f64) -> f64 {
        self.eval.objective + lambda * self.eval.constraint
    }

    fn gradient(&self, lambda: f64) -> Vec3 {
        self.grad_j + self.grad_c * lambda
    }
}

struct Minimizer<'a, F> {
    problem: &'a OptProblem,
    iterations: usize,
    observer: F,
}

impl<F: FnMut(Progress)> Minimizer<'_, F> {
    fn hessian(&self, x: &Vec3, lambda: f64) -> Result<Mat3> {
        let delta = 1e-5 * x.norm().max(1.0);
        let mut cols = [Vec3::zeros(); 3];
        for (i, col) in cols.iter_mut().enumerate() {
            let mut e = Vec3::zeros();
            e[i] = delta;
            let plus = Point::new(&(x + e), self.problem)?.gradient(lambda);
            let minus = Point::new(&(x - e), self.problem)?.gradient(lambda);
            *col = (plus - minus) / (2.0 * delta);
        }
        let h = Mat3::from_columns(&cols);
        Ok(0.5 * (h + h.transpose()))
    }

    // Newton direction on the Levenberg-shifted Hessian, shifted until it is
    // positive definite.
    fn direction(hess: &Mat3, g: &Vec3) -> Vec3 {
        let scale = hess.norm().max(1e-12);
        let mut shift = 0.0;
        loop {
            if let Some(chol) = (hess + Mat3::identity() * shift).cholesky() {
                let d = -chol.solve(g);
                if d.dot(g) < 0.0 {
                    return d;
                }
            }
            shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
            if shift > 1e8 * scale {
                return -g / scale;
            }
        }
    }

    /// Damped Newton on `J + λ C` until `|∇| <= tol`, the budget runs out or
    /// the line search stalls.
    fn minimize(&mut self, mut point: Point, lambda: f64, tol: f64) -> Result<Point> {
        while self.iterations < self.problem.max_iter {
            let g = point.gradient(lambda);
            let g_norm = g.norm();
            if g_norm <= tol {
                break;
            }
            let hess = self.hessian(&point.eval.pi0, lambda)?;
            let d = Self::direction(&hess, &g);
            let merit = point.merit(lambda);
            let slope = g.dot(&d);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..LINE_SEARCH_STEPS {
                let trial = Point::new(&(point.eval.pi0 + d * t), self.problem)?;
                let m = trial.merit(lambda);
                let sufficient = m <= merit + 1e-4 * t * slope;
                // Near the minimum the merit change is below rounding; accept
                // steps that reduce the gradient without a measurable increase.
                let flat = m <= merit + 1e-13 * merit.abs() && trial.gradient(lambda).norm() < g_norm;
                if sufficient || flat {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
            self.iterations += 1;
            let Some(next) = accepted else { break };
            point = next;
            (self.observer)(Progress {
                iteration: self.iterations,
                multiplier: lambda,
                objective: point.eval.objective,
                constraint: point.eval.constraint,
                gradient_norm: point.gradient(lambda).norm(),
            });
        }
        Ok(point)
    }
}

pub fn optimize(problem: &OptProblem) -> Result<OptResult> {
    optimize_with_observer(problem, |_| ())
}

pub fn optimize_with_observer(problem: &OptProblem, observer: impl FnMut(Progress)) -> Result<OptResult> {
    let mut minimizer = Minimizer {
        problem,
        iterations: 0,
        observer,
    };
    let mut lambda = INITIAL_MULTIPLIER;
    let mut point = Point::new(&problem.guess, problem)?;
    let mut best_violation = f64::INFINITY;
    for _ in 0..MAX_OUTER {
        let tol = 0.5 * problem.stationarity_tol * point.grad_j.norm().max(1.0);
        point = minimizer.minimize(point, lambda, tol)?;
        let c = point.eval.constraint;
        let (multiplier, residual) = stationarity(&point.grad_j, &point.grad_c);
        let stationary = residual <= problem.stationarity_tol * point.grad_j.norm().max(1.0);
        best_violation = best_violation.min(c);
        if c <= problem.constraint_tol && stationary {
            return Ok(finish(point, minimizer.iterations, multiplier, residual));
        }
        if minimizer.iterations >= problem.max_iter {
            break;
        }
        if c > problem.constraint_tol {
            // At a minimizer of J + λC the violation scales like λ^-2; aim
            // one decade below the tolerance.
            let factor = math::sqrt(c / (0.1 * problem.constraint_tol)).clamp(2.0, 1e4);
            lambda *= factor;
        }
    }
    Err(Error::MaxIterations {
        iterations: minimizer.iterations,
        best_error: best_violation,
    })
}

fn finish(point: Point, iterations: usize, multiplier: f64, stationarity: f64) -> OptResult {
    let eval = point.eval;
    let last = *eval.trajectory.terminal();
    OptResult {
        pi0: eval.pi0,
        pi_n: last.pi,
        objective: eval.objective,
        constraint: eval.constraint,
        h0: eval.h0,
        hn: eval.hn,
        rbl_n: last.rbl,
        iterations,
        converged: true,
        multiplier,
        stationarity,
        trajectory: eval.trajectory,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::exp_so3;
    use core::f64::consts::FRAC_PI_2;

    fn symmetric_body() -> RigidBodyParams {
        RigidBodyParams::diagonal(3.0, 3.0, 2.0, 1.0).unwrap()
    }

    fn half_turn_e1() -> Rotation {
        Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]).unwrap()
    }

    fn normal_target() -> ReducedAttitude {
        ReducedAttitude::new(Vec3::new(0.0, -1.0, 0.0)).unwrap()
    }

    fn coarse_problem() -> OptProblem {
        OptProblem::new(half_turn_e1(), normal_target(), symmetric_body(), FRAC_PI_2, 400).unwrap()
    }

    fn fd_gradient(f: impl Fn(&Vec3) -> f64, x: &Vec3, eps: f64) -> Vec3 {
        Vec3::from_fn(|i, _| {
            let mut e = Vec3::zeros();
            e[i] = eps;
            (f(&(x + e)) - f(&(x - e))) / (2.0 * eps)
        })
    }

    #[test]
    fn reduced_attitude_validation() {
        assert!(ReducedAttitude::new(Vec3::new(0.0, 0.0, 1.0 + 1e-13)).is_ok());
        assert!(ReducedAttitude::new(Vec3::new(0.0, 0.0, 1.0 + 1e-11)).is_err());
        let n = ReducedAttitude::normalized(Vec3::new(3.0, 0.0, 4.0)).unwrap();
        assert!((n.vector() - Vec3::new(0.6, 0.0, 0.8)).norm() < 1e-16);
        assert!(ReducedAttitude::normalized(Vec3::zeros()).is_err());
        assert_eq!(*ReducedAttitude::of(&half_turn_e1()).vector(), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn problem_requires_axial_symmetry() {
        let asym = RigidBodyParams::diagonal(1.0, 2.8, 2.0, 1.0).unwrap();
        assert!(OptProblem::new(half_turn_e1(), normal_target(), asym, 1.0, 10).is_err());
        assert!(OptProblem::new(half_turn_e1(), normal_target(), symmetric_body(), 1.0, 0).is_err());
        let p = OptProblem::new(half_turn_e1(), normal_target(), symmetric_body(), 1.0, 10).unwrap();
        assert_eq!(p.guess, Vec3::new(3.0, 3.0, 0.0));
        assert_eq!(p.constraint_tol, 1e-10);
        assert_eq!(p.stationarity_tol, 1e-8);
    }

    #[test]
    fn objective_without_initial_impulse() {
        let prob = coarse_problem();
        let rest = prob.params.rest_momentum(&prob.rbl0);
        let (j, h0, hn, _) = objective(&rest, &prob).unwrap();
        assert_eq!(h0, Vec3::zeros());
        assert_eq!(j, hn.norm());
    }

    #[test]
    fn objective_matches_straight_line_evaluation() {
        let prob = coarse_problem();
        let pi0 = Vec3::new(0.4, -1.2, 2.0);
        let (j, ..) = objective(&pi0, &prob).unwrap();
        let traj = propagate(&pi0, &prob.rbl0, &prob.params, prob.steps, prob.horizon / prob.steps as f64).unwrap();
        let je2 = prob.params.inertia() * Vec3::y();
        let r0 = prob.rbl0.matrix();
        let last = traj.terminal();
        let rn = last.rbl.matrix();
        let h0 = pi0 - r0.transpose() * je2;
        let hn = rn.transpose() * je2 - last.pi;
        assert!((j - (h0.norm() + hn.norm())).abs() <= 1e-12);
    }

    #[test]
    fn constraint_examples() {
        let prob = coarse_problem();
        let traj = propagate(&Vec3::new(0.3, 0.1, -0.2), &prob.rbl0, &prob.params, 5, 0.01).unwrap();
        let lambda_n = ReducedAttitude::of(&traj.terminal().rbl);
        assert_eq!(constraint(&traj, &lambda_n), 0.0);
        let opposite = ReducedAttitude::normalized(-lambda_n.vector()).unwrap();
        assert!((constraint(&traj, &opposite) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn constraint_invariant_to_rotation_about_symmetry_axis() {
        // For J = diag(a, a, b), Π0 -> Rzᵀ Π0 and Rbl0 -> Rbl0 Rz map the
        // trajectory to Rbl_k Rz, leaving Rbl_N e3 unchanged.
        let prob = coarse_problem();
        let pi0 = Vec3::new(-1.0, 0.7, 1.5);
        let base = Evaluation::new(&pi0, &prob).unwrap();
        for angle in [0.3, 1.7, -2.9] {
            let rz = exp_so3(&Vec3::new(0.0, 0.0, angle));
            let mut turned = prob.clone();
            turned.rbl0 = prob.rbl0 * rz;
            let eval = Evaluation::new(&(rz.transpose() * pi0), &turned).unwrap();
            assert!((eval.constraint - base.constraint).abs() < 1e-12);
            assert!((eval.objective - base.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let prob = coarse_problem();
        let eps = 1e-6;
        for pi0 in [
            Vec3::new(3.0, 3.0, 0.0),
            Vec3::new(-1.2, 0.5, 2.2),
            Vec3::new(0.8, -2.0, -1.1),
        ] {
            let eval = Evaluation::new(&pi0, &prob).unwrap();
            let gj = eval.grad_objective(&prob.params).unwrap();
            let gc = eval.grad_constraint(&prob.lambda_nd);
            let fj = fd_gradient(|x| objective(x, &prob).unwrap().0, &pi0, eps);
            let fc = fd_gradient(|x| Evaluation::new(x, &prob).unwrap().constraint, &pi0, eps);
            assert!((gj - fj).norm() <= 1e-5 * fj.norm(), "{gj} {fj}");
            assert!((gc - fc).norm() <= 1e-5 * fc.norm(), "{gc} {fc}");
        }
    }

    #[test]
    fn gradient_at_zero_initial_impulse_is_rejected() {
        let prob = coarse_problem();
        let rest = prob.params.rest_momentum(&prob.rbl0);
        match grad_objective(&rest, &prob) {
            Err(Error::NonSmoothPoint { impulse, norm, iterate }) => {
                assert_eq!(impulse, Impulse::Initial);
                assert_eq!(norm, 0.0);
                assert_eq!(Vec3::from(iterate), rest);
            }
            other => panic!("{other:?}"),
        }
        assert!(grad_constraint(&rest, &prob).is_ok());
    }

    #[test]
    fn stationarity_examples() {
        let (l, r) = stationarity(&Vec3::new(2.0, 0.0, 0.0), &Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!((l, r), (2.0, 0.0));
        let (l, r) = stationarity(&Vec3::new(0.0, 3.0, 0.0), &Vec3::new(1.0, 0.0, 0.0));
        assert_eq!((l, r), (0.0, 3.0));
        assert_eq!(stationarity(&Vec3::new(1.0, 0.0, 0.0), &Vec3::zeros()), (0.0, 1.0));
    }

    #[test]
    fn feasible_tangent_is_null_direction_of_constraint_linearization() {
        let prob = coarse_problem();
        let eval = Evaluation::new(&Vec3::new(-2.9, -2.3, -2.7), &prob).unwrap();
        let t = eval.feasible_tangent();
        assert!((t.norm() - 1.0).abs() < 1e-14);
        let lin = hat(&Vec3::z()) * eval.transition.phi12 * t;
        assert!(lin.norm() < 1e-12 * eval.transition.phi12.norm());
    }

    #[test]
    fn coarse_problem_converges() {
        let prob = coarse_problem();
        let res = optimize(&prob).unwrap();
        assert!(res.converged);
        assert!(res.constraint <= prob.constraint_tol);
        let gj = Evaluation::new(&res.pi0, &prob).unwrap().grad_objective(&prob.params).unwrap();
        assert!(res.stationarity <= prob.stationarity_tol * gj.norm().max(1.0));
        assert!((res.rbl_n.matrix().column(2) - prob.lambda_nd.vector()).norm() < 1e-5);
    }

    #[test]
    fn budget_exhaustion_reports_violation() {
        let mut prob = coarse_problem();
        prob.max_iter = 2;
        match optimize(&prob) {
            Err(Error::MaxIterations { iterations, best_error }) => {
                assert_eq!(iterations, 2);
                assert!(best_error > 0.0 && best_error.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }
}
