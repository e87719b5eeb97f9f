//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use lgvi::bvp::{self, BvpProblem};
use lgvi::dynamics::{
    gravity_gradient, kinetic_energy, lgvi_step, propagate, rk4_oracle, rk4_unprojected, steps_for_horizon,
};
use lgvi::optimizer::{self, Evaluation, OptProblem, ReducedAttitude};
use lgvi::sensitivity::{delta_mg_matrix, step_matrices, transition};
use lgvi::so3::{
    adjoint_identity_check, exp_so3, hat, log_so3, ortho_error, trace_identity_map, vee, Mat3, Rotation, Vec3,
};
use lgvi::{DiscreteState, RigidBodyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn rows(m: [[f64; 3]; 3]) -> Rotation {
    Rotation::from_rows(m).unwrap()
}

fn satellite() -> RigidBodyParams {
    RigidBodyParams::diagonal(1.0, 2.8, 2.0, 1.0).unwrap()
}

fn symmetric_body() -> RigidBodyParams {
    RigidBodyParams::diagonal(3.0, 3.0, 2.0, 1.0).unwrap()
}

fn half_turn_e1() -> Rotation {
    rows([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
}

fn rel_err_mat(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).norm() / b.norm()
}

fn max_component_diff(a: &Vec3, b: [f64; 3]) -> f64 {
    (a - Vec3::from(b)).amax()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    exp_so3(&(random_unit(rng) * rng.random_range(0.0..PI)))
}

fn bvp_golden() -> Outcome {
    let p = satellite();
    let (n, _) = steps_for_horizon(FRAC_PI_2, 1e-3);
    let cases = [
        (
            Rotation::identity(),
            half_turn_e1(),
            [2.116, 1.531, -1.782],
            [-2.116, 1.531, 1.782],
        ),
        (
            half_turn_e1(),
            rows([[-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]]),
            [-1.323, 1.798, 0.932],
            [0.397, -1.586, -1.310],
        ),
        (
            half_turn_e1(),
            rows([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            [1.047, 0.437, 2.800],
            [-1.416, -1.761, 1.159],
        ),
    ];
    let mut ok = n == 1571;
    let mut detail = format!("N={n}");
    for (i, (r0, rd, pi0, minus_pin)) in cases.into_iter().enumerate() {
        let start = Instant::now();
        let prob = BvpProblem::new(r0, rd, p, FRAC_PI_2, n);
        match bvp::solve(&prob) {
            Ok(sol) => {
                let secs = start.elapsed().as_secs_f64();
                let d0 = max_component_diff(&sol.pi0, pi0);
                let dn = max_component_diff(&-sol.pi_n, minus_pin);
                let minus_pi_n = -sol.pi_n;
                ok &= d0 <= 1e-2 && dn <= 1e-2 && sol.final_error <= 1e-14 && secs < 30.0;
                let _ = write!(
                    detail,
                    "; case {}: Pi0={:.3?} -PiN={:.3?} (listed {minus_pin:?}) dPi0={d0:.1e} dPiN={dn:.1e} err={:.1e} it={} {secs:.2}s",
                    i + 1,
                    sol.pi0.as_slice(),
                    minus_pi_n.as_slice(),
                    sol.final_error,
                    sol.iterations
                );
            }
            Err(e) => {
                ok = false;
                let _ = write!(detail, "; case {}: {e}", i + 1);
            }
        }
    }
    (ok, detail)
}

fn optimizer_golden() -> Outcome {
    let (n, _) = steps_for_horizon(FRAC_PI_2, 1e-3);
    let lambda = ReducedAttitude::new(Vec3::new(0.0, -1.0, 0.0)).unwrap();
    let prob = OptProblem::new(half_turn_e1(), lambda, symmetric_body(), FRAC_PI_2, n).unwrap();
    let start = Instant::now();
    match optimizer::optimize(&prob) {
        Ok(res) => {
            let secs = start.elapsed().as_secs_f64();
            let d0 = max_component_diff(&res.pi0, [-2.915, -2.347, -2.734]);
            let dn = max_component_diff(&-res.pi_n, [-0.343, 2.686, 2.734]);
            let axis = (res.rbl_n.matrix().column(2) - lambda.vector()).norm();
            let ok = (res.objective - 6.771).abs() <= 0.02
                && res.constraint <= 1e-8
                && d0 <= 2e-2
                && res.converged
                && secs < 300.0;
            (
                ok,
                format!(
                    "J={:.4} C={:.2e} Pi0={:.3?} dPi0={d0:.1e} dPiN={dn:.1e} |Rbl_N e3 - Lambda_d|={axis:.1e} it={} {secs:.2}s",
                    res.objective,
                    res.constraint,
                    res.pi0.as_slice(),
                    res.iterations
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn structure_preservation() -> Outcome {
    let p = satellite();
    let pi0 = Vec3::new(2.116, 1.531, -1.782);
    let r0 = exp_so3(&Vec3::new(0.3, -0.2, 0.5));
    let (n, h) = (100_000, 1e-2);
    match propagate(&pi0, &r0, &p, n, h) {
        Ok(traj) => {
            let lgvi = traj.max_ortho_error();
            let rk4 = rk4_unprojected(&pi0, &r0, &p, n, h).max_ortho_error();
            (
                lgvi <= 1e-12 && rk4 > 1e-9,
                format!("{n} steps h={h}: LGVI max|RᵀR-I|={lgvi:.2e}, unprojected RK4 {rk4:.2e}"),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn conservation() -> Outcome {
    let p = RigidBodyParams::diagonal(1.0, 2.8, 2.0, 0.0).unwrap();
    let pi0 = Vec3::new(2.116, 1.531, -1.782);
    let r0 = exp_so3(&Vec3::new(0.3, -0.2, 0.5));
    let (n, h) = (100_000, 1e-3);
    let traj = match propagate(&pi0, &r0, &p, n, h) {
        Ok(t) => t,
        Err(e) => return (false, e.to_string()),
    };
    // With ω0 = 0 the LVLH frame is inertial, so Rbi_k = Rbl_k.
    let spatial0 = traj.states[0].rbl * traj.states[0].pi;
    let momentum = traj
        .states
        .iter()
        .map(|s| (s.rbl * s.pi - spatial0).norm())
        .fold(0.0, f64::max);
    let energy: Vec<f64> = traj.states.iter().map(|s| kinetic_energy(s, &p)).collect();
    let window = 10_000;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let first = mean(&energy[..window]);
    let last = mean(&energy[energy.len() - window..]);
    let drift = (last - first).abs() / first;
    let swing = energy.iter().map(|e| (e - energy[0]).abs()).fold(0.0, f64::max) / energy[0];
    (
        momentum <= 1e-12 && drift <= 1e-8,
        format!(
            "{n} steps h={h}: max|Rbi Π - Rbi0 Π0|={momentum:.2e}, windowed energy drift={drift:.2e}, max energy swing={swing:.2e}"
        ),
    )
}

fn sensitivity_correctness(rng: &mut ChaCha8Rng) -> Outcome {
    let p = satellite();
    let (n, h) = steps_for_horizon(FRAC_PI_2, 1e-3);
    let pi0 = Vec3::new(2.116, 1.531, -1.782);
    let r0 = Rotation::identity();
    let traj = propagate(&pi0, &r0, &p, n, h).unwrap();
    let phi = transition(&traj).unwrap();
    let eps = 1e-6;
    let terminal = traj.terminal();
    let mut fd12 = Mat3::zeros();
    let mut fd22 = Mat3::zeros();
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = eps;
        let plus = *propagate(&(pi0 + e), &r0, &p, n, h).unwrap().terminal();
        let minus = *propagate(&(pi0 - e), &r0, &p, n, h).unwrap().terminal();
        let zp = log_so3(&(terminal.rbl.transpose() * plus.rbl)).unwrap();
        let zm = log_so3(&(terminal.rbl.transpose() * minus.rbl)).unwrap();
        fd12.set_column(i, &((zp - zm) / (2.0 * eps)));
        fd22.set_column(i, &((plus.pi - minus.pi) / (2.0 * eps)));
    }
    let e12 = rel_err_mat(&phi.phi12, &fd12);
    let e22 = rel_err_mat(&phi.phi22, &fd22);

    // Per-step blocks at sampled nodes of the same trajectory.
    let mut step_err: f64 = 0.0;
    for k in (0..n).step_by(157) {
        let s = traj.states[k];
        let f = traj.relative_rotations[k];
        let mg = gravity_gradient(&s.rbl, &p);
        let mg1 = gravity_gradient(&traj.states[k + 1].rbl, &p);
        let sm = step_matrices(&s, &f, &mg, &mg1, &p, h).unwrap();
        let base = traj.states[k + 1];
        let mut blocks = [Mat3::zeros(); 4];
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = eps;
            let run = |zeta: Vec3, dpi: Vec3| {
                let st = DiscreteState::new(s.pi + dpi, s.rbl * exp_so3(&zeta));
                lgvi_step(&st, &p, h).unwrap().0
            };
            for (which, (zeta, dpi)) in [(e, Vec3::zeros()), (Vec3::zeros(), e)].into_iter().enumerate() {
                let plus = run(zeta, dpi);
                let minus = run(-zeta, -dpi);
                let z = (log_so3(&(base.rbl.transpose() * plus.rbl)).unwrap()
                    - log_so3(&(base.rbl.transpose() * minus.rbl)).unwrap())
                    / (2.0 * eps);
                let d = (plus.pi - minus.pi) / (2.0 * eps);
                // which = 0: ζ_k column of (A, C); which = 1: δΠ_k column of (B, D).
                blocks[which].set_column(i, &z);
                blocks[2 + which].set_column(i, &d);
            }
        }
        for (analytic, fd) in [(sm.a, blocks[0]), (sm.b, blocks[1]), (sm.c, blocks[2]), (sm.d, blocks[3])] {
            step_err = step_err.max(rel_err_mat(&analytic, &fd));
        }
    }

    let mut m_err: f64 = 0.0;
    for _ in 0..100 {
        let r = random_rotation(rng);
        let mut fd = Mat3::zeros();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = eps;
            let col = (gravity_gradient(&(r * exp_so3(&e)), &p) - gravity_gradient(&(r * exp_so3(&-e)), &p))
                / (2.0 * eps);
            fd.set_column(i, &col);
        }
        m_err = m_err.max(rel_err_mat(&delta_mg_matrix(&r, &p), &fd));
    }
    (
        e12 < 1e-4 && e22 < 1e-4 && step_err < 1e-5 && m_err < 1e-5,
        format!("Phi12 rel={e12:.1e} Phi22 rel={e22:.1e}; per-step A,B,C,D max rel={step_err:.1e}; M max rel={m_err:.1e} (100 attitudes)"),
    )
}

fn gradient_correctness(rng: &mut ChaCha8Rng) -> Outcome {
    let (n, _) = steps_for_horizon(FRAC_PI_2, 1e-3);
    let lambda = ReducedAttitude::new(Vec3::new(0.0, -1.0, 0.0)).unwrap();
    let prob = OptProblem::new(half_turn_e1(), lambda, symmetric_body(), FRAC_PI_2, n).unwrap();
    let eps = 1e-6;
    let mut ej: f64 = 0.0;
    let mut ec: f64 = 0.0;
    let mut samples = 0;
    while samples < 20 {
        let pi0 = Vec3::from_fn(|_, _| rng.random_range(-4.0..4.0));
        let eval = Evaluation::new(&pi0, &prob).unwrap();
        if eval.h0.norm() < 0.1 || eval.hn.norm() < 0.1 {
            continue;
        }
        samples += 1;
        let gj = eval.grad_objective(&prob.params).unwrap();
        let gc = eval.grad_constraint(&prob.lambda_nd);
        let mut fj = Vec3::zeros();
        let mut fc = Vec3::zeros();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = eps;
            let plus = Evaluation::new(&(pi0 + e), &prob).unwrap();
            let minus = Evaluation::new(&(pi0 - e), &prob).unwrap();
            fj[i] = (plus.objective - minus.objective) / (2.0 * eps);
            fc[i] = (plus.constraint - minus.constraint) / (2.0 * eps);
        }
        ej = ej.max((gj - fj).norm() / fj.norm());
        ec = ec.max((gc - fc).norm() / fc.norm());
    }
    (
        ej < 1e-5 && ec < 1e-5,
        format!("{samples} random Pi0: max rel err grad J={ej:.1e}, grad C={ec:.1e}"),
    )
}

fn convergence_order() -> Outcome {
    let p = satellite();
    let pi0 = Vec3::new(2.116, 1.531, -1.782);
    let r0 = exp_so3(&Vec3::new(0.3, -0.2, 0.5));
    let mut diffs = Vec::new();
    for h in [4e-3, 2e-3, 1e-3, 5e-4] {
        let (n, h) = steps_for_horizon(1.0, h);
        let a = *propagate(&pi0, &r0, &p, n, h).unwrap().terminal();
        let oracle = rk4_oracle(&pi0, &r0, &p, n, h);
        let b = oracle.terminal();
        diffs.push((a.pi - b.pi).norm() + (a.rbl.matrix() - b.attitude).norm());
    }
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[0] / w[1]).collect();
    (
        ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        format!(
            "T=1, h=4e-3..5e-4: diffs=[{}] ratios={ratios:.3?}",
            diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn so3_properties(rng: &mut ChaCha8Rng) -> Outcome {
    let trials = 10_000;
    let mut worst = [0.0f64; 5];
    for _ in 0..trials {
        let scale = 10f64.powf(rng.random_range(-8.0..2.0));
        let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * scale;
        let back = vee(&hat(&v)).unwrap();
        worst[0] = worst[0].max((back - v).norm());

        let theta = rng.random_range(0.0..(PI - 1e-3));
        let w = random_unit(rng) * theta;
        let r = exp_so3(&w);
        worst[1] = worst[1].max(ortho_error(r.matrix()));
        worst[2] = worst[2].max((log_so3(&r).unwrap() - w).norm());

        let x = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let (lhs, rhs) = adjoint_identity_check(&r, &x);
        worst[3] = worst[3].max((lhs - rhs).norm());

        let a = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let lhs = hat(&x) * a + a.transpose() * hat(&x);
        let rhs = hat(&(trace_identity_map(&a) * x));
        worst[4] = worst[4].max((lhs - rhs).norm());
    }
    (
        worst[0] == 0.0 && worst[1] <= 1e-12 && worst[2] <= 1e-10 && worst[3] < 1e-13 && worst[4] < 1e-13,
        format!(
            "{trials} trials: vee∘hat={:.1e} exp ortho={:.1e} log∘exp={:.1e} adjoint={:.1e} trace={:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let criteria: [(&str, Box<dyn FnOnce(&mut ChaCha8Rng) -> Outcome>); 8] = [
        ("BVP golden maneuvers", Box::new(|_| bvp_golden())),
        ("optimizer golden maneuver", Box::new(|_| optimizer_golden())),
        ("structure preservation", Box::new(|_| structure_preservation())),
        ("free-body conservation", Box::new(|_| conservation())),
        ("sensitivity correctness", Box::new(sensitivity_correctness)),
        ("gradient correctness", Box::new(gradient_correctness)),
        ("second-order convergence", Box::new(|_| convergence_order())),
        ("so3 property suite", Box::new(so3_properties)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check(&mut rng);
        failures += usize::from(!ok);
        println!(
            "{} [{}] {name} ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
