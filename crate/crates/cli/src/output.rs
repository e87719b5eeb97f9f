//! Trajectory CSV, plot data and JSON reports. Every file is written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use lgvi::dynamics::kinetic_energy;
use lgvi::{BvpSolution, OptResult, Trajectory, Vec3};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const CSV_HEADER: [&str; 19] = [
    "k",
    "t",
    "Pi1",
    "Pi2",
    "Pi3",
    "Omega1",
    "Omega2",
    "Omega3",
    "Rbl11",
    "Rbl12",
    "Rbl13",
    "Rbl21",
    "Rbl22",
    "Rbl23",
    "Rbl31",
    "Rbl32",
    "Rbl33",
    "ortho_error",
    "kinetic_energy",
];

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `path` by filling a temporary file in the same directory and
/// renaming it over the target.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(|e| CliError::io(path, e))?;
        buf.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn trajectory_rows(traj: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.states.iter().map(move |s| {
        let omega = s.angular_velocity(&traj.params);
        let r = s.rbl.matrix();
        let mut row = Vec::with_capacity(19);
        row.push(s.k.to_string());
        row.push(fmt_f64(traj.time(s.k)));
        row.extend(s.pi.iter().chain(omega.iter()).map(|x| fmt_f64(*x)));
        for i in 0..3 {
            row.extend((0..3).map(|j| fmt_f64(r[(i, j)])));
        }
        row.push(fmt_f64(s.rbl.ortho_error()));
        row.push(fmt_f64(kinetic_energy(s, &traj.params)));
        row
    })
}

/// One row per node: `k, t, Π, Ω = J⁻¹Π, Rbl (row-major), ortho_error, kinetic_energy`.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&CSV_HEADER)?;
        for row in trajectory_rows(traj) {
            csv.write_record(&row)?;
        }
        csv.flush()
    })
}

/// `omega.dat` (`t Ω1 Ω2 Ω3`) and `attitude.dat` (`t` and the nine entries
/// of `Rbl`, row-major) in `dir`, whitespace separated without a header.
pub fn emit_plot_data(traj: &Trajectory, dir: &Path) -> Result<[PathBuf; 2], CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let omega_path = dir.join("omega.dat");
    let attitude_path = dir.join("attitude.dat");
    write_atomic(&omega_path, |w| {
        for s in &traj.states {
            let o = s.angular_velocity(&traj.params);
            writeln!(
                w,
                "{} {} {} {}",
                fmt_f64(traj.time(s.k)),
                fmt_f64(o[0]),
                fmt_f64(o[1]),
                fmt_f64(o[2])
            )?;
        }
        Ok(())
    })?;
    write_atomic(&attitude_path, |w| {
        for s in &traj.states {
            let r = s.rbl.matrix();
            write!(w, "{}", fmt_f64(traj.time(s.k)))?;
            for i in 0..3 {
                for j in 0..3 {
                    write!(w, " {}", fmt_f64(r[(i, j)]))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok([omega_path, attitude_path])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagateReport {
    pub steps: usize,
    pub step_size: f64,
    pub pi_n: [f64; 3],
    pub rbl_n: [[f64; 3]; 3],
    pub max_ortho_error: f64,
}

impl PropagateReport {
    pub fn new(traj: &Trajectory) -> Self {
        let last = traj.terminal();
        Self {
            steps: traj.steps(),
            step_size: traj.h,
            pi_n: arr(&last.pi),
            rbl_n: rows(last.rbl.matrix()),
            max_ortho_error: traj.max_ortho_error(),
        }
    }
}

fn rows(m: &lgvi::Mat3) -> [[f64; 3]; 3] {
    core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BvpReport {
    pub pi0: [f64; 3],
    pub pi_n: [f64; 3],
    pub h0: [f64; 3],
    pub hn: [f64; 3],
    /// `|H0| + |H_N|`.
    pub total_impulse: f64,
    pub iterations: usize,
    pub final_error: f64,
    pub steps: usize,
    pub step_size: f64,
}

impl BvpReport {
    pub fn new(sol: &BvpSolution) -> Self {
        Self {
            pi0: arr(&sol.pi0),
            pi_n: arr(&sol.pi_n),
            h0: arr(&sol.h0),
            hn: arr(&sol.hn),
            total_impulse: sol.h0.norm() + sol.hn.norm(),
            iterations: sol.iterations,
            final_error: sol.final_error,
            steps: sol.trajectory.steps(),
            step_size: sol.trajectory.h,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptReport {
    pub pi0: [f64; 3],
    pub pi_n: [f64; 3],
    pub objective: f64,
    pub constraint: f64,
    pub h0: [f64; 3],
    pub hn: [f64; 3],
    pub rbl_n: [[f64; 3]; 3],
    pub lambda_n: [f64; 3],
    pub iterations: usize,
    pub converged: bool,
    pub multiplier: f64,
    pub stationarity: f64,
}

impl OptReport {
    pub fn new(res: &OptResult) -> Self {
        let m = res.rbl_n.matrix();
        Self {
            pi0: arr(&res.pi0),
            pi_n: arr(&res.pi_n),
            objective: res.objective,
            constraint: res.constraint,
            h0: arr(&res.h0),
            hn: arr(&res.hn),
            rbl_n: rows(m),
            lambda_n: [m[(0, 2)], m[(1, 2)], m[(2, 2)]],
            iterations: res.iterations,
            converged: res.converged,
            multiplier: res.multiplier,
            stationarity: res.stationarity,
        }
    }
}

pub fn report_json(report: &impl Serialize) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only numbers and flags")
}

pub fn write_report(report: &impl Serialize, path: &Path) -> Result<(), CliError> {
    let text = report_json(report);
    write_atomic(path, |w| writeln!(w, "{text}"))
}
