//! The `propagate`, `solve-bvp` and `optimize` commands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lgvi::dynamics::propagate;
use lgvi::{bvp, optimizer};

use crate::config::{ManeuverConfig, ResolvedAttitude};
use crate::error::CliError;
use crate::output::{
    emit_plot_data, report_json, write_report, write_trajectory_csv, BvpReport, OptReport, PropagateReport,
};

/// Rigid spacecraft attitude maneuvers in a circular orbit.
///
/// Exit status: 0 ok, 1 I/O error, 2 configuration error, 3 integrator
/// failure, 4 no convergence, 5 singular sensitivity, 6 non-smooth point.
#[derive(Debug, Parser)]
#[command(name = "lgvi", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate from `initial_attitude` and `initial_momentum`; `--output`
    /// is the trajectory CSV path.
    Propagate(CommonArgs),
    /// Solve the rest-to-rest maneuver to `desired_attitude`; `--output` is a
    /// directory receiving report.json and trajectory.csv.
    SolveBvp(CommonArgs),
    /// Minimum-impulse maneuver to the reduced attitude `lambda_desired`;
    /// `--output` is a directory receiving report.json and trajectory.csv.
    Optimize(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write omega.dat and attitude.dat next to the trajectory.
    #[arg(long)]
    pub plot_data: bool,
    /// Print per-iteration progress to stderr.
    #[arg(long)]
    pub verbose: bool,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Propagate(args) => cmd_propagate(args),
        Command::SolveBvp(args) => cmd_solve_bvp(args),
        Command::Optimize(args) => cmd_optimize(args),
    }
}

fn warn_projection(name: &str, att: &ResolvedAttitude) {
    if let Some(err) = att.projected_from {
        eprintln!("warning: {name} projected onto SO(3) (|RᵀR - I| was {err:e})");
    }
}

// A closed stdout (e.g. piped into `head`) is not an error; the files are
// already written.
fn print_report(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn cmd_propagate(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = ManeuverConfig::load(&args.config)?;
    let params = cfg.params()?;
    let h = cfg.step_size()?;
    let r0 = cfg.initial_attitude()?;
    warn_projection("initial_attitude", &r0);
    let pi0 = cfg.initial_momentum()?;
    let traj = propagate(&pi0, &r0.rotation, &params, cfg.steps, h)?;
    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_dir(dir)?;
    }
    write_trajectory_csv(&traj, &args.output)?;
    if args.plot_data {
        let dir = args.output.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        emit_plot_data(&traj, dir)?;
    }
    let report = PropagateReport::new(&traj);
    if args.verbose {
        eprintln!("propagated {} steps, max |RᵀR - I| = {:e}", report.steps, report.max_ortho_error);
    }
    print_report(&report_json(&report))
}

pub fn cmd_solve_bvp(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = ManeuverConfig::load(&args.config)?;
    warn_projection("initial_attitude", &cfg.initial_attitude()?);
    warn_projection("desired_attitude", &cfg.desired_attitude()?);
    let prob = cfg.bvp_problem()?;
    let verbose = args.verbose;
    let sol = bvp::solve_with_observer(&prob, |i, e| {
        if verbose {
            eprintln!("iteration {i}: |zeta_N| = {e:e}");
        }
    })?;
    prepare_dir(&args.output)?;
    let report = BvpReport::new(&sol);
    write_report(&report, &args.output.join("report.json"))?;
    write_trajectory_csv(&sol.trajectory, &args.output.join("trajectory.csv"))?;
    if args.plot_data {
        emit_plot_data(&sol.trajectory, &args.output)?;
    }
    print_report(&report_json(&report))
}

pub fn cmd_optimize(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = ManeuverConfig::load(&args.config)?;
    warn_projection("initial_attitude", &cfg.initial_attitude()?);
    let prob = cfg.opt_problem()?;
    let verbose = args.verbose;
    let res = optimizer::optimize_with_observer(&prob, |p| {
        if verbose {
            eprintln!(
                "iteration {}: J = {:.12} C = {:e} |grad| = {:e} penalty = {:e}",
                p.iteration, p.objective, p.constraint, p.gradient_norm, p.multiplier
            );
        }
    })?;
    prepare_dir(&args.output)?;
    let report = OptReport::new(&res);
    write_report(&report, &args.output.join("report.json"))?;
    write_trajectory_csv(&res.trajectory, &args.output.join("trajectory.csv"))?;
    if args.plot_data {
        emit_plot_data(&res.trajectory, &args.output)?;
    }
    print_report(&report_json(&report))
}
