//! Maneuver configuration files (TOML).
//!
//! ```toml
//! inertia = [1.0, 2.8, 2.0]            # or a 3x3 matrix
//! omega0 = 1.0
//! maneuver_time = 1.5707963267948966
//! steps = 1571
//! initial_attitude = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
//! desired_attitude = { axis = [1, 0, 0], angle = 3.141592653589793 }
//! initial_momentum = [2.116, 1.531, -1.782]   # propagate
//! lambda_desired = [0, -1, 0]                 # optimize
//!
//! [bvp]
//! epsilon = 1e-14
//! c = 0.1
//!
//! [opt]
//! constraint_tol = 1e-10
//! ```

use std::path::Path;

use lgvi::so3::ortho_error;
use lgvi::{BvpProblem, Mat3, OptProblem, ReducedAttitude, RigidBodyParams, Rotation, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Attitude matrices within this orthonormality error are used verbatim.
pub const EXACT_TOL: f64 = 1e-12;
/// Attitude matrices within this orthonormality error are projected onto
/// SO(3) with a warning; larger errors are rejected.
pub const PROJECT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Diagonal([f64; 3]),
    Matrix([[f64; 3]; 3]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttitudeSpec {
    /// Row-major rotation matrix.
    Matrix([[f64; 3]; 3]),
    AxisAngle { axis: [f64; 3], angle: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvpSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverConfig {
    pub inertia: InertiaSpec,
    pub omega0: f64,
    pub maneuver_time: f64,
    /// Number of steps; the step size is `maneuver_time / steps`.
    pub steps: usize,
    pub initial_attitude: AttitudeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired_attitude: Option<AttitudeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_momentum: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_desired: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub bvp: BvpSettings,
    #[serde(default, skip_serializing_if = "is_default")]
    pub opt: OptSettings,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// A rotation read from the configuration, with the orthonormality error of
/// the input if it had to be projected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedAttitude {
    pub rotation: Rotation,
    pub projected_from: Option<f64>,
}

impl AttitudeSpec {
    pub fn resolve(&self, name: &str) -> Result<ResolvedAttitude, CliError> {
        match self {
            AttitudeSpec::Matrix(rows) => {
                let m = Mat3::from_fn(|i, j| rows[i][j]);
                let err = ortho_error(&m);
                let det = m.determinant();
                let invalid = || CliError::Config(format!("{name}: attitude not in SO(3) (|RᵀR - I| = {err:e}, det = {det})"));
                if !err.is_finite() || err > PROJECT_TOL || !(det > 0.0) {
                    return Err(invalid());
                }
                if err <= EXACT_TOL {
                    let rotation = Rotation::from_matrix(m).map_err(|_| invalid())?;
                    return Ok(ResolvedAttitude {
                        rotation,
                        projected_from: None,
                    });
                }
                let rotation = Rotation::renormalize(&m).map_err(|_| invalid())?;
                Ok(ResolvedAttitude {
                    rotation,
                    projected_from: Some(err),
                })
            }
            AttitudeSpec::AxisAngle { axis, angle } => {
                let rotation = Rotation::from_axis_angle(&Vec3::from(*axis), *angle)
                    .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                Ok(ResolvedAttitude {
                    rotation,
                    projected_from: None,
                })
            }
        }
    }
}

impl ManeuverConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration values are always representable in TOML")
    }

    pub fn params(&self) -> Result<RigidBodyParams, CliError> {
        let j = match &self.inertia {
            InertiaSpec::Diagonal(d) => Mat3::from_diagonal(&Vec3::from(*d)),
            InertiaSpec::Matrix(rows) => Mat3::from_fn(|i, j| rows[i][j]),
        };
        RigidBodyParams::new(j, self.omega0).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Step size `maneuver_time / steps`, after validating both.
    pub fn step_size(&self) -> Result<f64, CliError> {
        if self.steps == 0 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        if !(self.maneuver_time > 0.0) || !self.maneuver_time.is_finite() {
            return Err(CliError::Config("maneuver_time must be positive".into()));
        }
        Ok(self.maneuver_time / self.steps as f64)
    }

    pub fn initial_attitude(&self) -> Result<ResolvedAttitude, CliError> {
        self.initial_attitude.resolve("initial_attitude")
    }

    pub fn desired_attitude(&self) -> Result<ResolvedAttitude, CliError> {
        self.desired_attitude
            .as_ref()
            .ok_or_else(|| CliError::Config("desired_attitude is required".into()))?
            .resolve("desired_attitude")
    }

    pub fn initial_momentum(&self) -> Result<Vec3, CliError> {
        self.initial_momentum
            .map(Vec3::from)
            .ok_or_else(|| CliError::Config("initial_momentum is required".into()))
    }

    /// Boundary value problem with unset `[bvp]` fields at their defaults.
    pub fn bvp_problem(&self) -> Result<BvpProblem, CliError> {
        self.step_size()?;
        let mut prob = BvpProblem::new(
            self.initial_attitude()?.rotation,
            self.desired_attitude()?.rotation,
            self.params()?,
            self.maneuver_time,
            self.steps,
        );
        if let Some(eps) = self.bvp.epsilon {
            prob.epsilon = eps;
        }
        if let Some(c) = self.bvp.c {
            prob.scaling = c;
        }
        if let Some(n) = self.bvp.max_iter {
            prob.max_iter = n;
        }
        prob.guess = self.bvp.guess.map(Vec3::from);
        prob.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(prob)
    }

    /// Reduced-attitude problem with unset `[opt]` fields at their defaults.
    pub fn opt_problem(&self) -> Result<OptProblem, CliError> {
        self.step_size()?;
        let lambda = self
            .lambda_desired
            .ok_or_else(|| CliError::Config("lambda_desired is required".into()))?;
        let lambda = ReducedAttitude::new(Vec3::from(lambda)).map_err(|e| CliError::Config(format!("lambda_desired: {e}")))?;
        let mut prob = OptProblem::new(
            self.initial_attitude()?.rotation,
            lambda,
            self.params()?,
            self.maneuver_time,
            self.steps,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(g) = self.opt.guess {
            prob.guess = Vec3::from(g);
        }
        if let Some(t) = self.opt.constraint_tol {
            prob.constraint_tol = t;
        }
        if let Some(t) = self.opt.stationarity_tol {
            prob.stationarity_tol = t;
        }
        if let Some(n) = self.opt.max_iter {
            prob.max_iter = n;
        }
        if !(prob.constraint_tol > 0.0 && prob.stationarity_tol > 0.0) {
            return Err(CliError::Config("optimizer tolerances must be positive".into()));
        }
        Ok(prob)
    }
}
