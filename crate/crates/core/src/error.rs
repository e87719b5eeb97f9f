use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which of the two maneuver impulses an error refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Impulse {
    Initial,
    Terminal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Matrix passed to `vee` is not skew-symmetric.
    NotSkew { asymmetry: f64 },
    /// Matrix is not a proper rotation.
    NotRotation { ortho_error: f64, det: f64 },
    /// Rotation angle too close to pi for a well-defined logarithm.
    NearPiAmbiguity { angle: f64 },
    /// Invalid physical or solver parameters.
    InvalidInput(&'static str),
    /// Newton iteration for the relative rotation did not converge.
    NoConvergence { step: Option<usize>, residual: f64 },
    /// `tr(F Jd) I - F Jd` is singular at the given step.
    SingularStep { step: usize, condition: f64 },
    /// The attitude sensitivity block of the transition matrix is singular.
    SingularSensitivity { condition: f64 },
    /// Iteration budget exhausted before meeting the tolerance.
    MaxIterations { iterations: usize, best_error: f64 },
    /// An impulse norm vanished where its gradient is required; `iterate` is
    /// the `Π0` at which it happened.
    NonSmoothPoint { impulse: Impulse, norm: f64, iterate: [f64; 3] },
}

impl Error {
    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            Error::NoConvergence { residual, .. } => Error::NoConvergence {
                step: Some(k),
                residual,
            },
            Error::SingularStep { condition, .. } => Error::SingularStep { step: k, condition },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSkew { asymmetry } => {
                write!(f, "matrix is not skew-symmetric (|M + M^T| = {asymmetry:e})")
            }
            Error::NotRotation { ortho_error, det } => write!(
                f,
                "attitude not in SO(3) (|R^T R - I| = {ortho_error:e}, det = {det})"
            ),
            Error::NearPiAmbiguity { angle } => write!(
                f,
                "rotation angle {angle} is too close to pi for a unique logarithm"
            ),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NoConvergence { step: Some(k), residual } => write!(
                f,
                "implicit step equation did not converge at step {k} (residual {residual:e})"
            ),
            Error::NoConvergence { step: None, residual } => write!(
                f,
                "implicit step equation did not converge (residual {residual:e})"
            ),
            Error::SingularStep { step, condition } => write!(
                f,
                "singular step linearization at step {step} (condition {condition:e})"
            ),
            Error::SingularSensitivity { condition } => {
                write!(f, "attitude sensitivity Phi12 is singular (condition {condition:e})")
            }
            Error::MaxIterations { iterations, best_error } => write!(
                f,
                "no convergence after {iterations} iterations (best error {best_error:e})"
            ),
            Error::NonSmoothPoint { impulse, norm, iterate } => write!(
                f,
                "{} impulse norm {norm:e} is too small to differentiate at Pi0 = {iterate:?}",
                match impulse {
                    Impulse::Initial => "initial",
                    Impulse::Terminal => "terminal",
                }
            ),
        }
    }
}

impl core::error::Error for Error {}
