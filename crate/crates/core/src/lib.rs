//! Attitude dynamics of a rigid spacecraft in a circular orbit, integrated
//! on SO(3) with a Lie group variational integrator.
//!
//! The crate is `no_std` (it needs `alloc` for trajectories) and is organized
//! bottom-up:
//!
//! - [`so3`]: hat/vee, exponential map, logarithm and the [`Rotation`] type.
//! - [`dynamics`]: gravity-gradient moment, the variational integrator step,
//!   trajectory propagation and a Runge-Kutta reference integrator.
//! - [`sensitivity`]: linearization of the discrete flow and the 6x6
//!   transition matrix.
//! - [`bvp`]: shooting solver for rest-to-rest maneuvers between two attitudes.
//! - [`optimizer`]: minimum-impulse maneuver to a reduced attitude.
//!
//! Attitudes `Rbl` map the body frame to the local-vertical/local-horizontal
//! (LVLH) frame, which rotates about its second axis at the orbital rate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bvp;
pub mod dynamics;
mod error;
mod math;
pub mod optimizer;
pub mod sensitivity;
pub mod so3;

pub use bvp::{BvpProblem, BvpSolution};
pub use dynamics::{DiscreteState, RigidBodyParams, Trajectory};
pub use error::{Error, Impulse, Result};
pub use optimizer::{OptProblem, OptResult, ReducedAttitude};
pub use sensitivity::{StepMatrices, TransitionMatrix, VariationVector};
pub use so3::{Mat3, Rotation, Vec3};
