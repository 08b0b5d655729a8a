//! Integrated vehicle yaw-stability control.
//!
//! An upper controller (velocity-scheduled model predictive control) commands a
//! superimposed front steering angle and a corrective yaw moment. A rule-based
//! lower controller turns that moment into a brake torque on a single wheel.
//! The loop is closed around a nonlinear single-track vehicle model.
//!
//! Module map:
//!
//! - [`vehicle`]: parameters, saturating tire law and the nonlinear plant.
//! - [`linear`]: linearized single-track state space and its ZOH discretization.
//! - [`reference`]: desired yaw rate from an ideal (μ = 1) reference vehicle.
//! - [`qp`]: dense strictly convex QP solver (dual active set).
//! - [`mpc`]: controller bank, condensation and the receding-horizon step.
//! - [`brake`]: wheel selection and brake torque allocation.
//! - [`sim`]: closed-loop scenarios and run metrics.
//! - [`cli`]: scenario files, CSV / SVG output and the `simulate` / `sweep` commands.

pub mod brake;
pub mod cli;
mod error;
pub mod linear;
pub mod mpc;
pub mod qp;
pub mod reference;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
