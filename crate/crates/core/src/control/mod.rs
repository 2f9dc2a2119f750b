//! Steering controllers: incremental state-space MPC and a lookahead PID.
//!
//! Controllers only see the detected lane-center polynomial and body-frame
//! rate measurements ([`BodyRates`]); world pose never reaches them.

mod mpc;
mod pid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mpc::{
    build_incremental, build_prediction, ldlt_solve, mpc_control, mpc_reference, solve_mpc, solve_unconstrained,
    IncrementalModel, MpcConfig, MpcDiagnostics, MpcSolution, PredictionMatrices,
};
pub use pid::{pid_control, PidGains, PidState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("horizon/shape mismatch: {0}")]
    HorizonMismatch(String),
    #[error("MPC Hessian is not positive definite (pivot {0:e})")]
    SingularHessian(f64),
    #[error("lane polynomial is not valid")]
    InvalidLane,
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Vehicle(#[from] crate::vehicle::VehicleError),
}

/// Steering and throttle surrogate sent to the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub delta_f: f64,
    pub accel: f64,
}

/// On-board measurements available to a controller (speedometer and IMU).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyRates {
    pub v_x: f64,
    pub v_y: f64,
    pub phi_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringLimits {
    pub delta_max: f64,
    /// Per control period.
    pub ddelta_max: f64,
}

impl From<&crate::vehicle::VehicleParams> for SteeringLimits {
    fn from(p: &crate::vehicle::VehicleParams) -> Self {
        Self {
            delta_max: p.delta_max,
            ddelta_max: p.ddelta_max,
        }
    }
}

/// Proportional speed loop shared by both controllers.
pub fn speed_command(kp_v: f64, target: f64, measured: f64) -> f64 {
    kp_v * (target - measured)
}
