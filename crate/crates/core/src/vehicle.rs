//! Single-track (bicycle) lateral dynamics at fixed forward speed with a
//! linear tire law, its Jacobian linearization and forward-Euler discretization.
//!
//! Body frame: `v_y` is lateral velocity (positive left), `phi_dot` yaw rate
//! (positive counterclockwise). Positive steering turns left.

use nalgebra::{Matrix2x4, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::track::wrap_angle;
use crate::Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("state became non-finite")]
    NonFiniteState,
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("invalid time step: {0}")]
    InvalidStep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub inertia_z: f64,
    /// CoG → front axle, m
    pub d_front: f64,
    /// CoG → rear axle, m
    pub d_rear: f64,
    /// Front cornering stiffness per wheel, N/rad
    pub c_front: f64,
    /// Rear cornering stiffness per wheel, N/rad
    pub c_rear: f64,
    /// Fixed longitudinal speed, m/s
    pub v_x: f64,
    /// Steering magnitude limit, rad
    pub delta_max: f64,
    /// Steering change limit per control period, rad
    pub ddelta_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 3.5,
            inertia_z: 0.06,
            d_front: 0.16,
            d_rear: 0.16,
            c_front: 20.0,
            c_rear: 20.0,
            v_x: 1.0,
            delta_max: 0.4,
            ddelta_max: 0.05,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let positive = [
            ("mass", self.mass),
            ("inertia_z", self.inertia_z),
            ("d_front", self.d_front),
            ("d_rear", self.d_rear),
            ("c_front", self.c_front),
            ("c_rear", self.c_rear),
            ("ddelta_max", self.ddelta_max),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(VehicleError::InvalidParams(format!("{name} must be > 0 (got {v})")));
        }
        if !(self.v_x > 0.1) {
            return Err(VehicleError::InvalidParams(format!(
                "v_x must exceed 0.1 m/s (got {})",
                self.v_x
            )));
        }
        if !(self.delta_max > 0.0 && self.delta_max <= std::f64::consts::FRAC_PI_3) {
            return Err(VehicleError::InvalidParams("delta_max must be in (0, π/3]".into()));
        }
        Ok(())
    }

    pub fn wheelbase(&self) -> f64 {
        self.d_front + self.d_rear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v_y: f64,
    pub phi_dot: f64,
}

impl VehicleState {
    pub fn at_pose(pose: Pose) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            phi: pose.phi,
            ..Self::default()
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.phi)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.phi, self.v_y, self.phi_dot]
            .iter()
            .all(|v| v.is_finite())
    }

    fn axpy(&self, k: f64, d: &StateDerivative) -> Self {
        Self {
            x: self.x + k * d.x_dot,
            y: self.y + k * d.y_dot,
            phi: self.phi + k * d.phi_dot,
            v_y: self.v_y + k * d.v_y_dot,
            phi_dot: self.phi_dot + k * d.phi_ddot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub x_dot: f64,
    pub y_dot: f64,
    pub phi_dot: f64,
    pub v_y_dot: f64,
    pub phi_ddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TireState {
    pub alpha_f: f64,
    pub alpha_r: f64,
    pub f_cf: f64,
    pub f_cr: f64,
}

/// Slip angles and linear cornering forces (per wheel).
pub fn tire_forces(state: &VehicleState, delta_f: f64, p: &VehicleParams) -> TireState {
    let alpha_f = delta_f - (state.v_y + p.d_front * state.phi_dot) / p.v_x;
    let alpha_r = -(state.v_y - p.d_rear * state.phi_dot) / p.v_x;
    TireState {
        alpha_f,
        alpha_r,
        f_cf: p.c_front * alpha_f,
        f_cr: p.c_rear * alpha_r,
    }
}

/// Time derivative of the full planar state. The front longitudinal tire
/// force is zero at fixed speed, so only the cornering forces act.
pub fn dynamics_rhs(state: &VehicleState, delta_f: f64, p: &VehicleParams) -> StateDerivative {
    let t = tire_forces(state, delta_f, p);
    let cos_d = delta_f.cos();
    let (sin_phi, cos_phi) = state.phi.sin_cos();
    StateDerivative {
        x_dot: p.v_x * cos_phi - state.v_y * sin_phi,
        y_dot: p.v_x * sin_phi + state.v_y * cos_phi,
        phi_dot: state.phi_dot,
        v_y_dot: (2.0 * t.f_cf * cos_d + 2.0 * t.f_cr) / p.mass - p.v_x * state.phi_dot,
        phi_ddot: (2.0 * p.d_front * t.f_cf * cos_d - 2.0 * p.d_rear * t.f_cr) / p.inertia_z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: VehicleState,
    /// Steering input was saturated to ±delta_max.
    pub clamped: bool,
}

/// One classical RK4 step with zero-order-hold steering.
pub fn step(state: &VehicleState, delta_f: f64, p: &VehicleParams, dt: f64) -> Result<StepResult, VehicleError> {
    if !(dt > 0.0 && dt <= 0.02) {
        return Err(VehicleError::InvalidStep(format!("dt = {dt} outside (0, 0.02]")));
    }
    let delta = delta_f.clamp(-p.delta_max, p.delta_max);
    let clamped = delta != delta_f;
    let state = rk4(state, delta, p, dt);
    if !state.is_finite() {
        return Err(VehicleError::NonFiniteState);
    }
    Ok(StepResult { state, clamped })
}

pub(crate) fn rk4(s: &VehicleState, delta: f64, p: &VehicleParams, dt: f64) -> VehicleState {
    let k1 = dynamics_rhs(s, delta, p);
    let k2 = dynamics_rhs(&s.axpy(0.5 * dt, &k1), delta, p);
    let k3 = dynamics_rhs(&s.axpy(0.5 * dt, &k2), delta, p);
    let k4 = dynamics_rhs(&s.axpy(dt, &k3), delta, p);
    let mut next = VehicleState {
        x: s.x + dt / 6.0 * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot),
        y: s.y + dt / 6.0 * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot),
        phi: s.phi + dt / 6.0 * (k1.phi_dot + 2.0 * k2.phi_dot + 2.0 * k3.phi_dot + k4.phi_dot),
        v_y: s.v_y + dt / 6.0 * (k1.v_y_dot + 2.0 * k2.v_y_dot + 2.0 * k3.v_y_dot + k4.v_y_dot),
        phi_dot: s.phi_dot + dt / 6.0 * (k1.phi_ddot + 2.0 * k2.phi_ddot + 2.0 * k3.phi_ddot + k4.phi_ddot),
    };
    next.phi = wrap_angle(next.phi);
    next
}

/// Analytic Jacobians of the lateral subsystem with state ordering
/// `(y, v_y, phi, phi_dot)` and input `delta_f`.
pub fn linearize(op: &VehicleState, op_delta: f64, p: &VehicleParams) -> (Matrix4<f64>, Vector4<f64>) {
    let vx = p.v_x;
    let (sin_d, cos_d) = op_delta.sin_cos();
    let (sin_phi, cos_phi) = op.phi.sin_cos();
    let t = tire_forces(op, op_delta, p);
    let (cf, cr, lf, lr) = (p.c_front, p.c_rear, p.d_front, p.d_rear);

    let dvy_dvy = (-2.0 * cf * cos_d - 2.0 * cr) / (p.mass * vx);
    let dvy_dr = (-2.0 * cf * cos_d * lf + 2.0 * cr * lr) / (p.mass * vx) - vx;
    let dr_dvy = (-2.0 * lf * cf * cos_d + 2.0 * lr * cr) / (p.inertia_z * vx);
    let dr_dr = (-2.0 * lf * lf * cf * cos_d - 2.0 * lr * lr * cr) / (p.inertia_z * vx);

    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, cos_phi, vx * cos_phi - op.v_y * sin_phi, 0.0,
        0.0, dvy_dvy, 0.0, dvy_dr,
        0.0, 0.0, 0.0, 1.0,
        0.0, dr_dvy, 0.0, dr_dr,
    );
    // d/dδ [F cos δ] = C cos δ − C α sin δ
    let dfc = cf * cos_d - t.f_cf * sin_d;
    let b = Vector4::new(0.0, 2.0 * dfc / p.mass, 0.0, 2.0 * lf * dfc / p.inertia_z);
    (a, b)
}

/// Forward-Euler discretization.
pub fn discretize(
    a_c: &Matrix4<f64>,
    b_c: &Vector4<f64>,
    t_s: f64,
) -> Result<(Matrix4<f64>, Vector4<f64>), VehicleError> {
    if !(t_s > 0.0 && t_s <= 0.2) {
        return Err(VehicleError::InvalidStep(format!("T_s = {t_s} outside (0, 0.2]")));
    }
    Ok((Matrix4::identity() + a_c * t_s, b_c * t_s))
}

/// Continuous and discrete lateral models at an operating point.
/// States: `(y, v_y, phi, phi_dot)`; outputs: `(y, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a_c: Matrix4<f64>,
    pub b_c: Vector4<f64>,
    pub a_d: Matrix4<f64>,
    pub b_d: Vector4<f64>,
    pub c_d: Matrix2x4<f64>,
    pub t_s: f64,
}

impl LinearModel {
    pub fn output_matrix() -> Matrix2x4<f64> {
        Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    }

    pub fn at(op: &VehicleState, op_delta: f64, p: &VehicleParams, t_s: f64) -> Result<Self, VehicleError> {
        let (a_c, b_c) = linearize(op, op_delta, p);
        let (a_d, b_d) = discretize(&a_c, &b_c, t_s)?;
        Ok(Self {
            a_c,
            b_c,
            a_d,
            b_d,
            c_d: Self::output_matrix(),
            t_s,
        })
    }
}
