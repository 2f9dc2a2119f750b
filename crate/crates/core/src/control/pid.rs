use serde::{Deserialize, Serialize};

use super::{speed_command, BodyRates, ControlCommand, ControlError};
use crate::lane::LanePoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub kp_v: f64,
    /// Forward station (m) where the lane-center offset is read.
    pub lookahead: f64,
    pub integral_clamp: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.5,
            ki: 0.1,
            kd: 0.1,
            kp_v: 0.5,
            lookahead: 0.45,
            integral_clamp: 0.5,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        if [self.kp, self.ki, self.kd, self.kp_v, self.integral_clamp]
            .iter()
            .any(|g| !(*g >= 0.0))
        {
            return Err(ControlError::InvalidConfig("PID gains must be >= 0".into()));
        }
        if !(self.lookahead > 0.0) {
            return Err(ControlError::InvalidConfig("PID lookahead must be > 0".into()));
        }
        Ok(())
    }
}

/// Integrator and previous error, owned by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub last_error: Option<f64>,
}

/// Lookahead PID on the lane-center lateral offset. Returns the command and
/// whether steering saturated.
pub fn pid_control(
    lane_center: &LanePoly,
    rates: &BodyRates,
    gains: &PidGains,
    dt: f64,
    pid: &mut PidState,
    delta_max: f64,
    target_speed: f64,
) -> Result<(ControlCommand, bool), ControlError> {
    if !lane_center.valid {
        return Err(ControlError::InvalidLane);
    }
    assert!(dt > 0.0, "dt must be positive");
    let e = lane_center.eval(gains.lookahead);
    pid.integral = (pid.integral + e * dt).clamp(-gains.integral_clamp, gains.integral_clamp);
    let de = pid.last_error.map_or(0.0, |last| (e - last) / dt);
    pid.last_error = Some(e);
    let raw = gains.kp * e + gains.ki * pid.integral + gains.kd * de;
    let delta_f = raw.clamp(-delta_max, delta_max);
    Ok((
        ControlCommand {
            delta_f,
            accel: speed_command(gains.kp_v, target_speed, rates.v_x),
        },
        delta_f != raw,
    ))
}
