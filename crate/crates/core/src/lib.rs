//! Software-in-the-loop lane tracking testbed for an Ackermann vehicle.
//!
//! The closed loop is: synthetic bird's-eye camera frame ([`imaging`]) →
//! sliding-window lane detection ([`lane`]) → PID or incremental MPC steering
//! ([`control`]) → nonlinear single-track plant ([`vehicle`]). Ground truth for
//! metrics comes from the generated test track ([`track`]); [`harness`] runs
//! trials, logs and compares controllers. [`calib`] holds the homography tools
//! used to produce rectified views.

// validation uses `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod control;
pub mod harness;
pub mod imaging;
pub mod lane;
pub mod track;
pub mod vehicle;

/// Planar pose in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        Self { x, y, phi }
    }
}
