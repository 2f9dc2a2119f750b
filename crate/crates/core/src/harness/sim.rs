use nalgebra::Point2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ControllerKind, SimConfig, TrackPaths};
use super::log::{SimLog, Termination, TickRecord};
use super::metrics::{compute_metrics, Metrics};
use super::HarnessError;
use crate::calib::{estimate_homography, warp_image, Correspondence, Homography};
use crate::control::{mpc_control, pid_control, speed_command, BodyRates, PidState};
use crate::imaging::{preprocess, render_frame, CameraModel, ImageGray};
use crate::lane::{detect_lanes, LanePoly};
use crate::track::wrap_angle;
use crate::vehicle::{self, VehicleError, VehicleState};
use crate::Pose;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub log: SimLog,
    pub metrics: Metrics,
}

/// Called once per control tick with the camera frame and the binary mask.
pub type FrameObserver<'a> = &'a mut dyn FnMut(usize, &ImageGray, &ImageGray);

/// Resolves the configured track and runs the closed loop.
pub fn run_sim(cfg: &SimConfig) -> Result<(TrackPaths, SimOutput), HarnessError> {
    cfg.validate()?;
    let track = TrackPaths::build(&cfg.track.resolve(None)?)?;
    let out = run_on_track(cfg, &track, None)?;
    Ok((track, out))
}

/// Maps the bird's-eye frame onto a trapezoidal perspective view and returns
/// `(bird → perspective, estimated perspective → bird)`.
pub fn perspective_pair(cam: &CameraModel) -> Result<(Homography, Homography), HarnessError> {
    let (w, h) = (cam.width as f64, cam.height as f64);
    let bird = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let persp = [(0.25 * w, 0.25 * h), (0.75 * w, 0.25 * h), (w, h), (0.0, h)];
    let forward: Vec<Correspondence> = bird
        .iter()
        .zip(&persp)
        .map(|(b, p)| Correspondence::new(b.0, b.1, p.0, p.1))
        .collect();
    let backward: Vec<Correspondence> = forward
        .iter()
        .map(|c| Correspondence { src: c.dst, dst: c.src })
        .collect();
    Ok((estimate_homography(&forward)?, estimate_homography(&backward)?))
}

/// Runs one closed-loop trial on a prepared track.
pub fn run_on_track(
    cfg: &SimConfig,
    track: &TrackPaths,
    mut observer: Option<FrameObserver>,
) -> Result<SimOutput, HarnessError> {
    cfg.validate()?;
    let p = &cfg.vehicle;
    let t_s = cfg.control_period;
    let target = cfg.target_speed();
    let warp = if cfg.through_homography {
        Some(perspective_pair(&cfg.camera)?)
    } else {
        None
    };

    let start = track.center.points[0];
    let (sh, ch) = start.heading.sin_cos();
    let mut state = VehicleState::at_pose(Pose::new(
        start.x - sh * cfg.initial_lateral,
        start.y + ch * cfg.initial_lateral,
        wrap_angle(start.heading + cfg.initial_heading),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    let mut bounds: Option<(LanePoly, LanePoly)> = None;
    let mut last_center: Option<LanePoly> = None;
    let mut lost_streak = 0usize;
    let mut delta = 0.0;
    let mut pid = PidState::default();
    let mut hint = None;
    let mut records = Vec::with_capacity(cfg.ticks());
    let mut termination = Termination::Duration;
    let mut detail = None;

    for k in 0..cfg.ticks() {
        let t = k as f64 * t_s;
        let mut frame = render_frame(
            &track.left,
            &track.right,
            &state.pose(),
            &cfg.camera,
            &cfg.render,
            &mut rng,
        );
        if let Some((to_persp, to_bird)) = &warp {
            let persp = warp_image(&frame, to_persp, cfg.camera.width, cfg.camera.height)?;
            frame = warp_image(&persp, to_bird, cfg.camera.width, cfg.camera.height)?;
        }
        let mask = preprocess(&frame, &cfg.preprocess);
        if let Some(obs) = observer.as_mut() {
            obs(k, &frame, &mask);
        }

        let fresh = match detect_lanes(&mask, &cfg.detector, &cfg.camera, bounds) {
            Ok(d) if d.center.valid => {
                let (old_l, old_r) = bounds.unwrap_or_default();
                bounds = Some((
                    if d.left.valid { d.left } else { old_l },
                    if d.right.valid { d.right } else { old_r },
                ));
                Some(d.center)
            }
            _ => None,
        };
        if fresh.is_some() {
            lost_streak = 0;
            last_center = fresh;
        } else {
            lost_streak += 1;
        }
        let lost = lost_streak > cfg.reuse_cap;
        let center = if lost { None } else { fresh.or(last_center) };

        let rates = BodyRates {
            v_x: p.v_x,
            v_y: state.v_y,
            phi_dot: state.phi_dot,
        };
        let (accel, cost, clamped) = match (center, cfg.controller) {
            (None, _) => (speed_command(cfg.pid.kp_v, target, rates.v_x), 0.0, false),
            (Some(c), ControllerKind::Pid) => {
                match pid_control(&c, &rates, &cfg.pid, t_s, &mut pid, p.delta_max, target) {
                    Ok((cmd, clamped)) => {
                        delta = cmd.delta_f;
                        (cmd.accel, 0.0, clamped)
                    }
                    Err(e) => {
                        termination = Termination::ControllerError;
                        detail = Some(e.to_string());
                        break;
                    }
                }
            }
            (Some(c), ControllerKind::Mpc) => match mpc_control(&c, &rates, p, &cfg.mpc, t_s, delta, target) {
                Ok((cmd, diag)) => {
                    delta = cmd.delta_f;
                    (cmd.accel, diag.cost, diag.clamped)
                }
                Err(e) => {
                    termination = Termination::ControllerError;
                    detail = Some(e.to_string());
                    break;
                }
            },
        };

        let pos = Point2::new(state.x, state.y);
        let pr = track.center.project(pos, hint);
        hint = Some(pr.index);
        records.push(
            TickRecord {
                t,
                x: state.x,
                y: state.y,
                phi: state.phi,
                v_x: p.v_x,
                v_y: state.v_y,
                phi_dot: state.phi_dot,
                delta_cmd: delta,
                accel_cmd: accel,
                lateral_err: pr.lateral_offset,
                heading_err: wrap_angle(state.phi - pr.path_heading),
                lane_valid: fresh.is_some(),
                cost,
                clamped,
            }
            .quantized(),
        );
        if lost {
            termination = Termination::LaneLost;
            detail = Some(format!("no valid lane for {lost_streak} consecutive frames"));
            break;
        }

        for _ in 0..cfg.substeps() {
            match vehicle::step(&state, delta, p, cfg.plant_dt) {
                Ok(r) => state = r.state,
                Err(VehicleError::NonFiniteState) => {
                    termination = Termination::NonFiniteState;
                    break;
                }
                Err(e) => return Err(HarnessError::Config(e.to_string())),
            }
        }
        if termination == Termination::NonFiniteState {
            detail = Some(format!("state diverged after t = {t}"));
            break;
        }
    }

    let metrics = compute_metrics(&records, Some(&track.center));
    Ok(SimOutput {
        log: SimLog {
            records,
            termination,
            detail,
        },
        metrics,
    })
}
