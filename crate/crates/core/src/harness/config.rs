use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::control::{MpcConfig, PidGains};
use crate::imaging::{CameraModel, PreprocessConfig, RenderConfig};
use crate::lane::SlidingWindowConfig;
use crate::track::{generate_track, random_spec, Complexity, RefPath, TrackSpec};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Pid,
    Mpc,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pid => "pid",
            Self::Mpc => "mpc",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pid" => Ok(Self::Pid),
            "mpc" => Ok(Self::Mpc),
            other => Err(format!("unknown controller {other:?} (pid|mpc)")),
        }
    }
}

/// Where the reference track comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TrackSource {
    /// Seeded random track of the given preset.
    Random { seed: u64, preset: Complexity },
    /// Explicit polar spec.
    Spec(TrackSpec),
    /// Track JSON written by `generate-track` (a spec).
    File(PathBuf),
}

impl Default for TrackSource {
    fn default() -> Self {
        Self::Random {
            seed: 1,
            preset: Complexity::Default,
        }
    }
}

impl TrackSource {
    /// Resolves to a spec; relative file paths are taken from `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<TrackSpec, HarnessError> {
        match self {
            Self::Random { seed, preset } => Ok(random_spec(*seed, *preset)),
            Self::Spec(s) => Ok(s.clone()),
            Self::File(p) => {
                let path = match base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text =
                    std::fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

/// Complete description of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub track: TrackSource,
    pub controller: ControllerKind,
    pub duration: f64,
    pub plant_dt: f64,
    pub control_period: f64,
    /// Speed set-point for the speed loop; defaults to the vehicle's v_x.
    pub target_speed: Option<f64>,
    pub vehicle: VehicleParams,
    pub camera: CameraModel,
    pub render: RenderConfig,
    pub preprocess: PreprocessConfig,
    pub detector: SlidingWindowConfig,
    pub pid: PidGains,
    pub mpc: MpcConfig,
    pub noise_seed: u64,
    /// Initial lateral offset from the centerline (m, positive left).
    pub initial_lateral: f64,
    /// Initial heading offset from the path tangent (rad).
    pub initial_heading: f64,
    /// Route frames through a perspective warp and a DLT-estimated
    /// rectification before detection.
    pub through_homography: bool,
    /// Consecutive frames a previous lane estimate may be reused.
    pub reuse_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            track: TrackSource::default(),
            controller: ControllerKind::Pid,
            duration: 60.0,
            plant_dt: 0.01,
            control_period: 0.05,
            target_speed: None,
            vehicle: VehicleParams::default(),
            camera: CameraModel::default(),
            render: RenderConfig::default(),
            preprocess: PreprocessConfig::default(),
            detector: SlidingWindowConfig::default(),
            pid: PidGains::default(),
            mpc: MpcConfig::default(),
            noise_seed: 0,
            initial_lateral: 0.0,
            initial_heading: 0.0,
            through_homography: false,
            reuse_cap: 10,
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of plant steps per control period.
    pub fn substeps(&self) -> usize {
        (self.control_period / self.plant_dt).round() as usize
    }

    /// Number of control ticks in the run.
    pub fn ticks(&self) -> usize {
        (self.duration / self.control_period + 1e-9).floor() as usize
    }

    pub fn target_speed(&self) -> f64 {
        self.target_speed.unwrap_or(self.vehicle.v_x)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return bad(format!("duration must be >= 0, got {}", self.duration));
        }
        if !(self.plant_dt > 0.0 && self.plant_dt <= 0.02) {
            return bad(format!("plant_dt must be in (0, 0.02], got {}", self.plant_dt));
        }
        if !(self.control_period > 0.0 && self.control_period <= 0.2) {
            return bad(format!(
                "control_period must be in (0, 0.2], got {}",
                self.control_period
            ));
        }
        let ratio = self.control_period / self.plant_dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
            return bad(format!(
                "control_period {} is not an integer multiple of plant_dt {}",
                self.control_period, self.plant_dt
            ));
        }
        if !self.initial_lateral.is_finite() || !self.initial_heading.is_finite() {
            return bad("initial offsets must be finite".into());
        }
        if !(self.target_speed() > 0.0) {
            return bad("target_speed must be > 0".into());
        }
        self.vehicle
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.camera.validate().map_err(HarnessError::Config)?;
        self.detector.validate().map_err(HarnessError::Config)?;
        self.pid.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.mpc.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.render.line_width > 0.0 && self.render.noise_sigma >= 0.0) {
            return bad("render.line_width must be > 0 and noise_sigma >= 0".into());
        }
        Ok(())
    }
}

/// Centerline plus the two painted boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPaths {
    pub spec: TrackSpec,
    pub center: RefPath,
    pub left: RefPath,
    pub right: RefPath,
}

impl TrackPaths {
    pub fn build(spec: &TrackSpec) -> Result<Self, HarnessError> {
        let center = generate_track(spec)?;
        let (left, right) = crate::track::lane_boundaries(&center, spec.half_width)?;
        Ok(Self {
            spec: spec.clone(),
            center,
            left,
            right,
        })
    }
}
