//! Closed-loop orchestration: configuration, the simulation loop, metrics,
//! CSV logging, controller comparison and SVG plots.

mod compare;
mod config;
mod log;
mod metrics;
pub mod plot;
mod sim;

use std::path::Path;

use thiserror::Error;

pub use compare::{compare_controllers, parse_seeds, trial_config, Aggregate, Comparison, RunResult};
pub use config::{ControllerKind, SimConfig, TrackPaths, TrackSource};
pub use log::{parse_csv, quantize, records_to_csv, SimLog, Termination, TickRecord, CSV_HEADER};
pub use metrics::{compute_metrics, count_laps, Metrics};
pub use sim::{perspective_pair, run_on_track, run_sim, FrameObserver, SimOutput};

use crate::track::TrackSpec;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Track(#[from] crate::track::TrackError),
    #[error(transparent)]
    Calib(#[from] crate::calib::CalibError),
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))
}

/// Rounds to 12 significant digits so the JSON text is stable across
/// platforms' shortest-representation printing.
fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// Track spec as pretty JSON with 12-significant-digit floats.
pub fn track_spec_json(spec: &TrackSpec) -> String {
    let mut s = spec.clone();
    s.base_radius = round12(s.base_radius);
    s.half_width = round12(s.half_width);
    for h in &mut s.harmonics {
        h.amplitude = round12(h.amplitude);
        h.phase = round12(h.phase);
    }
    let mut text = serde_json::to_string_pretty(&s).expect("spec serializes");
    text.push('\n');
    text
}

/// Writes `log.csv`, `metrics.json` and the three per-run SVG plots.
pub fn write_run_outputs(dir: &Path, track: &TrackPaths, out: &SimOutput, label: &str) -> Result<(), HarnessError> {
    create_dir(dir)?;
    let recs = &out.log.records;
    write(&dir.join("log.csv"), out.log.to_csv())?;
    let summary = serde_json::json!({
        "metrics": out.metrics,
        "termination": out.log.termination.as_str(),
        "detail": out.log.detail,
    });
    write(
        &dir.join("metrics.json"),
        serde_json::to_string_pretty(&summary).expect("metrics serialize") + "\n",
    )?;
    write(
        &dir.join("trajectory.svg"),
        plot::trajectory_svg(
            &format!("Trajectory ({label})"),
            &track.left,
            &track.right,
            &track.center,
            recs,
        ),
    )?;
    write(&dir.join("speed.svg"), plot::speed_svg(recs))?;
    write(
        &dir.join("angular_velocity.svg"),
        plot::angular_velocity_svg(&format!("Angular velocity ({label})"), recs),
    )?;
    Ok(())
}

/// Writes the comparison table (CSV and text), per-controller overlays and
/// one subdirectory per run.
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<(), HarnessError> {
    create_dir(dir)?;
    write(&dir.join("comparison.csv"), cmp.to_csv())?;
    write(&dir.join("comparison.txt"), cmp.to_text())?;
    for kind in [ControllerKind::Pid, ControllerKind::Mpc] {
        let runs: Vec<(String, &crate::track::RefPath, &[TickRecord])> = cmp
            .runs
            .iter()
            .filter(|r| r.controller == kind)
            .filter_map(|r| match (&r.track, &r.output) {
                (Some(t), Ok(o)) => Some((format!("seed {}", r.seed), &t.center, o.log.records.as_slice())),
                _ => None,
            })
            .collect();
        let title = format!("Vehicle trajectories ({})", kind.name().to_uppercase());
        write(
            &dir.join(format!("overlay_{}.svg", kind.name())),
            plot::overlay_svg(&title, &runs),
        )?;
    }
    for r in &cmp.runs {
        if let (Some(t), Ok(o)) = (&r.track, &r.output) {
            let sub = dir.join(format!("seed{}_{}", r.seed, r.controller.name()));
            write_run_outputs(
                &sub,
                t,
                o,
                &format!("{} seed {}", r.controller.name().to_uppercase(), r.seed),
            )?;
        }
    }
    Ok(())
}
