use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ControllerKind, SimConfig, TrackPaths, TrackSource};
use super::log::Termination;
use super::metrics::Metrics;
use super::sim::{run_on_track, SimOutput};
use crate::track::Complexity;

/// Outcome of one (seed, controller) trial.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub controller: ControllerKind,
    pub track: Option<TrackPaths>,
    pub output: Result<SimOutput, String>,
}

impl RunResult {
    /// A run counts as completed when it ran for the full duration.
    pub fn completed(&self) -> bool {
        matches!(&self.output, Ok(o) if o.log.termination == Termination::Duration)
    }

    pub fn metrics(&self) -> Option<&Metrics> {
        self.output.as_ref().ok().map(|o| &o.metrics)
    }

    pub fn status(&self) -> String {
        match &self.output {
            Ok(o) if o.log.termination == Termination::Duration => "ok".into(),
            Ok(o) => format!("failed ({})", o.log.termination.as_str()),
            Err(e) => format!("failed ({e})"),
        }
    }
}

/// Mean metrics over completed runs of one controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub completed: usize,
    pub lateral_msd: Option<f64>,
    pub angular_msd: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Ordered by seed, then PID before MPC.
    pub runs: Vec<RunResult>,
    pub pid: Aggregate,
    pub mpc: Aggregate,
}

/// Config for one trial: the base config with the track and noise stream
/// keyed by `seed`, identical for both controllers.
pub fn trial_config(base: &SimConfig, seed: u64, controller: ControllerKind) -> SimConfig {
    let preset = match &base.track {
        TrackSource::Random { preset, .. } => *preset,
        _ => Complexity::Default,
    };
    SimConfig {
        track: TrackSource::Random { seed, preset },
        controller,
        noise_seed: base.noise_seed.wrapping_add(seed),
        ..base.clone()
    }
}

fn run_one(cfg: SimConfig, seed: u64) -> RunResult {
    let controller = cfg.controller;
    let track = cfg.track.resolve(None).and_then(|spec| TrackPaths::build(&spec));
    match track {
        Ok(track) => {
            let output = run_on_track(&cfg, &track, None).map_err(|e| e.to_string());
            RunResult {
                seed,
                controller,
                track: Some(track),
                output,
            }
        }
        Err(e) => RunResult {
            seed,
            controller,
            track: None,
            output: Err(e.to_string()),
        },
    }
}

/// Runs PID and MPC on each seed's track. Trials run in parallel; results
/// are ordered by seed regardless of completion order.
pub fn compare_controllers(seeds: &[u64], base: &SimConfig) -> Comparison {
    let jobs: Vec<(u64, ControllerKind)> = seeds
        .iter()
        .flat_map(|&s| [(s, ControllerKind::Pid), (s, ControllerKind::Mpc)])
        .collect();
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(seed, c)| run_one(trial_config(base, seed, c), seed))
        .collect();
    let aggregate = |c: ControllerKind| {
        let of: Vec<&RunResult> = runs.iter().filter(|r| r.controller == c).collect();
        let done: Vec<&Metrics> = of
            .iter()
            .filter(|r| r.completed())
            .filter_map(|r| r.metrics())
            .collect();
        let mean = |f: fn(&Metrics) -> f64| {
            (!done.is_empty()).then(|| done.iter().map(|m| f(m)).sum::<f64>() / done.len() as f64)
        };
        Aggregate {
            runs: of.len(),
            completed: done.len(),
            lateral_msd: mean(|m| m.lateral_msd),
            angular_msd: mean(|m| m.angular_msd),
        }
    };
    let (pid, mpc) = (aggregate(ControllerKind::Pid), aggregate(ControllerKind::Mpc));
    Comparison { runs, pid, mpc }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "failed".into(), |x| format!("{x:.6e}"))
}

impl Comparison {
    /// Per-run rows followed by the aggregate rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed,controller,status,lateral_msd,angular_msd,lane_valid_fraction,laps_completed,ticks,peak_yaw_rate,max_steer_step\n",
        );
        for r in &self.runs {
            let m = r.metrics();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                r.controller.name(),
                r.status().replace(',', ";"),
                num(m.map(|m| m.lateral_msd)),
                num(m.map(|m| m.angular_msd)),
                num(m.map(|m| m.lane_valid_fraction)),
                m.map_or(0, |m| m.laps_completed),
                m.map_or(0, |m| m.ticks),
                num(m.map(|m| m.peak_yaw_rate)),
                num(m.map(|m| m.max_steer_step)),
            )
            .unwrap();
        }
        for (name, a) in [("pid", &self.pid), ("mpc", &self.mpc)] {
            writeln!(
                out,
                "mean,{name},{}/{} completed,{},{},,,,,",
                a.completed,
                a.runs,
                num(a.lateral_msd),
                num(a.angular_msd)
            )
            .unwrap();
        }
        out
    }

    /// Aligned plain-text table: aggregate rows first, then per-run detail.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, a: &str, b: &str, c: &str| {
            writeln!(out, "{a:<28} | {b:>14} | {c:>14}").unwrap();
        };
        row(&mut out, "Metric", "PID", "MPC");
        writeln!(out, "{}", "-".repeat(62)).unwrap();
        row(
            &mut out,
            "Lateral MSD (m^2)",
            &num(self.pid.lateral_msd),
            &num(self.mpc.lateral_msd),
        );
        row(
            &mut out,
            "Angular MSD (rad^2)",
            &num(self.pid.angular_msd),
            &num(self.mpc.angular_msd),
        );
        row(
            &mut out,
            "Completed runs",
            &format!("{}/{}", self.pid.completed, self.pid.runs),
            &format!("{}/{}", self.mpc.completed, self.mpc.runs),
        );
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:>6} {:>4} {:>14} {:>14} {:>8} {:>5} {:>12}  status",
            "seed", "ctl", "lateral_msd", "angular_msd", "valid", "laps", "peak_yaw"
        )
        .unwrap();
        for r in &self.runs {
            let m = r.metrics();
            writeln!(
                out,
                "{:>6} {:>4} {:>14} {:>14} {:>8} {:>5} {:>12}  {}",
                r.seed,
                r.controller.name(),
                num(m.map(|m| m.lateral_msd)),
                num(m.map(|m| m.angular_msd)),
                m.map_or_else(|| "-".into(), |m| format!("{:.4}", m.lane_valid_fraction)),
                m.map_or(0, |m| m.laps_completed),
                m.map_or_else(|| "-".into(), |m| format!("{:.4}", m.peak_yaw_rate)),
                r.status()
            )
            .unwrap();
        }
        out
    }
}

/// Parses `1..5` (inclusive), `1,2,7` or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("bad seed list {s:?} (use a..b, a,b,c or n)");
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let v: Result<Vec<u64>, _> = s.split(',').map(|x| x.trim().parse()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(bad()),
    }
}
