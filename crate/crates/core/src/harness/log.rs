use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const CSV_HEADER: &str =
    "t,x,y,phi,vx,vy,phidot,delta_cmd,accel_cmd,lateral_err,heading_err,lane_valid,cost,clamped";

/// Rounds to the value the CSV will carry (9 significant digits), so metrics
/// computed in memory and from a re-read CSV agree bit for bit.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// One control period of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub phi_dot: f64,
    pub delta_cmd: f64,
    pub accel_cmd: f64,
    pub lateral_err: f64,
    pub heading_err: f64,
    pub lane_valid: bool,
    /// MPC objective value (0 for PID).
    pub cost: f64,
    /// The command was saturated or rate limited.
    pub clamped: bool,
}

impl TickRecord {
    pub fn quantized(mut self) -> Self {
        for v in [
            &mut self.t,
            &mut self.x,
            &mut self.y,
            &mut self.phi,
            &mut self.v_x,
            &mut self.v_y,
            &mut self.phi_dot,
            &mut self.delta_cmd,
            &mut self.accel_cmd,
            &mut self.lateral_err,
            &mut self.heading_err,
            &mut self.cost,
        ] {
            *v = quantize(*v);
        }
        self
    }

    fn floats(&self) -> [f64; 11] {
        [
            self.t,
            self.x,
            self.y,
            self.phi,
            self.v_x,
            self.v_y,
            self.phi_dot,
            self.delta_cmd,
            self.accel_cmd,
            self.lateral_err,
            self.heading_err,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Duration,
    NonFiniteState,
    LaneLost,
    ControllerError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Duration => "duration",
            Self::NonFiniteState => "non_finite_state",
            Self::LaneLost => "lane_lost",
            Self::ControllerError => "controller_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub records: Vec<TickRecord>,
    pub termination: Termination,
    /// Human-readable detail for abnormal terminations.
    pub detail: Option<String>,
}

impl SimLog {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

pub fn records_to_csv(records: &[TickRecord]) -> String {
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + records.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        for v in r.floats() {
            write!(out, "{v:.8e},").unwrap();
        }
        writeln!(out, "{},{:.8e},{}", r.lane_valid as u8, r.cost, r.clamped as u8).unwrap();
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<TickRecord>, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(HarnessError::Parse("missing or wrong CSV header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let err = |m: &str| HarnessError::Parse(format!("line {}: {m}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 14 {
                return Err(err("expected 14 fields"));
            }
            let f = |k: usize| fields[k].parse::<f64>().map_err(|_| err("bad number"));
            let b = |k: usize| match fields[k] {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err("bad flag")),
            };
            Ok(TickRecord {
                t: f(0)?,
                x: f(1)?,
                y: f(2)?,
                phi: f(3)?,
                v_x: f(4)?,
                v_y: f(5)?,
                phi_dot: f(6)?,
                delta_cmd: f(7)?,
                accel_cmd: f(8)?,
                lateral_err: f(9)?,
                heading_err: f(10)?,
                lane_valid: b(11)?,
                cost: f(12)?,
                clamped: b(13)?,
            })
        })
        .collect()
}
