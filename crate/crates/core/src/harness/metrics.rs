use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::log::TickRecord;
use crate::track::{wrap_angle, RefPath};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub lateral_msd: f64,
    pub angular_msd: f64,
    pub lane_valid_fraction: f64,
    pub laps_completed: u32,
    pub ticks: usize,
    /// Largest |yaw rate| over the run (rad/s).
    pub peak_yaw_rate: f64,
    /// Largest steering change between consecutive ticks (rad per period).
    pub max_steer_step: f64,
}

/// Metrics derived purely from logged rows. `path` is the truth centerline
/// used to count laps; without it `laps_completed` is 0.
pub fn compute_metrics(records: &[TickRecord], path: Option<&RefPath>) -> Metrics {
    if records.is_empty() {
        return Metrics::default();
    }
    let n = records.len() as f64;
    let lateral_msd = records.iter().map(|r| r.lateral_err * r.lateral_err).sum::<f64>() / n;
    let angular_msd = records.iter().map(|r| wrap_angle(r.heading_err).powi(2)).sum::<f64>() / n;
    let valid = records.iter().filter(|r| r.lane_valid).count();
    let peak_yaw_rate = records.iter().map(|r| r.phi_dot.abs()).fold(0.0, f64::max);
    let max_steer_step = records
        .windows(2)
        .map(|w| (w[1].delta_cmd - w[0].delta_cmd).abs())
        .fold(0.0, f64::max);
    Metrics {
        lateral_msd,
        angular_msd,
        lane_valid_fraction: valid as f64 / n,
        laps_completed: path.map_or(0, |p| count_laps(records, p)),
        ticks: records.len(),
        peak_yaw_rate,
        max_steer_step,
    }
}

/// Net forward progress along a closed path, in whole laps.
pub fn count_laps(records: &[TickRecord], path: &RefPath) -> u32 {
    if !path.closed || records.is_empty() {
        return 0;
    }
    let total = path.total_length();
    let mut hint = None;
    let mut last_s = None;
    let mut progress = 0.0;
    for r in records {
        let pr = path.project(Point2::new(r.x, r.y), hint);
        hint = Some(pr.index);
        if let Some(s0) = last_s {
            let mut ds = pr.s - s0;
            if ds > 0.5 * total {
                ds -= total;
            } else if ds < -0.5 * total {
                ds += total;
            }
            progress += ds;
        }
        last_s = Some(pr.s);
    }
    (progress / total).floor().max(0.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{generate_track, TrackSpec};
    use proptest::prelude::*;

    fn rec(lat: f64, head: f64, valid: bool) -> TickRecord {
        TickRecord {
            t: 0.0,
            x: 0.0,
            y: 0.0,
            phi: 0.0,
            v_x: 1.0,
            v_y: 0.0,
            phi_dot: 0.0,
            delta_cmd: 0.0,
            accel_cmd: 0.0,
            lateral_err: lat,
            heading_err: head,
            lane_valid: valid,
            cost: 0.0,
            clamped: false,
        }
    }

    #[test]
    fn empty_and_zero() {
        assert_eq!(compute_metrics(&[], None), Metrics::default());
        let m = compute_metrics(&[rec(0.0, 0.0, true); 4], None);
        assert_eq!(
            (m.lateral_msd, m.angular_msd, m.lane_valid_fraction, m.ticks),
            (0.0, 0.0, 1.0, 4)
        );
    }

    #[test]
    fn symmetric_offsets() {
        let m = compute_metrics(&[rec(0.1, 0.0, true), rec(-0.1, 0.0, false)], None);
        assert!((m.lateral_msd - 0.01).abs() < 1e-15);
        assert_eq!(m.lane_valid_fraction, 0.5);
    }

    #[test]
    fn heading_error_is_wrapped() {
        let m = compute_metrics(&[rec(0.0, 2.0 * std::f64::consts::PI + 0.1, true)], None);
        assert!((m.angular_msd - 0.01).abs() < 1e-12);
    }

    #[test]
    fn laps_on_circle() {
        let path = generate_track(&TrackSpec::circle(2.0)).unwrap();
        // 2.5 turns counter-clockwise, sampled every 5 degrees
        let recs: Vec<TickRecord> = (0..=(72 * 5 / 2))
            .map(|i| {
                let th = (i as f64 * 5.0).to_radians();
                TickRecord {
                    x: 2.0 * th.cos(),
                    y: 2.0 * th.sin(),
                    ..rec(0.0, 0.0, true)
                }
            })
            .collect();
        assert_eq!(count_laps(&recs, &path), 2);
        let back: Vec<TickRecord> = recs.iter().rev().copied().collect();
        assert_eq!(count_laps(&back, &path), 0);
    }

    proptest! {
        #[test]
        fn matches_single_pass_oracle(rows in proptest::collection::vec((-1.0f64..1.0, -3.0f64..3.0, any::<bool>()), 1..100)) {
            let recs: Vec<TickRecord> = rows.iter().map(|&(l, h, v)| rec(l, h, v)).collect();
            let m = compute_metrics(&recs, None);
            let (mut sl, mut sh, mut nv) = (0.0, 0.0, 0usize);
            for &(l, h, v) in &rows {
                sl += l * l;
                sh += h * h;
                nv += v as usize;
            }
            let n = rows.len() as f64;
            prop_assert!((m.lateral_msd - sl / n).abs() <= 1e-12);
            prop_assert!((m.angular_msd - sh / n).abs() <= 1e-12);
            prop_assert_eq!(m.lane_valid_fraction, nv as f64 / n);
            prop_assert!(m.lateral_msd >= 0.0 && m.angular_msd >= 0.0);
        }
    }
}
