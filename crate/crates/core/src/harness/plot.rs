//! Dependency-free SVG charts. Output depends only on the input numbers, so
//! identical runs produce identical files.

use std::fmt::Write as _;

use super::log::TickRecord;
use crate::track::RefPath;

const W: f64 = 720.0;
const H: f64 = 540.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy)]
struct Bounds {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Bounds {
    fn of(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut b = Bounds {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            if x.is_finite() && y.is_finite() {
                b.x0 = b.x0.min(x);
                b.x1 = b.x1.max(x);
                b.y0 = b.y0.min(y);
                b.y1 = b.y1.max(y);
            }
        }
        if !b.x0.is_finite() {
            return Bounds {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        // avoid zero-size ranges
        for (lo, hi) in [(&mut b.x0, &mut b.x1), (&mut b.y0, &mut b.y1)] {
            if *hi - *lo < 1e-9 {
                *lo -= 0.5;
                *hi += 0.5;
            }
        }
        b
    }

    /// Grows the shorter axis so both share one scale.
    fn equal_aspect(mut self) -> Self {
        let sx = (self.x1 - self.x0) / (W - 2.0 * MARGIN);
        let sy = (self.y1 - self.y0) / (H - 2.0 * MARGIN);
        if sx > sy {
            let pad = 0.5 * (sx * (H - 2.0 * MARGIN) - (self.y1 - self.y0));
            self.y0 -= pad;
            self.y1 += pad;
        } else {
            let pad = 0.5 * (sy * (W - 2.0 * MARGIN) - (self.x1 - self.x0));
            self.x0 -= pad;
            self.x1 += pad;
        }
        self
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN),
            H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN),
        )
    }
}

struct Svg {
    body: String,
    bounds: Bounds,
}

impl Svg {
    fn new(title: &str, bounds: Bounds, x_label: &str, y_label: &str) -> Self {
        let mut body = String::new();
        writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )
        .unwrap();
        writeln!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            body,
            r#"<text x="{:.1}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        )
        .unwrap();
        let mut svg = Self { body, bounds };
        svg.axes(x_label, y_label);
        svg
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let b = self.bounds;
        let (l, r, t, bot) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        writeln!(
            self.body,
            r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black" stroke-width="1"/>"#,
            r - l,
            bot - t
        )
        .unwrap();
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = b.x0 + f * (b.x1 - b.x0);
            let yv = b.y0 + f * (b.y1 - b.y0);
            let (px, _) = b.map(xv, b.y0);
            let (_, py) = b.map(b.x0, yv);
            writeln!(
                self.body,
                r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                bot + 16.0,
                tick(xv)
            )
            .unwrap();
            writeln!(
                self.body,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                l - 6.0,
                py + 4.0,
                tick(yv)
            )
            .unwrap();
        }
        writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 18.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            self.body,
            r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(y_label)
        )
        .unwrap();
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::with_capacity(pts.len() * 16);
        for (i, &(x, y)) in pts.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let (px, py) = self.bounds.map(x, y);
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{px:.2},{py:.2}").unwrap();
        }
        s
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        let p = self.points(pts);
        writeln!(
            self.body,
            r#"<polyline points="{p}" fill="none" stroke="{color}" stroke-width="{width}"/>"#
        )
        .unwrap();
    }

    fn path(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let p = self.points(pts);
        let d = p.replacen(' ', " L", usize::MAX);
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(
            self.body,
            r#"<path d="M{d}" fill="none" stroke="{color}" stroke-width="1"{dash}/>"#
        )
        .unwrap();
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN + 14.0 + 16.0 * i as f64;
            let x = W - MARGIN - 150.0;
            writeln!(
                self.body,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0,
                x + 26.0,
                escape(label)
            )
            .unwrap();
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn xy(path: &RefPath) -> Vec<(f64, f64)> {
    path.points.iter().map(|p| (p.x, p.y)).collect()
}

fn track_bounds(tracks: &[&RefPath], runs: &[&[TickRecord]]) -> Bounds {
    let pts = tracks
        .iter()
        .flat_map(|t| t.points.iter().map(|p| (p.x, p.y)))
        .chain(runs.iter().flat_map(|r| r.iter().map(|t| (t.x, t.y))));
    Bounds::of(pts).equal_aspect()
}

/// World-frame trajectory over the lane boundaries.
pub fn trajectory_svg(
    title: &str,
    left: &RefPath,
    right: &RefPath,
    center: &RefPath,
    records: &[TickRecord],
) -> String {
    let b = track_bounds(&[left, right], &[records]);
    let mut svg = Svg::new(title, b, "x (m)", "y (m)");
    svg.path(&xy(left), "#555555", false);
    svg.path(&xy(right), "#555555", false);
    svg.path(&xy(center), "#aaaaaa", true);
    let traj: Vec<(f64, f64)> = records.iter().map(|r| (r.x, r.y)).collect();
    svg.polyline(&traj, COLORS[0], 1.5);
    svg.finish()
}

/// One or more time series against t.
pub fn time_series_svg(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let b = Bounds::of(series.iter().flat_map(|(_, s)| s.iter().copied()));
    let mut svg = Svg::new(title, b, "t (s)", y_label);
    for (i, (_, s)) in series.iter().enumerate() {
        svg.polyline(s, COLORS[i % COLORS.len()], 1.2);
    }
    if series.len() > 1 {
        let entries: Vec<(String, &str)> = series
            .iter()
            .enumerate()
            .map(|(i, (l, _))| (l.clone(), COLORS[i % COLORS.len()]))
            .collect();
        svg.legend(&entries);
    }
    svg.finish()
}

pub fn speed_svg(records: &[TickRecord]) -> String {
    let s = records.iter().map(|r| (r.t, r.v_x)).collect();
    time_series_svg("Vehicle speed", "v (m/s)", &[("speed".into(), s)])
}

pub fn angular_velocity_svg(title: &str, records: &[TickRecord]) -> String {
    let s = records.iter().map(|r| (r.t, r.phi_dot)).collect();
    time_series_svg(title, "yaw rate (rad/s)", &[("yaw rate".into(), s)])
}

/// Overlay of several runs, one polyline per run; each run's centerline is
/// drawn as a dashed path.
pub fn overlay_svg(title: &str, runs: &[(String, &RefPath, &[TickRecord])]) -> String {
    let tracks: Vec<&RefPath> = runs.iter().map(|r| r.1).collect();
    let recs: Vec<&[TickRecord]> = runs.iter().map(|r| r.2).collect();
    let b = track_bounds(&tracks, &recs);
    let mut svg = Svg::new(title, b, "x (m)", "y (m)");
    for (i, (_, center, _)) in runs.iter().enumerate() {
        svg.path(&xy(center), COLORS[i % COLORS.len()], true);
    }
    for (i, (_, _, recs)) in runs.iter().enumerate() {
        let traj: Vec<(f64, f64)> = recs.iter().map(|r| (r.x, r.y)).collect();
        svg.polyline(&traj, COLORS[i % COLORS.len()], 1.2);
    }
    let entries: Vec<(String, &str)> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| (r.0.clone(), COLORS[i % COLORS.len()]))
        .collect();
    svg.legend(&entries);
    svg.finish()
}
