//! Sliding-window lane detection on a binary bird's-eye mask.
//!
//! Pixel fits are `x(y)` (column as a function of row). Metric fits are
//! `lateral(d)` in the vehicle frame, with `d` the forward distance and
//! lateral positive to the left.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{CameraModel, ImageGray};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Center,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Center => "center",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaneError {
    #[error("no lane pixels on the {0} side")]
    NoLanePixels(Side),
    #[error("insufficient support for fit: {0}")]
    InsufficientSupport(String),
    #[error("ill-conditioned fit (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("both lanes lost")]
    BothLanesLost,
    #[error("lane polynomial is not valid")]
    InvalidLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlidingWindowConfig {
    pub n_windows: usize,
    pub margin: usize,
    pub min_pixels_recenter: usize,
    pub min_support: usize,
    /// Polynomial order for the per-side fits (2 or 3).
    pub poly_order: usize,
    /// Used to infer the center line when only one boundary is seen.
    pub lane_half_width: f64,
    /// Shift each window by the previous window's recentering step. Off by
    /// default; helps on tight curves where the line leaves the margin.
    pub follow_drift: bool,
}

impl Default for SlidingWindowConfig {
    fn default() -> Self {
        Self {
            n_windows: 9,
            margin: 30,
            min_pixels_recenter: 40,
            min_support: 50,
            poly_order: 2,
            lane_half_width: 0.4,
            follow_drift: false,
        }
    }
}

impl SlidingWindowConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_windows < 2 {
            return Err("detector.n_windows must be >= 2".into());
        }
        if self.margin < 1 {
            return Err("detector.margin must be >= 1".into());
        }
        if !(2..=3).contains(&self.poly_order) {
            return Err("detector.poly_order must be 2 or 3".into());
        }
        if !(self.lane_half_width > 0.0) {
            return Err("detector.lane_half_width must be > 0".into());
        }
        Ok(())
    }
}

/// Lane boundary or center as `lateral = cubic·d³ + a·d² + b·d + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanePoly {
    pub side: Side,
    /// Ascending coefficients `[c, b, a, cubic]`.
    pub coeffs: [f64; 4],
    pub valid: bool,
    pub support: usize,
}

impl LanePoly {
    pub fn invalid(side: Side) -> Self {
        Self {
            side,
            coeffs: [0.0; 4],
            valid: false,
            support: 0,
        }
    }

    /// Quadratic `a·d² + b·d + c`.
    pub fn quadratic(side: Side, a: f64, b: f64, c: f64) -> Self {
        Self {
            side,
            coeffs: [c, b, a, 0.0],
            valid: true,
            support: 0,
        }
    }

    pub fn a(&self) -> f64 {
        self.coeffs[2]
    }
    pub fn b(&self) -> f64 {
        self.coeffs[1]
    }
    pub fn c(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, d: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, k| acc * d + k)
    }

    pub fn slope(&self, d: f64) -> f64 {
        let [_, b, a, k3] = self.coeffs;
        b + 2.0 * a * d + 3.0 * k3 * d * d
    }

    fn shifted(&self, side: Side, dc: f64) -> Self {
        let mut out = *self;
        out.side = side;
        out.coeffs[0] += dc;
        out
    }
}

/// Ascending coefficients of `q(alpha + beta·z)` as a polynomial in `z`.
pub fn compose_affine(q: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; q.len().max(1)];
    // Horner: out = out·(alpha + beta z) + q_k
    for &qk in q.iter().rev() {
        let mut next = vec![0.0; out.len()];
        for (i, &o) in out.iter().enumerate() {
            next[i] += o * alpha;
            if i + 1 < next.len() {
                next[i + 1] += o * beta;
            }
        }
        next[0] += qk;
        out = next;
    }
    out
}

fn pad4(v: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    out[..v.len().min(4)].copy_from_slice(&v[..v.len().min(4)]);
    out
}

/// Pixel-space `x(y)` ascending coefficients → metric `lateral(d)`.
pub fn pixel_to_metric(pixel: &[f64], cam: &CameraModel) -> [f64; 4] {
    let s = cam.px_per_m;
    let [ox, oy] = cam.origin_px;
    let x_of_d = compose_affine(pixel, oy, -s);
    let mut lat: Vec<f64> = x_of_d.iter().map(|k| -k / s).collect();
    lat[0] += ox / s;
    pad4(&lat)
}

/// Metric `lateral(d)` ascending coefficients → pixel-space `x(y)`.
pub fn metric_to_pixel(metric: &[f64], cam: &CameraModel) -> [f64; 4] {
    let s = cam.px_per_m;
    let [ox, oy] = cam.origin_px;
    let lat_of_y = compose_affine(metric, oy / s, -1.0 / s);
    let mut x: Vec<f64> = lat_of_y.iter().map(|k| -s * k).collect();
    x[0] += ox;
    pad4(&x)
}

fn histogram_peaks(mask: &ImageGray) -> (Option<usize>, Option<usize>) {
    let (w, h) = (mask.width, mask.height);
    let mut hist = vec![0u64; w];
    for y in h / 2..h {
        for (x, slot) in hist.iter_mut().enumerate() {
            *slot += mask.get(x, y) as u64;
        }
    }
    let mid = w / 2;
    // ties toward the image center: last max on the left, first max on the right
    let left = (0..mid).fold(None, |best: Option<usize>, x| match best {
        Some(b) if hist[x] < hist[b] => Some(b),
        _ if hist[x] == 0 => best,
        _ => Some(x),
    });
    let right = (mid..w).fold(None, |best: Option<usize>, x| match best {
        Some(b) if hist[x] <= hist[b] => Some(b),
        _ if hist[x] == 0 => best,
        _ => Some(x),
    });
    (left, right)
}

/// Column-sum histogram of the lower half; returns the peak column in each half.
pub fn histogram_base(mask: &ImageGray) -> Result<(usize, usize), LaneError> {
    match histogram_peaks(mask) {
        (Some(l), Some(r)) => Ok((l, r)),
        (None, _) => Err(LaneError::NoLanePixels(Side::Left)),
        (_, None) => Err(LaneError::NoLanePixels(Side::Right)),
    }
}

/// Stacks `n_windows` search windows bottom-to-top starting at `base_x` and
/// returns every set pixel `(x, y)` they cover.
pub fn sliding_window_collect(mask: &ImageGray, base_x: usize, cfg: &SlidingWindowConfig) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width, mask.height);
    let n = cfg.n_windows;
    let margin = cfg.margin as f64;
    let mut center = base_x as f64;
    let mut drift = 0.0;
    let mut recentered = false;
    let mut out = Vec::new();
    for i in 0..n {
        let y_hi = h * (n - i) / n;
        let y_lo = h * (n - i - 1) / n;
        let x_lo = (center - margin).ceil().max(0.0) as usize;
        let x_hi = (center + margin).floor().min(w as f64 - 1.0);
        if x_hi < 0.0 {
            continue;
        }
        let x_hi = x_hi as usize;
        let start = out.len();
        for y in (y_lo..y_hi).rev() {
            for x in x_lo..=x_hi.min(w - 1) {
                if mask.get(x, y) > 0 {
                    out.push((x, y));
                }
            }
        }
        let found = out.len() - start;
        if found >= cfg.min_pixels_recenter && found > 0 {
            let mean = out[start..].iter().map(|p| p.0 as f64).sum::<f64>() / found as f64;
            if cfg.follow_drift {
                drift = if recentered { mean - center + drift } else { 0.0 };
                recentered = true;
            }
            center = mean + drift;
        } else {
            center += drift;
        }
    }
    out
}

/// Least-squares `x(y)` fit of the given order; ascending pixel-space
/// coefficients.
pub fn fit_poly(points: &[(f64, f64)], order: usize) -> Result<Vec<f64>, LaneError> {
    if points.len() < order + 1 {
        return Err(LaneError::InsufficientSupport(format!(
            "{} points for order {order}",
            points.len()
        )));
    }
    let (y_min, y_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1), hi.max(p.1))
    });
    let span = y_max - y_min;
    if !(span >= 10.0) {
        return Err(LaneError::InsufficientSupport(format!("y span {span} px < 10 px")));
    }
    let m = order + 1;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut powers = vec![0.0; 2 * m - 1];
    for &(x, y) in points {
        let t = (y - y_min) / span;
        let mut p = 1.0;
        for slot in powers.iter_mut() {
            *slot = p;
            p *= t;
        }
        for i in 0..m {
            rhs[i] += powers[i] * x;
            for j in 0..m {
                gram[(i, j)] += powers[i + j];
            }
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > 1e10 {
        return Err(LaneError::IllConditioned(cond));
    }
    let sol = gram.cholesky().ok_or(LaneError::IllConditioned(cond))?.solve(&rhs);
    // t = (y − y_min)/span  →  coefficients in y
    Ok(compose_affine(sol.as_slice(), -y_min / span, 1.0 / span))
}

/// Output of [`detect_lanes`], including the pixel-space fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneDetection {
    pub left: LanePoly,
    pub right: LanePoly,
    pub center: LanePoly,
    pub left_pixel: Option<[f64; 4]>,
    pub right_pixel: Option<[f64; 4]>,
}

fn fit_side(
    mask: &ImageGray,
    base: Option<usize>,
    side: Side,
    cfg: &SlidingWindowConfig,
    cam: &CameraModel,
) -> Result<(LanePoly, Option<[f64; 4]>), LaneError> {
    let base = base.ok_or(LaneError::NoLanePixels(side))?;
    let pts: Vec<(f64, f64)> = sliding_window_collect(mask, base, cfg)
        .into_iter()
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    let support = pts.len();
    let mut poly = LanePoly {
        support,
        ..LanePoly::invalid(side)
    };
    if support < cfg.min_support {
        return Ok((poly, None));
    }
    match fit_poly(&pts, cfg.poly_order) {
        Ok(px) => {
            poly.coeffs = pixel_to_metric(&px, cam);
            poly.valid = poly.c().abs() <= cam.half_width_m() && poly.coeffs.iter().all(|c| c.is_finite());
            Ok((poly, Some(pad4(&px))))
        }
        Err(_) => Ok((poly, None)),
    }
}

/// Full detector: histogram bases, sliding windows, per-side fits, metric
/// conversion and lane-center synthesis. `prev` supplies the last accepted
/// `(left, right)` boundaries, reused for a side with no pixels at all.
pub fn detect_lanes(
    mask: &ImageGray,
    cfg: &SlidingWindowConfig,
    cam: &CameraModel,
    prev: Option<(LanePoly, LanePoly)>,
) -> Result<LaneDetection, LaneError> {
    let (lb, rb) = histogram_peaks(mask);
    let sides = [(Side::Left, lb), (Side::Right, rb)].map(|(side, base)| match fit_side(mask, base, side, cfg, cam) {
        Ok(v) => v,
        Err(LaneError::NoLanePixels(_)) => {
            let reused = prev.map(|(l, r)| if side == Side::Left { l } else { r });
            match reused {
                Some(p) if p.valid => (
                    LanePoly {
                        side,
                        valid: true,
                        support: 0,
                        ..p
                    },
                    None,
                ),
                _ => (LanePoly::invalid(side), None),
            }
        }
        Err(_) => (LanePoly::invalid(side), None),
    });
    let [(left, left_pixel), (right, right_pixel)] = sides;

    let hw = cfg.lane_half_width;
    let center = match (left.valid, right.valid) {
        (true, true) => {
            let mut coeffs = [0.0; 4];
            for (k, slot) in coeffs.iter_mut().enumerate() {
                *slot = 0.5 * (left.coeffs[k] + right.coeffs[k]);
            }
            LanePoly {
                side: Side::Center,
                coeffs,
                valid: true,
                support: left.support + right.support,
            }
        }
        (true, false) => left.shifted(Side::Center, -hw),
        (false, true) => right.shifted(Side::Center, hw),
        (false, false) => {
            if prev.is_none() {
                return Err(LaneError::BothLanesLost);
            }
            LanePoly::invalid(Side::Center)
        }
    };
    Ok(LaneDetection {
        left,
        right,
        center,
        left_pixel,
        right_pixel,
    })
}

impl Default for LanePoly {
    fn default() -> Self {
        Self::invalid(Side::Center)
    }
}
