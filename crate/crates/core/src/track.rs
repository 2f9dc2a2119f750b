//! Closed test tracks built from a circle with sinusoidal radius
//! perturbations, plus reference-path queries against the sampled centerline.
//!
//! Sign convention used throughout the crate: a positive lateral offset means
//! the query point lies to the LEFT of the path when facing along increasing `s`.

use std::f64::consts::{PI, TAU};

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("invalid track spec: {0}")]
    InvalidSpec(String),
    #[error("centerline self-intersects (segments {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("offset of {half_width} m exceeds the osculating radius at sample {index} (curvature {curvature})")]
    OffsetDegenerate {
        index: usize,
        curvature: f64,
        half_width: f64,
    },
    #[error("path needs at least 2 points")]
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub amplitude: f64,
    /// Integer number of cycles per lap.
    pub frequency: u32,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub base_radius: f64,
    pub harmonics: Vec<Harmonic>,
    pub half_width: f64,
    pub samples_per_lap: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Complexity {
    Circle,
    Default,
    Hard,
}

impl std::str::FromStr for Complexity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "circle" => Ok(Self::Circle),
            "default" => Ok(Self::Default),
            "hard" => Ok(Self::Hard),
            other => Err(format!("unknown preset {other:?} (circle|default|hard)")),
        }
    }
}

impl TrackSpec {
    pub const DEFAULT_BASE_RADIUS: f64 = 5.0;
    pub const DEFAULT_HALF_WIDTH: f64 = 0.4;
    pub const DEFAULT_SAMPLES: usize = 720;

    pub fn circle(radius: f64) -> Self {
        Self {
            base_radius: radius,
            harmonics: Vec::new(),
            half_width: Self::DEFAULT_HALF_WIDTH,
            samples_per_lap: Self::DEFAULT_SAMPLES,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrackError> {
        let amp_sum: f64 = self.harmonics.iter().map(|h| h.amplitude.abs()).sum();
        if !(self.base_radius > amp_sum) {
            return Err(TrackError::InvalidSpec(format!(
                "base_radius {} must exceed the amplitude sum {amp_sum}",
                self.base_radius
            )));
        }
        if !(self.half_width > 0.0) {
            return Err(TrackError::InvalidSpec("half_width must be > 0".into()));
        }
        if self.samples_per_lap < 360 {
            return Err(TrackError::InvalidSpec("samples_per_lap must be >= 360".into()));
        }
        if let Some(h) = self
            .harmonics
            .iter()
            .find(|h| h.frequency < 1 || !h.amplitude.is_finite() || !h.phase.is_finite())
        {
            return Err(TrackError::InvalidSpec(format!("bad harmonic {h:?}")));
        }
        Ok(())
    }

    /// r(θ) and its first two derivatives.
    pub fn radius(&self, theta: f64) -> (f64, f64, f64) {
        self.harmonics
            .iter()
            .fold((self.base_radius, 0.0, 0.0), |(r, dr, ddr), h| {
                let f = h.frequency as f64;
                let arg = f * theta + h.phase;
                (
                    r + h.amplitude * arg.sin(),
                    dr + h.amplitude * f * arg.cos(),
                    ddr - h.amplitude * f * f * arg.sin(),
                )
            })
    }

    /// Largest |curvature| of the analytic polar centerline.
    pub fn max_abs_curvature(&self) -> f64 {
        (0..self.samples_per_lap.max(360))
            .map(|i| {
                let th = TAU * i as f64 / self.samples_per_lap.max(360) as f64;
                let (r, dr, ddr) = self.radius(th);
                ((r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Draws a track spec deterministically from `seed`.
///
/// The default preset uses 2–3 harmonics with amplitudes in [0.2, 0.6] m and
/// frequencies 2–5; draws are repeated (same RNG stream) until the centerline
/// curvature stays within what the vehicle and the camera can follow.
pub fn random_spec(seed: u64, preset: Complexity) -> TrackSpec {
    let mut spec = TrackSpec {
        seed,
        ..TrackSpec::circle(TrackSpec::DEFAULT_BASE_RADIUS)
    };
    let (n_range, amp_range, freq_range, kappa_cap) = match preset {
        Complexity::Circle => return spec,
        Complexity::Default => ((2u32, 3u32), (0.2, 0.6), (2u32, 5u32), 0.45),
        Complexity::Hard => ((3, 4), (0.4, 0.8), (2, 6), 0.8),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(n_range.0..=n_range.1);
        spec.harmonics = (0..n)
            .map(|_| Harmonic {
                amplitude: rng.random_range(amp_range.0..=amp_range.1),
                frequency: rng.random_range(freq_range.0..=freq_range.1),
                phase: rng.random_range(0.0..TAU),
            })
            .collect();
        if spec.max_abs_curvature() <= kappa_cap {
            return spec;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    /// Arc length from the first sample.
    pub s: f64,
    /// Unwrapped heading (continuous between samples).
    pub heading: f64,
    pub curvature: f64,
}

impl PathPoint {
    pub fn pos(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// A sampled reference path. Closed paths repeat the first sample at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefPath {
    pub points: Vec<PathPoint>,
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub lateral_offset: f64,
    pub path_heading: f64,
    /// Index of the segment start the point projected onto.
    pub index: usize,
}

impl RefPath {
    /// Builds a path from positions, deriving arc length from chord lengths and
    /// heading/curvature from central differences (one-sided at open ends).
    /// For closed paths the last position must repeat the first.
    pub fn from_xy(xy: &[Point2<f64>], closed: bool) -> Result<Self, TrackError> {
        let n = xy.len();
        if n < 2 {
            return Err(TrackError::TooShort);
        }
        // number of distinct samples on the loop
        let m = if closed { n - 1 } else { n };
        let at = |i: isize| -> Point2<f64> {
            if closed {
                xy[i.rem_euclid(m as isize) as usize]
            } else {
                xy[i.clamp(0, n as isize - 1) as usize]
            }
        };
        let mut points = Vec::with_capacity(n);
        let mut s = 0.0;
        let mut prev_heading: Option<f64> = None;
        for i in 0..n {
            if i > 0 {
                s += (xy[i] - xy[i - 1]).norm();
            }
            let ii = i as isize;
            let (prev, cur, next) = (at(ii - 1), at(ii), at(ii + 1));
            let (d1, d2) = if !closed && i == 0 {
                (next - cur, at(2).coords - 2.0 * next.coords + cur.coords)
            } else if !closed && i == n - 1 {
                (cur - prev, cur.coords - 2.0 * prev.coords + at(ii - 2).coords)
            } else {
                ((next - prev) * 0.5, next.coords - 2.0 * cur.coords + prev.coords)
            };
            let speed2 = d1.norm_squared();
            let curvature = if speed2 > 0.0 {
                (d1.x * d2.y - d1.y * d2.x) / speed2.powf(1.5)
            } else {
                0.0
            };
            let raw = d1.y.atan2(d1.x);
            let heading = match prev_heading {
                Some(ph) => ph + wrap_angle(raw - ph),
                None => raw,
            };
            prev_heading = Some(heading);
            points.push(PathPoint {
                x: xy[i].x,
                y: xy[i].y,
                s,
                heading,
                curvature,
            });
        }
        Ok(Self { points, closed })
    }

    /// Straight open path along `heading`.
    pub fn straight(start: Point2<f64>, heading: f64, length: f64, samples: usize) -> Self {
        let samples = samples.max(2);
        let xy: Vec<_> = (0..samples)
            .map(|i| {
                let d = length * i as f64 / (samples - 1) as f64;
                Point2::new(start.x + d * heading.cos(), start.y + d * heading.sin())
            })
            .collect();
        Self::from_xy(&xy, false).expect("at least two samples")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }

    fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    fn project_segment(&self, i: usize, p: Point2<f64>) -> (f64, Projection) {
        let a = &self.points[i];
        let b = &self.points[i + 1];
        let ab = b.pos() - a.pos();
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((p - a.pos()).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let foot = a.pos() + ab * t;
        let d = p - foot;
        let len = len2.sqrt();
        let lateral = if len > 0.0 {
            (ab.x * d.y - ab.y * d.x) / len
        } else {
            d.norm()
        };
        (
            d.norm_squared(),
            Projection {
                s: a.s + t * (b.s - a.s),
                lateral_offset: lateral,
                path_heading: a.heading + t * (b.heading - a.heading),
                index: i,
            },
        )
    }

    /// Nearest point on the polyline. With `hint_index`, only segments within
    /// ±50 samples of the hint are searched (wrapping on closed paths).
    pub fn project(&self, p: Point2<f64>, hint_index: Option<usize>) -> Projection {
        const WINDOW: isize = 50;
        let nseg = self.segment_count();
        assert!(nseg >= 1, "path needs at least 2 points");
        let mut best: Option<(f64, Projection)> = None;
        let mut consider = |i: usize| {
            let cand = self.project_segment(i, p);
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        };
        match hint_index {
            Some(h) if (2 * WINDOW as usize + 1) < nseg => {
                for k in -WINDOW..=WINDOW {
                    let i = h as isize + k;
                    if self.closed {
                        consider(i.rem_euclid(nseg as isize) as usize);
                    } else if (0..nseg as isize).contains(&i) {
                        consider(i as usize);
                    }
                }
            }
            _ => (0..nseg).for_each(&mut consider),
        }
        best.expect("at least one segment").1
    }

    /// Checks every pair of non-adjacent segments for a crossing.
    pub fn check_self_intersection(&self) -> Result<(), TrackError> {
        let nseg = self.segment_count();
        for i in 0..nseg {
            for j in (i + 2)..nseg {
                if self.closed && i == 0 && j == nseg - 1 {
                    continue;
                }
                let (a, b) = (self.points[i].pos(), self.points[i + 1].pos());
                let (c, d) = (self.points[j].pos(), self.points[j + 1].pos());
                if segments_intersect(a, b, c, d) {
                    return Err(TrackError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(())
    }
}

fn orient(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Samples the polar centerline r(θ) uniformly in θ and closes the loop.
pub fn generate_track(spec: &TrackSpec) -> Result<RefPath, TrackError> {
    spec.validate()?;
    let n = spec.samples_per_lap;
    let mut xy: Vec<Point2<f64>> = (0..n)
        .map(|i| {
            let th = TAU * i as f64 / n as f64;
            let (r, _, _) = spec.radius(th);
            Point2::new(r * th.cos(), r * th.sin())
        })
        .collect();
    xy.push(xy[0]);
    let path = RefPath::from_xy(&xy, true)?;
    path.check_self_intersection()?;
    Ok(path)
}

/// Offsets `path` by ±`half_width` along the local left normal.
pub fn lane_boundaries(path: &RefPath, half_width: f64) -> Result<(RefPath, RefPath), TrackError> {
    if let Some((index, p)) = path
        .points
        .iter()
        .enumerate()
        .find(|(_, p)| p.curvature.abs() * half_width >= 1.0)
    {
        return Err(TrackError::OffsetDegenerate {
            index,
            curvature: p.curvature,
            half_width,
        });
    }
    let offset = |sign: f64| {
        let xy: Vec<_> = path
            .points
            .iter()
            .map(|p| {
                let (s, c) = p.heading.sin_cos();
                Point2::new(p.x - sign * half_width * s, p.y + sign * half_width * c)
            })
            .collect();
        RefPath::from_xy(&xy, path.closed)
    };
    Ok((offset(1.0)?, offset(-1.0)?))
}
