//! Planar homography estimation, perspective warping and chessboard spacing checks.
//!
//! Homographies are estimated with the normalized Direct Linear Transform:
//! both point sets are translated to their centroid and scaled so the mean
//! distance from it is √2, the 2n×9 design matrix is solved for its smallest
//! right singular vector, and the result is denormalized and scaled so that
//! `h[(2, 2)] == 1`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Point2, Vector3};
use thiserror::Error;

use crate::imaging::ImageGray;

/// |w| at or below this is treated as a point at infinity.
const W_EPS: f64 = 1e-12;
/// Ratio of the two smallest singular values below which the DLT system is
/// considered to have more than a one-dimensional null space.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("degenerate correspondence configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("point maps to infinity (w = {0:e})")]
    PointAtInfinity(f64),
    #[error("homography is not invertible (det = {0:e})")]
    Singular(f64),
    #[error("degenerate chessboard grid: {0}")]
    DegenerateGrid(String),
    #[error("correspondence file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

/// A 3×3 projective map between two planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub h: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Self {
        Self { h: Matrix3::identity() }
    }

    /// Wraps a matrix, rejecting (near-)singular ones.
    pub fn new(h: Matrix3<f64>) -> Result<Self, CalibError> {
        let det = h.determinant();
        if !det.is_finite() || det.abs() <= 1e-12 {
            return Err(CalibError::Singular(det));
        }
        Ok(Self { h })
    }

    /// Pure translation by `(tx, ty)`.
    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            h: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    /// Scales so the bottom-right entry is 1 (no-op when it is ~0).
    pub fn normalized(&self) -> Self {
        let s = self.h[(2, 2)];
        if s.abs() > f64::EPSILON {
            Self { h: self.h / s }
        } else {
            *self
        }
    }

    pub fn inverse(&self) -> Result<Self, CalibError> {
        self.h
            .try_inverse()
            .map(|h| Self { h }.normalized())
            .ok_or(CalibError::Singular(self.h.determinant()))
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Homography) -> Self {
        Self { h: self.h * first.h }
    }

    pub fn apply(&self, p: Point2<f64>) -> Result<Point2<f64>, CalibError> {
        apply_homography(self, p)
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 9] {
        let h = &self.h;
        [
            h[(0, 0)],
            h[(0, 1)],
            h[(0, 2)],
            h[(1, 0)],
            h[(1, 1)],
            h[(1, 2)],
            h[(2, 0)],
            h[(2, 1)],
            h[(2, 2)],
        ]
    }
}

/// A source/destination point pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src: Point2<f64>,
    pub dst: Point2<f64>,
}

impl Correspondence {
    pub fn new(sx: f64, sy: f64, dx: f64, dy: f64) -> Self {
        Self {
            src: Point2::new(sx, sy),
            dst: Point2::new(dx, dy),
        }
    }
}

/// Interior chessboard corners in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChessboardGrid {
    pub rows: usize,
    pub cols: usize,
    pub corners: Vec<Point2<f64>>,
}

impl ChessboardGrid {
    pub const DEFAULT_COLS: usize = 5;
    pub const DEFAULT_ROWS: usize = 4;

    /// Perfect axis-aligned grid starting at `origin` with the given pitch.
    pub fn regular(rows: usize, cols: usize, origin: Point2<f64>, pitch: f64) -> Self {
        let corners = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| Point2::new(origin.x + c as f64 * pitch, origin.y + r as f64 * pitch)))
            .collect();
        Self { rows, cols, corners }
    }

    /// The 5×4 board used for calibration.
    pub fn default_board(origin: Point2<f64>, pitch: f64) -> Self {
        Self::regular(Self::DEFAULT_ROWS, Self::DEFAULT_COLS, origin, pitch)
    }

    pub fn corner(&self, row: usize, col: usize) -> Point2<f64> {
        self.corners[row * self.cols + col]
    }

    /// Maps every corner through `h`.
    pub fn transformed(&self, h: &Homography) -> Result<Self, CalibError> {
        let corners = self
            .corners
            .iter()
            .map(|&p| apply_homography(h, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            corners,
        })
    }
}

/// Spacing statistics over adjacent corner pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpacing {
    pub mean_dx: f64,
    pub mean_dy: f64,
    pub max_rel_dev: f64,
}

/// Hartley normalization: returns the normalized points and the similarity
/// transform `T` with `p_norm = T p`.
fn normalize_points(points: &[Point2<f64>]) -> Option<(Vec<Point2<f64>>, Matrix3<f64>)> {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(ax, ay), p| (ax + p.x, ay + p.y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean_dist > f64::EPSILON) || !mean_dist.is_finite() {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let normed = points
        .iter()
        .map(|p| Point2::new(s * (p.x - cx), s * (p.y - cy)))
        .collect();
    Some((normed, t))
}

/// Estimates the homography mapping each `src` to its `dst`.
pub fn estimate_homography(pairs: &[Correspondence]) -> Result<Homography, CalibError> {
    let n = pairs.len();
    if n < 4 {
        return Err(CalibError::DegenerateConfiguration(format!(
            "need at least 4 correspondences, got {n}"
        )));
    }
    if pairs
        .iter()
        .any(|c| !(c.src.x.is_finite() && c.src.y.is_finite() && c.dst.x.is_finite() && c.dst.y.is_finite()))
    {
        return Err(CalibError::DegenerateConfiguration("non-finite coordinate".into()));
    }

    let src: Vec<_> = pairs.iter().map(|c| c.src).collect();
    let dst: Vec<_> = pairs.iter().map(|c| c.dst).collect();
    let (src_n, t_src) =
        normalize_points(&src).ok_or_else(|| CalibError::DegenerateConfiguration("coincident source points".into()))?;
    let (dst_n, t_dst) = normalize_points(&dst)
        .ok_or_else(|| CalibError::DegenerateConfiguration("coincident destination points".into()))?;

    // Pad to at least 9 rows so the SVD exposes the full right null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src_n.iter().zip(&dst_n).enumerate() {
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let r0 = 2 * i;
        let r1 = r0 + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| CalibError::DegenerateConfiguration("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let second = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[order.len() - 1]];
    if second <= RANK_TOL * largest {
        return Err(CalibError::DegenerateConfiguration(
            "design matrix is rank deficient (collinear points?)".into(),
        ));
    }

    let hv = v_t.row(smallest);
    let h_norm = Matrix3::new(hv[0], hv[1], hv[2], hv[3], hv[4], hv[5], hv[6], hv[7], hv[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| CalibError::DegenerateConfiguration("normalization".into()))?;
    let h = t_dst_inv * h_norm * t_src;
    if h[(2, 2)].abs() <= f64::EPSILON * h.abs().max() {
        return Err(CalibError::DegenerateConfiguration(
            "h33 vanishes; origin maps to infinity".into(),
        ));
    }
    Homography::new(h / h[(2, 2)])
}

/// Maps `p` through `h` with perspective division.
pub fn apply_homography(h: &Homography, p: Point2<f64>) -> Result<Point2<f64>, CalibError> {
    let q = h.h * Vector3::new(p.x, p.y, 1.0);
    if q.z.abs() <= W_EPS || !q.z.is_finite() {
        return Err(CalibError::PointAtInfinity(q.z));
    }
    Ok(Point2::new(q.x / q.z, q.y / q.z))
}

/// Bilinear sample with pixel centers at integer coordinates; `None` outside
/// the image.
pub fn sample_bilinear(img: &ImageGray, x: f64, y: f64) -> Option<f64> {
    let w = img.width as f64;
    let h = img.height as f64;
    if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p = |xx: usize, yy: usize| img.get(xx, yy) as f64;
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    Some(top * (1.0 - fy) + bot * fy)
}

/// Warps `img` by `h` (source → output coordinates) with inverse mapping.
/// Output pixels whose preimage falls outside the source are 0.
pub fn warp_image(img: &ImageGray, h: &Homography, out_w: usize, out_h: usize) -> Result<ImageGray, CalibError> {
    let inv = h.inverse()?.h;
    let mut out = ImageGray::new(out_w, out_h);
    for v in 0..out_h {
        for u in 0..out_w {
            let q = inv * Vector3::new(u as f64, v as f64, 1.0);
            if q.z.abs() <= W_EPS {
                continue;
            }
            if let Some(val) = sample_bilinear(img, q.x / q.z, q.y / q.z) {
                out.set(u, v, val.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

/// Mean horizontal/vertical corner spacing and the worst relative deviation
/// of any single adjacent pair from its axis mean.
pub fn verify_grid_spacing(grid: &ChessboardGrid) -> Result<GridSpacing, CalibError> {
    if grid.rows < 2 || grid.cols < 2 {
        return Err(CalibError::DegenerateGrid(format!(
            "need at least 2×2 corners, got {}×{}",
            grid.rows, grid.cols
        )));
    }
    if grid.corners.len() != grid.rows * grid.cols {
        return Err(CalibError::DegenerateGrid(format!(
            "expected {} corners, got {}",
            grid.rows * grid.cols,
            grid.corners.len()
        )));
    }
    let mut horiz = Vec::with_capacity(grid.rows * (grid.cols - 1));
    let mut vert = Vec::with_capacity((grid.rows - 1) * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let p = grid.corner(r, c);
            if c + 1 < grid.cols {
                horiz.push((grid.corner(r, c + 1) - p).norm());
            }
            if r + 1 < grid.rows {
                vert.push((grid.corner(r + 1, c) - p).norm());
            }
        }
    }
    if let Some(d) = horiz.iter().chain(&vert).find(|d| !(**d >= 1e-9)) {
        return Err(CalibError::DegenerateGrid(format!(
            "adjacent corners closer than 1e-9 px ({d:e})"
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_dx = mean(&horiz);
    let mean_dy = mean(&vert);
    let dev = |v: &[f64], m: f64| v.iter().map(|d| (d - m).abs() / m).fold(0.0, f64::max);
    Ok(GridSpacing {
        mean_dx,
        mean_dy,
        max_rel_dev: dev(&horiz, mean_dx).max(dev(&vert, mean_dy)),
    })
}

/// Parses `sx sy dx dy` lines; `#` starts a comment.
pub fn parse_correspondences(text: &str) -> Result<Vec<Correspondence>, CalibError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CalibError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        if vals.len() != 4 {
            return Err(CalibError::Parse {
                line: i + 1,
                msg: format!("expected 4 numbers, got {}", vals.len()),
            });
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CalibError::Parse {
                line: i + 1,
                msg: "non-finite coordinate".into(),
            });
        }
        out.push(Correspondence::new(vals[0], vals[1], vals[2], vals[3]));
    }
    Ok(out)
}

pub fn load_correspondences(path: &Path) -> Result<Vec<Correspondence>, CalibError> {
    let text = fs::read_to_string(path).map_err(|e| CalibError::Io(format!("{}: {e}", path.display())))?;
    parse_correspondences(&text)
}

/// Renders an anti-aliased checkerboard with `squares_x × squares_y` squares
/// of `square` px, top-left corner at `origin`. Its interior corners form a
/// `(squares_y - 1) × (squares_x - 1)` grid.
pub fn render_checkerboard(
    width: usize,
    height: usize,
    origin: Point2<f64>,
    square: f64,
    squares_x: usize,
    squares_y: usize,
) -> ImageGray {
    const SS: usize = 4;
    let mut img = ImageGray::new(width, height);
    let bw = square * squares_x as f64;
    let bh = square * squares_y as f64;
    for v in 0..height {
        for u in 0..width {
            let mut acc = 0.0;
            for sy in 0..SS {
                for sx in 0..SS {
                    let x = u as f64 - 0.5 + (sx as f64 + 0.5) / SS as f64 - origin.x;
                    let y = v as f64 - 0.5 + (sy as f64 + 0.5) / SS as f64 - origin.y;
                    if x < 0.0 || y < 0.0 || x >= bw || y >= bh {
                        acc += 128.0;
                        continue;
                    }
                    let cell = (x / square).floor() as i64 + (y / square).floor() as i64;
                    acc += if cell % 2 == 0 { 230.0 } else { 25.0 };
                }
            }
            img.set(u, v, (acc / (SS * SS) as f64).round() as u8);
        }
    }
    img
}
