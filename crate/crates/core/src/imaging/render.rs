use nalgebra::Point2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CameraModel, ImageGray};
use crate::track::RefPath;
use crate::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Painted lane-line width in metres.
    pub line_width: f64,
    /// Std-dev of additive Gaussian pixel noise (intensity levels).
    pub noise_sigma: f64,
    /// Fault injection: emit all-black frames.
    pub blank: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            line_width: 0.05,
            noise_sigma: 2.0,
            blank: false,
        }
    }
}

fn to_vehicle(pose: &Pose, p: Point2<f64>) -> (f64, f64) {
    let (s, c) = pose.phi.sin_cos();
    let (dx, dy) = (p.x - pose.x, p.y - pose.y);
    (c * dx + s * dy, -s * dx + c * dy)
}

/// Accumulates max anti-aliased coverage of a thick segment into `cov`.
fn stroke_segment(cov: &mut [f32], w: usize, h: usize, a: Point2<f64>, b: Point2<f64>, half_px: f64) {
    let pad = half_px + 1.0;
    let x0 = (a.x.min(b.x) - pad).floor().max(0.0);
    let x1 = (a.x.max(b.x) + pad).ceil().min(w as f64 - 1.0);
    let y0 = (a.y.min(b.y) - pad).floor().max(0.0);
    let y1 = (a.y.max(b.y) + pad).ceil().min(h as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let ab = b - a;
    let len2 = ab.norm_squared();
    for py in y0 as usize..=y1 as usize {
        for px in x0 as usize..=x1 as usize {
            let p = Point2::new(px as f64, py as f64);
            let t = if len2 > 0.0 {
                ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = (p - (a + ab * t)).norm();
            let c = (half_px + 0.5 - d).clamp(0.0, 1.0) as f32;
            let slot = &mut cov[py * w + px];
            if c > *slot {
                *slot = c;
            }
        }
    }
}

/// Renders the bird's-eye frame seen from `pose`: lane boundaries as bright
/// strokes on black, plus additive Gaussian noise drawn from `rng`.
pub fn render_frame<R: Rng + ?Sized>(
    path_left: &RefPath,
    path_right: &RefPath,
    pose: &Pose,
    cam: &CameraModel,
    cfg: &RenderConfig,
    rng: &mut R,
) -> ImageGray {
    let (w, h) = (cam.width, cam.height);
    let mut cov = vec![0f32; w * h];
    if !cfg.blank {
        let half_px = 0.5 * cfg.line_width * cam.px_per_m;
        // metric radius beyond which a point cannot touch the frame
        let reach = {
            let corners = [(0.0, 0.0), (w as f64, 0.0), (0.0, h as f64), (w as f64, h as f64)];
            corners
                .iter()
                .map(|&(c, r)| {
                    let (f, l) = cam.to_metric(c, r);
                    (f * f + l * l).sqrt()
                })
                .fold(0.0, f64::max)
                + cfg.line_width
        };
        for path in [path_left, path_right] {
            let mut prev: Option<(Point2<f64>, bool)> = None;
            for pt in &path.points {
                let (f, l) = to_vehicle(pose, pt.pos());
                let near = (f * f + l * l).sqrt() <= reach;
                let px = cam.to_pixel(f, l);
                if let Some((pp, pnear)) = prev {
                    if near || pnear {
                        stroke_segment(&mut cov, w, h, pp, px, half_px);
                    }
                }
                prev = Some((px, near));
            }
        }
    }

    let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).expect("finite sigma"));
    let pixels = cov
        .iter()
        .map(|&c| {
            let mut v = 255.0 * c as f64;
            if let Some(n) = &noise {
                v += n.sample(rng);
            }
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    ImageGray {
        width: w,
        height: h,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{generate_track, lane_boundaries, random_spec, Complexity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet() -> RenderConfig {
        RenderConfig {
            noise_sigma: 0.0,
            ..RenderConfig::default()
        }
    }

    fn straight_lanes() -> (RefPath, RefPath) {
        let center = RefPath::straight(Point2::new(-2.0, 0.0), 0.0, 12.0, 121);
        lane_boundaries(&center, 0.4).unwrap()
    }

    fn band_centroids(row: &[u8]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < row.len() {
            if row[i] > 0 {
                let (mut m, mut sw) = (0.0, 0.0);
                while i < row.len() && row[i] > 0 {
                    m += i as f64 * row[i] as f64;
                    sw += row[i] as f64;
                    i += 1;
                }
                out.push(m / sw);
            }
            i += 1;
        }
        out
    }

    #[test]
    fn centered_straight_bands() {
        let (l, r) = straight_lanes();
        let cam = CameraModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = render_frame(&l, &r, &Pose::new(0.0, 0.0, 0.0), &cam, &quiet(), &mut rng);
        for y in [20, 200, 460] {
            let c = band_centroids(&img.pixels[y * 640..(y + 1) * 640]);
            assert_eq!(c.len(), 2, "row {y}: {c:?}");
            assert!((c[0] - 280.0).abs() <= 1.0 && (c[1] - 360.0).abs() <= 1.0, "{c:?}");
        }
    }

    #[test]
    fn rotated_pose_gives_horizontal_bands() {
        let (l, r) = straight_lanes();
        let cam = CameraModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = render_frame(
            &l,
            &r,
            &Pose::new(2.0, -2.0, std::f64::consts::FRAC_PI_2),
            &cam,
            &quiet(),
            &mut rng,
        );
        // lines y = ±0.4 are 2.0 ∓ 0.4 m ahead: rows 470 − 160 and 470 − 240
        let col: Vec<u8> = (0..480).map(|y| img.get(320, y)).collect();
        let c = band_centroids(&col);
        assert_eq!(c.len(), 2, "{c:?}");
        assert!((c[0] - 230.0).abs() <= 1.0 && (c[1] - 310.0).abs() <= 1.0, "{c:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let (l, r) = straight_lanes();
        let cam = CameraModel::default();
        let cfg = RenderConfig::default();
        let a = render_frame(
            &l,
            &r,
            &Pose::new(0.0, 0.1, 0.05),
            &cam,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        let b = render_frame(
            &l,
            &r,
            &Pose::new(0.0, 0.1, 0.05),
            &cam,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn wavy_track_bands_unproject_to_truth() {
        let center = generate_track(&random_spec(5, Complexity::Default)).unwrap();
        let (l, r) = lane_boundaries(&center, 0.4).unwrap();
        let cam = CameraModel::default();
        let mut sq = 0.0;
        let mut n = 0usize;
        for k in [0usize, 90, 200, 333, 500] {
            let p = center.points[k];
            let pose = Pose::new(p.x, p.y, p.heading);
            let img = render_frame(&l, &r, &pose, &cam, &quiet(), &mut ChaCha8Rng::seed_from_u64(0));
            for row in (100..470).step_by(10) {
                let fwd = (cam.origin_px[1] - row as f64) / cam.px_per_m;
                let cents = band_centroids(&img.pixels[row * 640..(row + 1) * 640]);
                for (bound, k_hint) in [(&l, k), (&r, k)] {
                    // truth: the boundary point at this forward distance
                    let truth = lateral_at_forward(bound, &pose, fwd, k_hint);
                    // skip crossings outside (or clipped by) the frame
                    let Some(truth) = truth.filter(|t| t.abs() < cam.half_width_m() - 0.1) else {
                        continue;
                    };
                    let want_col = cam.origin_px[0] - truth * cam.px_per_m;
                    if let Some(c) = cents
                        .iter()
                        .copied()
                        .min_by(|a, b| (a - want_col).abs().total_cmp(&(b - want_col).abs()))
                    {
                        let lat = (cam.origin_px[0] - c) / cam.px_per_m;
                        sq += (lat - truth).powi(2);
                        n += 1;
                    }
                }
            }
        }
        let rms = (sq / n as f64).sqrt();
        assert!(n > 200);
        assert!(rms < 0.015, "rms {rms} over {n} samples");
    }

    /// Lateral coordinate where `path` crosses the line `forward == fwd`.
    fn lateral_at_forward(path: &RefPath, pose: &Pose, fwd: f64, hint: usize) -> Option<f64> {
        let n = path.len();
        for k in 0..200 {
            let i = (hint + k) % (n - 1);
            let (f0, l0) = to_vehicle(pose, path.points[i].pos());
            let (f1, l1) = to_vehicle(pose, path.points[i + 1].pos());
            if (f0 - fwd) * (f1 - fwd) <= 0.0 && f1 != f0 {
                let t = (fwd - f0) / (f1 - f0);
                return Some(l0 + t * (l1 - l0));
            }
        }
        None
    }
}
