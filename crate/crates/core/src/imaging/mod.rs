//! Grayscale images, binary PGM I/O, the bird's-eye camera model, the lane
//! renderer and the preprocessing filters.

mod filter;
mod render;

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{gaussian_blur, morphology, preprocess, threshold_binary, MorphOp, PreprocessConfig};
pub use render::{render_frame, RenderConfig};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("morphology requires a binary image (found value {0})")]
    NonBinaryInput(u8),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageGray {
    pub const DEFAULT_WIDTH: usize = 640;
    pub const DEFAULT_HEIGHT: usize = 480;

    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|&v| v == 0 || v == 255)
    }

    pub fn count_set(&self) -> usize {
        self.pixels.iter().filter(|&&v| v > 0).count()
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), ImageError> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_pgm_bytes())?;
        Ok(())
    }

    pub fn read_pgm(path: &Path) -> Result<Self, ImageError> {
        Self::from_pgm_bytes(&fs::read(path)?)
    }

    /// Parses binary PGM (P5) with maxval ≤ 255; header comments are skipped.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0;
        let mut tokens = Vec::with_capacity(4);
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(ImageError::Pgm("truncated header".into()));
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        if tokens[0] != "P5" {
            return Err(ImageError::Pgm(format!("unsupported magic {}", tokens[0])));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| ImageError::Pgm(format!("bad header field {s:?}")))
        };
        let (width, height, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(ImageError::Pgm(format!("unsupported maxval {maxval}")));
        }
        let n = width * height;
        if bytes.len() < pos + n {
            return Err(ImageError::Pgm("truncated raster".into()));
        }
        let mut pixels = bytes[pos..pos + n].to_vec();
        if maxval != 255 {
            for p in &mut pixels {
                *p = ((*p as u32 * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8;
            }
        }
        Ok(Self { width, height, pixels })
    }
}

/// Bird's-eye camera: vehicle forward is image-up, vehicle left is image-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraModel {
    pub px_per_m: f64,
    /// Pixel position of the vehicle reference point.
    pub origin_px: [f64; 2],
    pub width: usize,
    pub height: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            px_per_m: 100.0,
            origin_px: [320.0, 470.0],
            width: ImageGray::DEFAULT_WIDTH,
            height: ImageGray::DEFAULT_HEIGHT,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.px_per_m > 0.0) {
            return Err("camera.px_per_m must be > 0".into());
        }
        if self.width == 0 || self.height == 0 {
            return Err("camera frame must be non-empty".into());
        }
        let [ox, oy] = self.origin_px;
        if !(ox >= 0.0 && oy >= 0.0 && ox <= self.width as f64 && oy <= self.height as f64) {
            return Err("camera.origin_px must lie inside the frame".into());
        }
        Ok(())
    }

    /// Vehicle-frame (forward, left) metres → pixel (col, row).
    #[inline]
    pub fn to_pixel(&self, forward: f64, left: f64) -> Point2<f64> {
        Point2::new(
            self.origin_px[0] - left * self.px_per_m,
            self.origin_px[1] - forward * self.px_per_m,
        )
    }

    /// Pixel (col, row) → vehicle-frame (forward, left) metres.
    #[inline]
    pub fn to_metric(&self, col: f64, row: f64) -> (f64, f64) {
        (
            (self.origin_px[1] - row) / self.px_per_m,
            (self.origin_px[0] - col) / self.px_per_m,
        )
    }

    /// Half the frame width in metres.
    pub fn half_width_m(&self) -> f64 {
        0.5 * self.width as f64 / self.px_per_m
    }
}
