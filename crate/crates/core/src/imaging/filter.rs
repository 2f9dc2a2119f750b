use serde::{Deserialize, Serialize};

use super::{ImageError, ImageGray};

/// Normalized 1-D Gaussian with radius ⌈3σ⌉.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma == 0` is the identity.
pub fn gaussian_blur(img: &ImageGray, sigma: f64) -> ImageGray {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    if sigma == 0.0 || img.pixels.is_empty() {
        return img.clone();
    }
    let kernel: Vec<f32> = gaussian_kernel(sigma).into_iter().map(|v| v as f32).collect();
    let r = kernel.len() / 2;
    let (w, h) = (img.width, img.height);

    // horizontal pass over an edge-padded copy of each row
    let mut tmp = vec![0f32; w * h];
    let mut padded = vec![0f32; w + 2 * r];
    for y in 0..h {
        let row = &img.pixels[y * w..(y + 1) * w];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[i.saturating_sub(r).min(w - 1)] as f32;
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (k, &kv) in kernel.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(&padded[k..k + w]) {
                *o += kv * v;
            }
        }
    }
    // vertical pass, accumulating whole rows
    let mut out = ImageGray::new(w, h);
    let mut acc = vec![0f32; w];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, &kv) in kernel.iter().enumerate() {
            let yy = (y + k).saturating_sub(r).min(h - 1);
            for (a, &v) in acc.iter_mut().zip(&tmp[yy * w..(yy + 1) * w]) {
                *a += kv * v;
            }
        }
        for (o, &a) in out.pixels[y * w..(y + 1) * w].iter_mut().zip(&acc) {
            *o = a.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Pixels strictly above `t` become 255, the rest 0.
pub fn threshold_binary(img: &ImageGray, t: u8) -> ImageGray {
    ImageGray {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&v| if v > t { 255 } else { 0 }).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

/// Square-window min (erode) or max (dilate), done as two 1-D passes.
fn rank_filter(img: &ImageGray, radius: usize, dilate: bool) -> ImageGray {
    let (w, h) = (img.width, img.height);
    let pick = |a: u8, b: u8| if dilate { a.max(b) } else { a.min(b) };
    let init = if dilate { 0u8 } else { 255u8 };
    let mut tmp = vec![init; w * h];
    let mut padded = vec![init; w + 2 * radius];
    for y in 0..h {
        padded[radius..radius + w].copy_from_slice(&img.pixels[y * w..(y + 1) * w]);
        let out = &mut tmp[y * w..(y + 1) * w];
        for k in 0..=2 * radius {
            for (o, &v) in out.iter_mut().zip(&padded[k..k + w]) {
                *o = pick(*o, v);
            }
        }
    }
    let mut out = ImageGray::filled(w, h, init);
    for y in 0..h {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        let dst = &mut out.pixels[y * w..(y + 1) * w];
        for yy in lo..=hi {
            for (o, &v) in dst.iter_mut().zip(&tmp[yy * w..(yy + 1) * w]) {
                *o = pick(*o, v);
            }
        }
    }
    out
}

/// Binary morphology with a (2·radius+1)² square structuring element.
pub fn morphology(img: &ImageGray, op: MorphOp, radius: usize) -> Result<ImageGray, ImageError> {
    assert!(radius >= 1, "structuring element radius must be >= 1");
    if let Some(&v) = img.pixels.iter().find(|&&v| v != 0 && v != 255) {
        return Err(ImageError::NonBinaryInput(v));
    }
    if img.pixels.is_empty() {
        return Ok(img.clone());
    }
    Ok(match op {
        MorphOp::Erode => rank_filter(img, radius, false),
        MorphOp::Dilate => rank_filter(img, radius, true),
        MorphOp::Open => rank_filter(&rank_filter(img, radius, false), radius, true),
        MorphOp::Close => rank_filter(&rank_filter(img, radius, true), radius, false),
    })
}

/// Blur → threshold → morphology settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub blur_sigma: f64,
    pub threshold: u8,
    pub morph_op: MorphOp,
    pub morph_radius: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 1.5,
            threshold: 100,
            morph_op: MorphOp::Close,
            morph_radius: 2,
        }
    }
}

/// The full chain from a grayscale frame to a binary lane mask.
pub fn preprocess(img: &ImageGray, cfg: &PreprocessConfig) -> ImageGray {
    let mask = threshold_binary(&gaussian_blur(img, cfg.blur_sigma), cfg.threshold);
    if cfg.morph_radius == 0 {
        return mask;
    }
    morphology(&mask, cfg.morph_op, cfg.morph_radius).expect("threshold output is binary")
}
