//! Separable Gaussian smoothing applied before segmentation.

use crate::error::{Error, Result};
use crate::image::{FloatImage, ImageU8};

/// Discrete 1-D Gaussian kernel, truncated at `radius = ceil(3 * sigma)`
/// and renormalized to sum exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub sigma: f64,
    pub radius: usize,
    /// `2 * radius + 1` symmetric weights.
    pub weights: Vec<f64>,
}

/// Sample `exp(-t^2 / (2 sigma^2))` on `t in [-radius, radius]` with
/// `radius = ceil(3 sigma)` and normalize the samples to sum 1. The
/// truncation keeps more than 99.7% of the continuous mass.
pub fn build_kernel(sigma: f64) -> Result<GaussianKernel> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let mut weights: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let t = i as f64 - radius as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(GaussianKernel {
        sigma,
        radius,
        weights,
    })
}

/// Reflect an index into `[0, n)` without repeating the edge sample
/// (reflect-101: ..., 2, 1 | 0, 1, 2, ... for the left border).
#[inline]
fn reflect101(i: i64, n: i64) -> usize {
    debug_assert!(n >= 1);
    if n == 1 {
        return 0;
    }
    let mut i = i;
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// One horizontal-then-vertical separable pass over a single channel plane.
fn smooth_plane(plane: &[f64], width: usize, height: usize, kernel: &GaussianKernel) -> Vec<f64> {
    let r = kernel.radius as i64;
    let w = width as i64;
    let h = height as i64;

    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &wk) in kernel.weights.iter().enumerate() {
                let sx = reflect101(x as i64 + k as i64 - r, w);
                acc += wk * row[sx];
            }
            tmp[y * width + x] = acc;
        }
    }

    let mut out = vec![0.0; plane.len()];
    for x in 0..width {
        for y in 0..height {
            let mut acc = 0.0;
            for (k, &wk) in kernel.weights.iter().enumerate() {
                let sy = reflect101(y as i64 + k as i64 - r, h);
                acc += wk * tmp[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Smooth a 3-channel float image with a separable Gaussian: horizontal
/// pass then vertical pass per channel, reflect-101 borders. Output
/// dimensions equal input dimensions.
pub fn smooth(img: &FloatImage, kernel: &GaussianKernel) -> FloatImage {
    let (w, h) = (img.width as usize, img.height as usize);
    let n = w * h;
    let mut out = vec![0.0; img.data.len()];
    for c in 0..3 {
        let mut plane = vec![0.0; n];
        for i in 0..n {
            plane[i] = img.data[i * 3 + c];
        }
        let smoothed = smooth_plane(&plane, w, h, kernel);
        for i in 0..n {
            out[i * 3 + c] = smoothed[i];
        }
    }
    FloatImage {
        width: img.width,
        height: img.height,
        data: out,
    }
}

/// Smooth an 8-bit RGB image (channels promoted to float, rounded back).
pub fn smooth_rgb(img: &ImageU8, kernel: &GaussianKernel) -> ImageU8 {
    smooth(&FloatImage::from_rgb(img), kernel).to_rgb_u8()
}
