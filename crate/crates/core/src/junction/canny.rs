//! Canny edge detection: Gaussian pre-blur, Sobel gradients, non-maximum
//! suppression along the gradient direction, double-threshold hysteresis.

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::smooth::build_kernel;

/// Internal pre-blur bandwidth, on the usual Canny scale.
const BLUR_SIGMA: f64 = 1.4;

/// Binary edge indicator raster. Edges are one pixel wide after
/// non-maximum suppression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&e| e).count()
    }

    /// Coordinates of all edge pixels in raster order.
    pub fn points(&self) -> Vec<(u32, u32)> {
        let mut pts = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    pts.push((x, y));
                }
            }
        }
        pts
    }

    /// Render as an 8-bit image (edges white).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&e| if e { 255 } else { 0 }).collect(),
        }
    }
}

/// Separable reflect-101 Gaussian blur of a single-channel f64 plane.
fn blur_plane(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let kernel = build_kernel(sigma).expect("fixed positive sigma");
    let r = kernel.radius as i64;
    let reflect = |i: i64, n: i64| -> usize {
        if n == 1 {
            return 0;
        }
        let period = 2 * (n - 1);
        let mut i = i.rem_euclid(period);
        if i >= n {
            i = period - i;
        }
        i as usize
    };
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.weights.iter().enumerate() {
                acc += wk * plane[y * w + reflect(x as i64 + k as i64 - r, w as i64)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.weights.iter().enumerate() {
                acc += wk * tmp[reflect(y as i64 + k as i64 - r, h as i64) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Standard Canny on a grayscale image.
///
/// `low` and `high` are hysteresis thresholds on the Sobel gradient
/// magnitude (0..=255 luma scale, so magnitudes reach ~1443). Weak edges
/// (between the thresholds) survive only when 8-connected to a strong
/// edge.
pub fn canny(gray: &GrayImage, low: f64, high: f64) -> Result<EdgeMap> {
    if low > high {
        return Err(Error::InvalidThresholds { low, high });
    }
    if low < 0.0 {
        return Err(Error::InvalidThresholds { low, high });
    }
    let w = gray.width as usize;
    let h = gray.height as usize;
    let mut edges = EdgeMap::empty(gray.width, gray.height);
    if w < 3 || h < 3 {
        return Ok(edges);
    }

    let plane: Vec<f64> = gray.data.iter().map(|&v| f64::from(v)).collect();
    let blurred = blur_plane(&plane, w, h, BLUR_SIGMA);

    // Sobel gradients on the interior.
    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    let mut mag = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: i64, dy: i64| blurred[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx[y * w + x] = sx;
            gy[y * w + x] = sy;
            mag[y * w + x] = sx.hypot(sy);
        }
    }

    // Non-maximum suppression along the quantized gradient direction.
    // Ties break toward the later neighbor so plateau edges stay one
    // pixel wide.
    let mut thin = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let m = mag[y * w + x];
            if m == 0.0 {
                continue;
            }
            let mut angle = gy[y * w + x].atan2(gx[y * w + x]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (before, after) = if !(22.5..157.5).contains(&angle) {
                (mag[y * w + x - 1], mag[y * w + x + 1])
            } else if angle < 67.5 {
                (mag[(y - 1) * w + x - 1], mag[(y + 1) * w + x + 1])
            } else if angle < 112.5 {
                (mag[(y - 1) * w + x], mag[(y + 1) * w + x])
            } else {
                (mag[(y + 1) * w + x - 1], mag[(y - 1) * w + x + 1])
            };
            if m >= before && m > after {
                thin[y * w + x] = m;
            }
        }
    }

    // Hysteresis: BFS from strong pixels through weak ones.
    let mut stack = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if thin[y * w + x] >= high && !edges.get(x as u32, y as u32) {
                edges.set(x as u32, y as u32, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let nx = cx as i64 + dx;
                            let ny = cy as i64 + dy;
                            if nx < 1 || ny < 1 || nx >= w as i64 - 1 || ny >= h as i64 - 1 {
                                continue;
                            }
                            let (nx, ny) = (nx as usize, ny as usize);
                            if thin[ny * w + nx] >= low && !edges.get(nx as u32, ny as u32) {
                                edges.set(nx as u32, ny as u32, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(edges)
}
