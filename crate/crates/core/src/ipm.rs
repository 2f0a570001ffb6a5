//! Inverse perspective mapping: homography estimation from point
//! correspondences, top-down warping, and the pixel-to-ground lookup
//! table with an SSD error report.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Error, Result};
use crate::image::{ImageU8, BLACK};

/// Homogeneous w below which a point is treated as at infinity.
const W_EPS: f64 = 1e-12;

/// One image-plane / ground-plane point pair (ground units are cm).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointCorrespondence {
    pub image: (f64, f64),
    pub ground: (f64, f64),
}

/// 3x3 projective transform, normalized so `h[2][2] == 1` when that
/// entry is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
}

/// Calibration file contents: the correspondences plus the physical
/// chessboard square size they came from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationConfig {
    pub square_size_cm: f64,
    pub correspondences: Vec<PointCorrespondence>,
}

impl CalibrationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let mut m = *m;
        if m[(2, 2)].abs() > W_EPS {
            m /= m[(2, 2)];
        }
        if m.determinant().abs() <= 1e-12 {
            return Err(Error::DegenerateConfiguration(
                "homography is singular".into(),
            ));
        }
        let mut h = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                h[r][c] = m[(r, c)];
            }
        }
        Ok(Self { h })
    }

    fn to_matrix(self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.h[r][c])
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self
            .to_matrix()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateConfiguration("homography is singular".into()))?;
        Homography::from_matrix(&inv)
    }
}

/// Similarity transform taking the points to centroid 0 and RMS distance
/// sqrt(2) (Hartley normalization).
fn normalizing_transform(points: &[(f64, f64)]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let rms = (points
        .iter()
        .map(|p| (p.0 - cx).powi(2) + (p.1 - cy).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if rms < 1e-12 {
        return Err(Error::DegenerateConfiguration(
            "correspondence points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / rms;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let area2 = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let scale = (b.0 - a.0).hypot(b.1 - a.1) * (c.0 - a.0).hypot(c.1 - a.1);
    area2.abs() <= 1e-9 * scale.max(1.0)
}

/// Estimate the homography mapping image points to ground points.
///
/// Exactly 4 correspondences give the classic exact solve; more give the
/// overdetermined least-squares fit. Both run the normalized DLT (solve
/// `A h = 0` by SVD on Hartley-normalized points).
pub fn estimate_homography(correspondences: &[PointCorrespondence]) -> Result<Homography> {
    let n = correspondences.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 4 correspondences, got {n}"
        )));
    }
    let image: Vec<(f64, f64)> = correspondences.iter().map(|c| c.image).collect();
    let ground: Vec<(f64, f64)> = correspondences.iter().map(|c| c.ground).collect();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(image[i], image[j], image[k]) {
                    return Err(Error::DegenerateConfiguration(format!(
                        "image points {i}, {j}, {k} are collinear"
                    )));
                }
            }
        }
    }

    let t_img = normalizing_transform(&image)?;
    let t_gnd = normalizing_transform(&ground)?;
    let map = |t: &Matrix3<f64>, p: (f64, f64)| -> (f64, f64) {
        (
            t[(0, 0)] * p.0 + t[(0, 2)],
            t[(1, 1)] * p.1 + t[(1, 2)],
        )
    };

    let mut a = DMatrix::<f64>::zeros(2 * n + 1, 9);
    for (i, c) in correspondences.iter().enumerate() {
        let (x, y) = map(&t_img, c.image);
        let (u, v) = map(&t_gnd, c.ground);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
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
    let v_t = svd.v_t.ok_or_else(|| {
        Error::DegenerateConfiguration("SVD failed on the DLT system".into())
    })?;
    // Right singular vector of the smallest singular value.
    let min_idx = (0..svd.singular_values.len())
        .min_by(|&i, &j| {
            svd.singular_values[i]
                .partial_cmp(&svd.singular_values[j])
                .unwrap()
        })
        .expect("nonempty singular values");
    let hv = v_t.row(min_idx);
    let h_norm = Matrix3::new(hv[0], hv[1], hv[2], hv[3], hv[4], hv[5], hv[6], hv[7], hv[8]);

    // De-normalize: H = T_ground^-1 * H_norm * T_image.
    let t_gnd_inv = t_gnd
        .try_inverse()
        .expect("similarity transforms are invertible");
    let h = t_gnd_inv * h_norm * t_img;
    let h = Homography::from_matrix(&h)?;

    // An exact 4-point solve must interpolate its correspondences.
    if n == 4 {
        for c in correspondences {
            let p = apply_homography(&h, c.image)?;
            let err = (p.0 - c.ground.0).hypot(p.1 - c.ground.1);
            if err > 1e-6 {
                return Err(Error::DegenerateConfiguration(format!(
                    "4-point solve failed to interpolate (residual {err:.2e})"
                )));
            }
        }
    }
    Ok(h)
}

/// Apply the projective transform to one point.
pub fn apply_homography(h: &Homography, p: (f64, f64)) -> Result<(f64, f64)> {
    let m = &h.h;
    let w = m[2][0] * p.0 + m[2][1] * p.1 + m[2][2];
    if w.abs() < W_EPS {
        return Err(Error::PointAtInfinity);
    }
    Ok((
        (m[0][0] * p.0 + m[0][1] * p.1 + m[0][2]) / w,
        (m[1][0] * p.0 + m[1][1] * p.1 + m[1][2]) / w,
    ))
}

/// Sum of squared distances between mapped image points and their ground
/// points.
pub fn reprojection_error(h: &Homography, test_points: &[PointCorrespondence]) -> Result<f64> {
    if test_points.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut err = 0.0;
    for c in test_points {
        let p = apply_homography(h, c.image)?;
        err += (p.0 - c.ground.0).powi(2) + (p.1 - c.ground.1).powi(2);
    }
    Ok(err)
}

/// Warp the quadrilateral `roi` (ordered top-left, top-right,
/// bottom-right, bottom-left) to a top-down `out_w` x `out_h` view.
///
/// Destination corners are `(0,0)`, `(out_w-1,0)`, `(out_w-1,out_h-1)`,
/// `(0,out_h-1)`; each output pixel is bilinearly sampled through the
/// inverse map, black where the source falls outside the image.
pub fn warp_topdown(
    img: &ImageU8,
    roi: [(f64, f64); 4],
    out_w: u32,
    out_h: u32,
) -> Result<ImageU8> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::EmptyImage);
    }
    let dst = [
        (0.0, 0.0),
        (f64::from(out_w - 1), 0.0),
        (f64::from(out_w - 1), f64::from(out_h - 1)),
        (0.0, f64::from(out_h - 1)),
    ];
    let correspondences: Vec<PointCorrespondence> = roi
        .iter()
        .zip(dst)
        .map(|(&image, ground)| PointCorrespondence { image, ground })
        .collect();
    // Destination -> source map for inverse sampling.
    let h_inv = estimate_homography(&correspondences)?.inverse()?;

    let mut out = ImageU8::filled(out_w, out_h, [BLACK; 3])?;
    for y in 0..out_h {
        for x in 0..out_w {
            let Ok((sx, sy)) = apply_homography(&h_inv, (f64::from(x), f64::from(y))) else {
                continue;
            };
            if let Some(px) = bilinear_sample(img, sx, sy) {
                out.set_pixel(x, y, px);
            }
        }
    }
    Ok(out)
}

fn bilinear_sample(img: &ImageU8, x: f64, y: f64) -> Option<[u8; 3]> {
    // Snap numeric noise at the borders before the range check.
    const SNAP: f64 = 1e-6;
    let x = if x.abs() < SNAP { 0.0 } else { x };
    let y = if y.abs() < SNAP { 0.0 } else { y };
    let x = if (x - f64::from(img.width - 1)).abs() < SNAP {
        f64::from(img.width - 1)
    } else {
        x
    };
    let y = if (y - f64::from(img.height - 1)).abs() < SNAP {
        f64::from(img.height - 1)
    } else {
        y
    };
    if x < 0.0 || y < 0.0 || x > f64::from(img.width - 1) || y > f64::from(img.height - 1) {
        return None;
    }
    let x0 = x.floor() as u32;
    let y0 = y.floor() as u32;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - f64::from(x0);
    let fy = y - f64::from(y0);
    let p00 = img.pixel(x0, y0);
    let p10 = img.pixel(x1, y0);
    let p01 = img.pixel(x0, y1);
    let p11 = img.pixel(x1, y1);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
        let bot = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
        out[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
    Some(out)
}

/// Rectangular image region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Roi {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

/// Per-pixel ground coordinates over an image region. Entries are `None`
/// where the pixel maps to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub roi: Roi,
    /// Row-major over the roi: `(X, Y)` ground coordinates in cm.
    pub entries: Vec<Option<(f64, f64)>>,
}

/// Precompute the ground coordinates of every pixel in the region.
pub fn build_lookup_table(h: &Homography, roi: Roi) -> LookupTable {
    let mut entries = Vec::with_capacity(roi.width as usize * roi.height as usize);
    for y in roi.y..roi.y + roi.height {
        for x in roi.x..roi.x + roi.width {
            entries.push(apply_homography(h, (f64::from(x), f64::from(y))).ok());
        }
    }
    LookupTable { roi, entries }
}

impl LookupTable {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Option<(f64, f64)> {
        let dx = x.checked_sub(self.roi.x)?;
        let dy = y.checked_sub(self.roi.y)?;
        if dx >= self.roi.width || dy >= self.roi.height {
            return None;
        }
        self.entries[dy as usize * self.roi.width as usize + dx as usize]
    }

    /// `x,y,X,Y,valid` CSV rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,X,Y,valid")?;
        let mut i = 0;
        for y in self.roi.y..self.roi.y + self.roi.height {
            for x in self.roi.x..self.roi.x + self.roi.width {
                match self.entries[i] {
                    Some((gx, gy)) => writeln!(w, "{x},{y},{gx:.6},{gy:.6},1")?,
                    None => writeln!(w, "{x},{y},nan,nan,0")?,
                }
                i += 1;
            }
        }
        Ok(())
    }

    /// Compact binary format: magic `IPMLUT1`, then roi x, y, width,
    /// height as little-endian u32, then row-major little-endian f64
    /// `(X, Y)` pairs with NaN marking invalid entries.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"IPMLUT1")?;
        for v in [self.roi.x, self.roi.y, self.roi.width, self.roi.height] {
            w.write_all(&v.to_le_bytes())?;
        }
        for e in &self.entries {
            let (gx, gy) = e.unwrap_or((f64::NAN, f64::NAN));
            w.write_all(&gx.to_le_bytes())?;
            w.write_all(&gy.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 7 + 16 || &bytes[..7] != b"IPMLUT1" {
            return Err(Error::CorruptData("bad IPMLUT1 header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let roi = Roi {
            x: u32_at(7),
            y: u32_at(11),
            width: u32_at(15),
            height: u32_at(19),
        };
        let n = roi.width as usize * roi.height as usize;
        if bytes.len() != 23 + n * 16 {
            return Err(Error::CorruptData(format!(
                "IPMLUT1 payload length {} does not match {}x{} roi",
                bytes.len() - 23,
                roi.width,
                roi.height
            )));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let entries = (0..n)
            .map(|i| {
                let gx = f64_at(23 + i * 16);
                let gy = f64_at(23 + i * 16 + 8);
                if gx.is_nan() || gy.is_nan() {
                    None
                } else {
                    Some((gx, gy))
                }
            })
            .collect();
        Ok(Self { roi, entries })
    }
}
