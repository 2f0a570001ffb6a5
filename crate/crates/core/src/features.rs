//! Safe-zone geometry, per-superpixel masks and feature extraction, and
//! safe-zone color histograms.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::image::{FloatImage, ImageU8, OccupancyMask, BLACK, WHITE};
use crate::slic::SegmentLabels;

/// Fixed trapezoidal region directly in front of the robot, assumed free
/// of obstacles. Vertices in image coordinates, listed bottom-left,
/// bottom-right, top-right, top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeZone {
    pub vertices: [(f64, f64); 4],
}

/// Safe zone as read from configuration: either absolute pixel
/// coordinates or fractions of the image size.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafeZoneSpec {
    Absolute([(f64, f64); 4]),
    Relative([(f64, f64); 4]),
}

impl Default for SafeZoneSpec {
    /// Bottom-center trapezoid: 20%..80% of the width along the bottom
    /// edge, narrowing to 35%..65% at three quarters of the height.
    fn default() -> Self {
        SafeZoneSpec::Relative([(0.20, 0.99), (0.80, 0.99), (0.65, 0.75), (0.35, 0.75)])
    }
}

impl SafeZoneSpec {
    pub fn resolve(&self, width: u32, height: u32) -> Result<SafeZone> {
        let vertices = match self {
            SafeZoneSpec::Absolute(v) => *v,
            SafeZoneSpec::Relative(v) => {
                // Fractions map onto pixel coordinates [0, dim - 1].
                let mut out = [(0.0, 0.0); 4];
                for (i, (fx, fy)) in v.iter().enumerate() {
                    out[i] = (fx * f64::from(width - 1), fy * f64::from(height - 1));
                }
                out
            }
        };
        SafeZone::new(vertices, width, height)
    }
}

impl SafeZone {
    pub fn new(vertices: [(f64, f64); 4], width: u32, height: u32) -> Result<Self> {
        for (i, &(x, y)) in vertices.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidSafeZone(format!("vertex {i} not finite")));
            }
            if x < 0.0 || y < 0.0 || x > f64::from(width - 1) || y > f64::from(height - 1) {
                return Err(Error::InvalidSafeZone(format!(
                    "vertex {i} ({x}, {y}) outside {width}x{height} image"
                )));
            }
        }
        let zone = Self { vertices };
        if zone.area().abs() < 1e-9 {
            return Err(Error::InvalidSafeZone("zero area".into()));
        }
        if zone.self_intersects() {
            return Err(Error::InvalidSafeZone("polygon self-intersects".into()));
        }
        Ok(zone)
    }

    /// Signed shoelace area.
    fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut a = 0.0;
        for i in 0..4 {
            let (x1, y1) = v[i];
            let (x2, y2) = v[(i + 1) % 4];
            a += x1 * y2 - x2 * y1;
        }
        a / 2.0
    }

    fn self_intersects(&self) -> bool {
        // The two pairs of non-adjacent edges must not cross.
        let v = &self.vertices;
        let e = |i: usize| (v[i], v[(i + 1) % 4]);
        segments_cross(e(0), e(2)) || segments_cross(e(1), e(3))
    }

    /// Area centroid; the region-growing seed point.
    pub fn centroid(&self) -> (f64, f64) {
        let v = &self.vertices;
        let a = self.area();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..4 {
            let (x1, y1) = v[i];
            let (x2, y2) = v[(i + 1) % 4];
            let cross = x1 * y2 - x2 * y1;
            cx += (x1 + x2) * cross;
            cy += (y1 + y2) * cross;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Boundary-inclusive point-in-polygon test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let v = &self.vertices;
        for i in 0..4 {
            if point_on_segment((x, y), v[i], v[(i + 1) % 4]) {
                return true;
            }
        }
        // Even-odd ray cast toward +x.
        let mut inside = false;
        for i in 0..4 {
            let (x1, y1) = v[i];
            let (x2, y2) = v[(i + 1) % 4];
            if (y1 > y) != (y2 > y) {
                let t = (y - y1) / (y2 - y1);
                if x < x1 + t * (x2 - x1) {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn point_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    const EPS: f64 = 1e-9;
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if cross.abs() > EPS * (1.0 + (b.0 - a.0).abs() + (b.1 - a.1).abs()) {
        return false;
    }
    p.0 >= a.0.min(b.0) - EPS
        && p.0 <= a.0.max(b.0) + EPS
        && p.1 >= a.1.min(b.1) - EPS
        && p.1 <= a.1.max(b.1) + EPS
}

fn segments_cross(s1: ((f64, f64), (f64, f64)), s2: ((f64, f64), (f64, f64))) -> bool {
    let d = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let (a, b) = s1;
    let (c, e) = s2;
    let d1 = d(c, e, a);
    let d2 = d(c, e, b);
    let d3 = d(a, b, c);
    let d4 = d(a, b, e);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// The 7 scalar descriptors of one superpixel: center color (l, a, b),
/// pixel area, and width / height / diagonal ray extents.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelFeatures {
    pub label: u32,
    pub l: f64,
    pub a: f64,
    pub b: f64,
    pub area: u32,
    pub width: u32,
    pub height: u32,
    pub diagonal: u32,
    /// Pixel the color was sampled at (nearest member to the mean position).
    pub center: (u32, u32),
}

impl SuperpixelFeatures {
    /// The feature vector in a fixed order: l, a, b, area, width, height,
    /// diagonal.
    pub fn vector(&self) -> [f64; 7] {
        [
            self.l,
            self.a,
            self.b,
            f64::from(self.area),
            f64::from(self.width),
            f64::from(self.height),
            f64::from(self.diagonal),
        ]
    }
}

/// Per-channel 256-bin intensity counts in the B, G, R plane order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorHistogram {
    pub b: Vec<u64>,
    pub g: Vec<u64>,
    pub r: Vec<u64>,
}

impl ColorHistogram {
    pub fn new() -> Self {
        Self {
            b: vec![0; 256],
            g: vec![0; 256],
            r: vec![0; 256],
        }
    }

    pub fn add_pixel(&mut self, rgb: [u8; 3]) {
        self.b[rgb[2] as usize] += 1;
        self.g[rgb[1] as usize] += 1;
        self.r[rgb[0] as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.r.iter().sum()
    }

    /// `channel,bin,count` CSV rows in B, G, R order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "channel,bin,count")?;
        for (name, hist) in [("b", &self.b), ("g", &self.g), ("r", &self.r)] {
            for (bin, count) in hist.iter().enumerate() {
                writeln!(w, "{name},{bin},{count}")?;
            }
        }
        Ok(())
    }
}

impl Default for ColorHistogram {
    fn default() -> Self {
        Self::new()
    }
}

/// Binary mask of one superpixel: WHITE exactly where `labels == seg_val`.
pub fn superpixel_mask(labels: &SegmentLabels, seg_val: u32) -> Result<OccupancyMask> {
    if seg_val >= labels.segment_count {
        return Err(Error::UnknownLabel(seg_val));
    }
    let data = labels
        .labels
        .iter()
        .map(|&l| if l == seg_val { WHITE } else { BLACK })
        .collect();
    OccupancyMask::new(labels.width, labels.height, data)
}

/// Count same-label pixels along an axis or diagonal ray through the
/// center, in both directions, the center pixel counted once.
fn ray_run(labels: &SegmentLabels, label: u32, cx: u32, cy: u32, dir: (i64, i64)) -> u32 {
    let mut count = 1u32;
    for sign in [1i64, -1] {
        let mut x = i64::from(cx);
        let mut y = i64::from(cy);
        loop {
            x += dir.0 * sign;
            y += dir.1 * sign;
            if x < 0 || y < 0 || x >= i64::from(labels.width) || y >= i64::from(labels.height) {
                break;
            }
            if labels.get(x as u32, y as u32) != label {
                break;
            }
            count += 1;
        }
    }
    count
}

/// Compute all 7 features for every superpixel.
///
/// The center pixel is the member pixel nearest the mean member position
/// (falling back to the closest member when the rounded mean lands on a
/// different label, as happens for concave segments).
pub fn extract_features(labels: &SegmentLabels, img: &FloatImage) -> Result<Vec<SuperpixelFeatures>> {
    if labels.width != img.width || labels.height != img.height {
        return Err(Error::DimensionMismatch {
            expected: (labels.width, labels.height),
            actual: (img.width, img.height),
        });
    }
    let k = labels.segment_count as usize;
    let mut sum_x = vec![0.0f64; k];
    let mut sum_y = vec![0.0f64; k];
    let mut area = vec![0u32; k];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let l = labels.get(x, y) as usize;
            sum_x[l] += f64::from(x);
            sum_y[l] += f64::from(y);
            area[l] += 1;
        }
    }

    let mut center = vec![None::<(u32, u32)>; k];
    let mean: Vec<(f64, f64)> = (0..k)
        .map(|l| (sum_x[l] / f64::from(area[l]), sum_y[l] / f64::from(area[l])))
        .collect();

    // Rounded mean if it lands inside the segment...
    for (l, &(mx, my)) in mean.iter().enumerate() {
        let px = (mx.round() as i64).clamp(0, i64::from(labels.width) - 1) as u32;
        let py = (my.round() as i64).clamp(0, i64::from(labels.height) - 1) as u32;
        if labels.get(px, py) == l as u32 {
            center[l] = Some((px, py));
        }
    }
    // ... otherwise the member pixel closest to the mean (raster order
    // breaks distance ties).
    let mut best_d = vec![f64::INFINITY; k];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let l = labels.get(x, y) as usize;
            if center[l].is_some() {
                continue;
            }
            let d = (f64::from(x) - mean[l].0).powi(2) + (f64::from(y) - mean[l].1).powi(2);
            if d < best_d[l] {
                best_d[l] = d;
            }
        }
    }
    let mut fallback = vec![None::<(u32, u32)>; k];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let l = labels.get(x, y) as usize;
            if center[l].is_some() || fallback[l].is_some() {
                continue;
            }
            let d = (f64::from(x) - mean[l].0).powi(2) + (f64::from(y) - mean[l].1).powi(2);
            if d == best_d[l] {
                fallback[l] = Some((x, y));
            }
        }
    }

    let mut out = Vec::with_capacity(k);
    for l in 0..k {
        let (cx, cy) = center[l]
            .or(fallback[l])
            .expect("every label has at least one member pixel");
        let [cl, ca, cb] = img.pixel(cx, cy);
        out.push(SuperpixelFeatures {
            label: l as u32,
            l: cl,
            a: ca,
            b: cb,
            area: area[l],
            width: ray_run(labels, l as u32, cx, cy, (1, 0)),
            height: ray_run(labels, l as u32, cx, cy, (0, 1)),
            diagonal: ray_run(labels, l as u32, cx, cy, (1, 1))
                + ray_run(labels, l as u32, cx, cy, (1, -1))
                - 1,
            center: (cx, cy),
        });
    }
    Ok(out)
}

/// Ids of all superpixels with at least one pixel inside the zone.
pub fn safe_zone_superpixels(labels: &SegmentLabels, zone: &SafeZone) -> BTreeSet<u32> {
    let mut ids = BTreeSet::new();
    for y in 0..labels.height {
        for x in 0..labels.width {
            if zone.contains(f64::from(x), f64::from(y)) {
                ids.insert(labels.get(x, y));
            }
        }
    }
    ids
}

/// B, G, R histograms over every superpixel that intersects the safe
/// zone. Whole superpixels are sampled, not just the intersection.
pub fn sample_safe_zone_histogram(
    img: &ImageU8,
    labels: &SegmentLabels,
    zone: &SafeZone,
) -> Result<ColorHistogram> {
    if labels.width != img.width || labels.height != img.height {
        return Err(Error::DimensionMismatch {
            expected: (labels.width, labels.height),
            actual: (img.width, img.height),
        });
    }
    let ids = safe_zone_superpixels(labels, zone);
    if ids.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut hist = ColorHistogram::new();
    for y in 0..img.height {
        for x in 0..img.width {
            if ids.contains(&labels.get(x, y)) {
                hist.add_pixel(img.pixel(x, y));
            }
        }
    }
    Ok(hist)
}
