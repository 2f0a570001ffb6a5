//! SLIC superpixel segmentation: localized k-means over the combined
//! 5-D color + image-plane space, with connectivity enforcement.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::image::{FloatImage, ImageU8};

/// Working color space for the clustering distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    Lab,
}

/// SLIC parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlicParams {
    /// Desired superpixel count. The actual count can differ slightly
    /// because seeds form a regular grid.
    pub k: u32,
    /// Compactness weight: larger M emphasizes spatial proximity.
    pub m: f64,
    /// Maximum assignment/update passes.
    pub iterations: u32,
    pub color_space: ColorSpace,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            k: 200,
            m: 10.0,
            iterations: 10,
            color_space: ColorSpace::Lab,
        }
    }
}

/// Mean residual center movement per coordinate below which the loop
/// stops early.
const CONVERGENCE_EPS: f64 = 1e-3;

/// A cluster center: color triple plus sub-pixel image position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCenter {
    pub color: [f64; 3],
    pub x: f64,
    pub y: f64,
}

/// Per-pixel segment ids plus the number of distinct segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLabels {
    pub width: u32,
    pub height: u32,
    /// Row-major, one id in `[0, segment_count)` per pixel.
    pub labels: Vec<u32>,
    pub segment_count: u32,
}

impl SegmentLabels {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn n_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Instrumentation collected by [`segment_with_stats`].
#[derive(Debug, Clone)]
pub struct SlicStats {
    /// Assignment passes actually executed (early exit can stop before
    /// the configured maximum).
    pub iterations_run: u32,
    /// Max over pixels of distance evaluations against cluster centers,
    /// summed over all iterations.
    pub max_comparisons_per_pixel: u32,
    /// Seeding + assignment + update time.
    pub clustering_time: Duration,
    /// Connectivity enforcement time.
    pub connectivity_time: Duration,
    pub total_time: Duration,
}

/// Grid interval `S = sqrt(N / K)`: the expected superpixel side length
/// and the seeding stride.
pub fn grid_interval(n_pixels: usize, k: u32) -> Result<f64> {
    if k == 0 || k as usize > n_pixels {
        return Err(Error::InvalidK { k, n_pixels });
    }
    Ok((n_pixels as f64 / f64::from(k)).sqrt())
}

/// 5-D SLIC distance: Euclidean color distance plus spatial distance
/// scaled by `m / s`, enforcing color similarity and pixel proximity.
#[inline]
pub fn slic_distance(p1: &[f64; 5], p2: &[f64; 5], m: f64, s: f64) -> f64 {
    let dc = (p1[0] - p2[0]).powi(2) + (p1[1] - p2[1]).powi(2) + (p1[2] - p2[2]).powi(2);
    let ds = (p1[3] - p2[3]).powi(2) + (p1[4] - p2[4]).powi(2);
    dc.sqrt() + (m / s) * ds.sqrt()
}

/// Squared-L2 color gradient `G = |I(x+1,y) - I(x-1,y)|^2 + |I(x,y+1) - I(x,y-1)|^2`.
///
/// Only defined away from the image border.
pub fn image_gradient(img: &FloatImage, x: u32, y: u32) -> Result<f64> {
    if x < 1 || y < 1 || x + 1 >= img.width || y + 1 >= img.height {
        return Err(Error::OutOfBounds {
            x: i64::from(x),
            y: i64::from(y),
        });
    }
    let dx: f64 = {
        let a = img.pixel(x + 1, y);
        let b = img.pixel(x - 1, y);
        (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
    };
    let dy: f64 = {
        let a = img.pixel(x, y + 1);
        let b = img.pixel(x, y - 1);
        (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
    };
    Ok(dx + dy)
}

/// Seed cluster centers on a regular grid at interval `s`, each perturbed
/// to the lowest-gradient position in its 3x3 neighborhood.
fn seed_centers(img: &FloatImage, s: f64) -> (Vec<ClusterCenter>, u32, u32) {
    let w = img.width;
    let h = img.height;
    let nx = ((f64::from(w) / s).round() as u32).max(1);
    let ny = ((f64::from(h) / s).round() as u32).max(1);

    let mut centers = Vec::with_capacity(nx as usize * ny as usize);
    for j in 0..ny {
        for i in 0..nx {
            let gx = ((f64::from(i) + 0.5) * s).clamp(0.0, f64::from(w - 1));
            let gy = ((f64::from(j) + 0.5) * s).clamp(0.0, f64::from(h - 1));
            let px = (gx.round() as i64).clamp(0, i64::from(w) - 1) as u32;
            let py = (gy.round() as i64).clamp(0, i64::from(h) - 1) as u32;

            // Perturb within the 3x3 neighborhood; candidates at the image
            // border have no defined gradient and are skipped.
            let mut best = (px, py);
            let mut best_g = f64::INFINITY;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let cx = i64::from(px) + dx;
                    let cy = i64::from(py) + dy;
                    if cx < 1 || cy < 1 || cx + 1 >= i64::from(w) || cy + 1 >= i64::from(h) {
                        continue;
                    }
                    let g = image_gradient(img, cx as u32, cy as u32)
                        .expect("candidate checked in bounds");
                    if g < best_g {
                        best_g = g;
                        best = (cx as u32, cy as u32);
                    }
                }
            }
            centers.push(ClusterCenter {
                color: img.pixel(best.0, best.1),
                x: f64::from(best.0),
                y: f64::from(best.1),
            });
        }
    }
    (centers, nx, ny)
}

/// Shared clustering loop. Returns raw labels (center indices), the final
/// centers, iterations run, and the per-pixel comparison counters.
fn cluster(
    img: &FloatImage,
    params: &SlicParams,
    s: f64,
) -> (Vec<u32>, Vec<ClusterCenter>, u32, Vec<u32>) {
    let w = img.width as usize;
    let h = img.height as usize;
    let n = w * h;
    let (mut centers, nx, _ny) = seed_centers(img, s);
    let k = centers.len();

    // Every pixel starts on its grid-nearest seed so the partition is
    // total even if some window never reaches it.
    let mut labels: Vec<u32> = (0..n)
        .map(|p| {
            let x = (p % w) as f64;
            let y = (p / w) as f64;
            let i = ((x / s) as u32).min(nx - 1);
            let j = ((y / s) as u32).min((k as u32 - 1) / nx);
            (j * nx + i).min(k as u32 - 1)
        })
        .collect();

    let mut comparisons = vec![0u32; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut iterations_run = 0u32;

    for _ in 0..params.iterations {
        iterations_run += 1;
        dist.fill(f64::INFINITY);

        // Assignment: each center claims the best pixels inside its
        // 2S x 2S window. Ascending center order plus strict `<` makes
        // the lowest center index win distance ties.
        for (ci, c) in centers.iter().enumerate() {
            let x0 = ((c.x - s).floor().max(0.0)) as usize;
            let x1 = ((c.x + s).ceil().min((w - 1) as f64)) as usize;
            let y0 = ((c.y - s).floor().max(0.0)) as usize;
            let y1 = ((c.y + s).ceil().min((h - 1) as f64)) as usize;
            for y in y0..=y1 {
                let row = y * w;
                for x in x0..=x1 {
                    let p = row + x;
                    comparisons[p] += 1;
                    let px = img.pixel(x as u32, y as u32);
                    let d = slic_distance(
                        &[px[0], px[1], px[2], x as f64, y as f64],
                        &[c.color[0], c.color[1], c.color[2], c.x, c.y],
                        params.m,
                        s,
                    );
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = ci as u32;
                    }
                }
            }
        }

        // Update: new center = mean 5-vector of members; empty clusters
        // keep their previous center.
        let mut sums = vec![[0.0f64; 5]; k];
        let mut counts = vec![0usize; k];
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let l = labels[p] as usize;
                let px = img.pixel(x as u32, y as u32);
                sums[l][0] += px[0];
                sums[l][1] += px[1];
                sums[l][2] += px[2];
                sums[l][3] += x as f64;
                sums[l][4] += y as f64;
                counts[l] += 1;
            }
        }
        let mut movement = 0.0;
        for (ci, c) in centers.iter_mut().enumerate() {
            if counts[ci] == 0 {
                continue;
            }
            let inv = 1.0 / counts[ci] as f64;
            let new = ClusterCenter {
                color: [sums[ci][0] * inv, sums[ci][1] * inv, sums[ci][2] * inv],
                x: sums[ci][3] * inv,
                y: sums[ci][4] * inv,
            };
            movement += (new.color[0] - c.color[0]).abs()
                + (new.color[1] - c.color[1]).abs()
                + (new.color[2] - c.color[2]).abs()
                + (new.x - c.x).abs()
                + (new.y - c.y).abs();
            *c = new;
        }

        // Residual error E as mean L1 movement per center coordinate.
        if movement / (k as f64 * 5.0) < CONVERGENCE_EPS {
            break;
        }
    }

    (labels, centers, iterations_run, comparisons)
}

fn validate(img: &FloatImage, params: &SlicParams) -> Result<f64> {
    let n = img.n_pixels();
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    if params.m <= 0.0 || params.iterations == 0 {
        return Err(Error::InvalidParameter(format!(
            "m = {} and iterations = {} must be positive",
            params.m, params.iterations
        )));
    }
    grid_interval(n, params.k)
}

/// SLIC segmentation without connectivity enforcement: raw assignment
/// labels straight out of the clustering loop. Intended for diagnostics
/// and oracle comparisons; segments may be fragmented and label ids are
/// center indices (possibly with empty clusters).
pub fn segment_raw(img: &FloatImage, params: &SlicParams) -> Result<SegmentLabels> {
    let s = validate(img, params)?;
    let (labels, centers, _, _) = cluster(img, params, s);
    Ok(SegmentLabels {
        width: img.width,
        height: img.height,
        labels,
        segment_count: centers.len() as u32,
    })
}

/// Full SLIC segmentation: clustering followed by connectivity
/// enforcement and dense relabeling.
pub fn segment(img: &FloatImage, params: &SlicParams) -> Result<SegmentLabels> {
    segment_with_stats(img, params).map(|(labels, _)| labels)
}

/// [`segment`] plus instrumentation (timings, comparison counters).
pub fn segment_with_stats(
    img: &FloatImage,
    params: &SlicParams,
) -> Result<(SegmentLabels, SlicStats)> {
    let s = validate(img, params)?;
    let t0 = Instant::now();
    let (mut labels, _, iterations_run, comparisons) = cluster(img, params, s);
    let clustering_time = t0.elapsed();

    let t1 = Instant::now();
    let segment_count = enforce_connectivity(
        &mut labels,
        img.width as usize,
        img.height as usize,
        s * s / 4.0,
    );
    let connectivity_time = t1.elapsed();

    let stats = SlicStats {
        iterations_run,
        max_comparisons_per_pixel: comparisons.iter().copied().max().unwrap_or(0),
        clustering_time,
        connectivity_time,
        total_time: t0.elapsed(),
    };
    Ok((
        SegmentLabels {
            width: img.width,
            height: img.height,
            labels,
            segment_count,
        },
        stats,
    ))
}

/// A 4-connected fragment of one label.
struct Fragment {
    label: u32,
    pixels: Vec<usize>,
}

/// Relabel disjoint fragments to the largest neighboring cluster.
///
/// A fragment survives only if it is its label's largest fragment and has
/// at least `min_size` pixels. Every other fragment merges into the
/// largest already-resolved neighboring cluster, which keeps every final
/// segment 4-connected. Returns the dense segment count after renumbering.
fn enforce_connectivity(labels: &mut [u32], w: usize, h: usize, min_size: f64) -> u32 {
    let n = w * h;
    debug_assert_eq!(labels.len(), n);

    // Discover fragments in raster order.
    let mut frag_of = vec![u32::MAX; n];
    let mut frags: Vec<Fragment> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if frag_of[start] != u32::MAX {
            continue;
        }
        let fid = frags.len() as u32;
        let label = labels[start];
        let mut pixels = Vec::new();
        frag_of[start] = fid;
        stack.push(start);
        while let Some(p) = stack.pop() {
            pixels.push(p);
            let x = p % w;
            let y = p / w;
            let mut visit = |q: usize| {
                if frag_of[q] == u32::MAX && labels[q] == label {
                    frag_of[q] = fid;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        frags.push(Fragment { label, pixels });
    }

    // Largest fragment per label (ties: first in raster order).
    let mut largest: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
    for (fid, f) in frags.iter().enumerate() {
        let e = largest.entry(f.label).or_insert(fid as u32);
        if frags[*e as usize].pixels.len() < f.pixels.len() {
            *e = fid as u32;
        }
    }

    // Fragment adjacency (4-neighborhood).
    let mut adj: Vec<std::collections::BTreeSet<u32>> =
        vec![std::collections::BTreeSet::new(); frags.len()];
    for p in 0..n {
        let x = p % w;
        let a = frag_of[p];
        if x + 1 < w {
            let b = frag_of[p + 1];
            if a != b {
                adj[a as usize].insert(b);
                adj[b as usize].insert(a);
            }
        }
        if p + w < n {
            let b = frag_of[p + w];
            if a != b {
                adj[a as usize].insert(b);
                adj[b as usize].insert(a);
            }
        }
    }

    // Resolve: kept fragments found their clusters; absorbed fragments
    // join the largest resolved neighboring cluster, iterating until all
    // are placed. `final_label[fid]` indexes into `cluster_size`.
    let mut final_label: Vec<Option<u32>> = vec![None; frags.len()];
    let mut cluster_size: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
    let mut pending: Vec<u32> = Vec::new();
    for (fid, f) in frags.iter().enumerate() {
        let keep = largest[&f.label] == fid as u32 && f.pixels.len() as f64 >= min_size;
        if keep {
            final_label[fid] = Some(f.label);
            *cluster_size.entry(f.label).or_insert(0) += f.pixels.len();
        } else {
            pending.push(fid as u32);
        }
    }

    while !pending.is_empty() {
        let mut progressed = false;
        let mut still_pending = Vec::new();
        for &fid in &pending {
            // Largest resolved neighboring cluster; ties go to the lowest
            // label id.
            let mut best: Option<(usize, u32)> = None;
            for &nb in &adj[fid as usize] {
                if let Some(t) = final_label[nb as usize] {
                    let size = cluster_size[&t];
                    let better = match best {
                        None => true,
                        Some((bs, bt)) => size > bs || (size == bs && t < bt),
                    };
                    if better {
                        best = Some((size, t));
                    }
                }
            }
            if let Some((_, t)) = best {
                final_label[fid as usize] = Some(t);
                *cluster_size.get_mut(&t).unwrap() += frags[fid as usize].pixels.len();
                progressed = true;
            } else {
                still_pending.push(fid);
            }
        }
        if !progressed {
            // No fragment borders a resolved cluster (every fragment fell
            // under the size threshold): promote the largest pending one.
            let &fid = still_pending
                .iter()
                .max_by_key(|&&f| (frags[f as usize].pixels.len(), std::cmp::Reverse(f)))
                .expect("pending non-empty");
            let f = &frags[fid as usize];
            final_label[fid as usize] = Some(f.label);
            *cluster_size.entry(f.label).or_insert(0) += f.pixels.len();
            still_pending.retain(|&x| x != fid);
        }
        pending = still_pending;
    }

    for (fid, f) in frags.iter().enumerate() {
        let t = final_label[fid].expect("all fragments resolved");
        if t != f.label {
            for &p in &f.pixels {
                labels[p] = t;
            }
        }
    }

    // Dense renumbering in order of first appearance.
    let mut remap: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
    let mut next = 0u32;
    for l in labels.iter_mut() {
        let id = *remap.entry(*l).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        *l = id;
    }
    next
}

/// Paint segment boundaries onto a copy of the image (yellow), for
/// visual inspection of the segmentation.
pub fn draw_boundaries(img: &ImageU8, labels: &SegmentLabels) -> ImageU8 {
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            let l = labels.get(x, y);
            let boundary = (x + 1 < img.width && labels.get(x + 1, y) != l)
                || (y + 1 < img.height && labels.get(x, y + 1) != l);
            if boundary {
                out.set_pixel(x, y, [255, 255, 0]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_image(w: u32, h: u32, color: [f64; 3]) -> FloatImage {
        let mut img = FloatImage::zeros(w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                img.set_pixel(x, y, color);
            }
        }
        img
    }

    fn quadrant_image(size: u32) -> FloatImage {
        let mut img = FloatImage::zeros(size, size).unwrap();
        let half = size / 2;
        for y in 0..size {
            for x in 0..size {
                let c = match (x < half, y < half) {
                    (true, true) => [0.0, 0.0, 0.0],
                    (false, true) => [100.0, 0.0, 0.0],
                    (true, false) => [0.0, 100.0, 0.0],
                    (false, false) => [100.0, 100.0, 100.0],
                };
                img.set_pixel(x, y, c);
            }
        }
        img
    }

    /// Count 4-connected components per label: the independent
    /// connectivity oracle.
    fn components_per_label(labels: &SegmentLabels) -> Vec<usize> {
        let w = labels.width as usize;
        let h = labels.height as usize;
        let mut seen = vec![false; w * h];
        let mut counts = vec![0usize; labels.segment_count as usize];
        for start in 0..w * h {
            if seen[start] {
                continue;
            }
            let l = labels.labels[start];
            counts[l as usize] += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(p) = stack.pop() {
                let x = p % w;
                let y = p / w;
                for (nx, ny) in [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ] {
                    if nx < w && ny < h {
                        let q = ny * w + nx;
                        if !seen[q] && labels.labels[q] == l {
                            seen[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
        }
        counts
    }

    fn assert_valid_partition(labels: &SegmentLabels) {
        let mut used = vec![false; labels.segment_count as usize];
        for &l in &labels.labels {
            assert!(l < labels.segment_count);
            used[l as usize] = true;
        }
        assert!(used.iter().all(|&u| u), "every label must be non-empty");
        for (l, &c) in components_per_label(labels).iter().enumerate() {
            assert_eq!(c, 1, "label {l} split into {c} components");
        }
    }

    #[test]
    fn grid_interval_examples() {
        assert!((grid_interval(307_200, 200).unwrap() - 39.1918).abs() < 1e-3);
        assert_eq!(grid_interval(100, 100).unwrap(), 1.0);
        assert_eq!(grid_interval(400, 4).unwrap(), 10.0);
        assert!(matches!(grid_interval(100, 0), Err(Error::InvalidK { .. })));
        assert!(matches!(
            grid_interval(100, 101),
            Err(Error::InvalidK { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let p = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(slic_distance(&p, &p, 10.0, 10.0), 0.0);

        let a = [7.0, 7.0, 7.0, 0.0, 0.0];
        let b = [7.0, 7.0, 7.0, 3.0, 4.0];
        assert!((slic_distance(&a, &b, 10.0, 10.0) - 5.0).abs() < 1e-12);

        let a = [10.0, 0.0, 0.0, 2.0, 2.0];
        let b = [0.0, 0.0, 0.0, 2.0, 2.0];
        assert!((slic_distance(&a, &b, 10.0, 10.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let img = uniform_image(5, 5, [3.0, 1.0, 4.0]);
        assert_eq!(image_gradient(&img, 2, 2).unwrap(), 0.0);

        // Horizontal ramp I(x, y) = (x, x, x).
        let mut ramp = FloatImage::zeros(5, 5).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                ramp.set_pixel(x, y, [f64::from(x); 3]);
            }
        }
        assert_eq!(image_gradient(&ramp, 2, 2).unwrap(), 12.0);

        // Vertical step of height 10 in one channel.
        let mut step = FloatImage::zeros(5, 5).unwrap();
        for y in 3..5 {
            for x in 0..5 {
                step.set_pixel(x, y, [10.0, 0.0, 0.0]);
            }
        }
        assert_eq!(image_gradient(&step, 2, 2).unwrap(), 100.0);

        assert!(matches!(
            image_gradient(&img, 0, 2),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            image_gradient(&img, 2, 4),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn uniform_100x100_k4_gives_quadrant_blocks() {
        let img = uniform_image(100, 100, [50.0, 10.0, 10.0]);
        let params = SlicParams {
            k: 4,
            ..SlicParams::default()
        };
        let labels = segment(&img, &params).unwrap();
        assert_eq!(labels.segment_count, 4);
        assert_valid_partition(&labels);

        let mut sizes = vec![0usize; 4];
        for &l in &labels.labels {
            sizes[l as usize] += 1;
        }
        for &s in &sizes {
            assert!(
                (s as f64 - 2500.0).abs() <= 500.0,
                "segment size {s} outside 2500 +/- 20%"
            );
        }
        // The four quadrant centers carry four distinct labels.
        let ids = [
            labels.get(25, 25),
            labels.get(75, 25),
            labels.get(25, 75),
            labels.get(75, 75),
        ];
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
    }

    #[test]
    fn k1_single_segment() {
        let img = uniform_image(20, 10, [1.0, 2.0, 3.0]);
        let params = SlicParams {
            k: 1,
            ..SlicParams::default()
        };
        let labels = segment(&img, &params).unwrap();
        assert_eq!(labels.segment_count, 1);
        assert!(labels.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn quadrant_colors_recover_quadrants() {
        let img = quadrant_image(32);
        let params = SlicParams {
            k: 4,
            m: 10.0,
            ..SlicParams::default()
        };
        let labels = segment(&img, &params).unwrap();
        assert_valid_partition(&labels);
        // Boundaries within 2 px of the quadrant edges: every pixel more
        // than 2 px inside a quadrant shares that quadrant's label.
        let rep = [
            labels.get(8, 8),
            labels.get(24, 8),
            labels.get(8, 24),
            labels.get(24, 24),
        ];
        for y in 0..32u32 {
            for x in 0..32u32 {
                let dx = (f64::from(x) - 15.5).abs();
                let dy = (f64::from(y) - 15.5).abs();
                if dx <= 2.5 || dy <= 2.5 {
                    continue; // inside the tolerance band
                }
                let q = match (x < 16, y < 16) {
                    (true, true) => rep[0],
                    (false, true) => rep[1],
                    (true, false) => rep[2],
                    (false, false) => rep[3],
                };
                assert_eq!(labels.get(x, y), q, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn comparisons_bounded_per_pixel() {
        let img = quadrant_image(64);
        let params = SlicParams {
            k: 16,
            ..SlicParams::default()
        };
        let (_, stats) = segment_with_stats(&img, &params).unwrap();
        assert!(
            stats.max_comparisons_per_pixel <= 9 * stats.iterations_run,
            "{} comparisons > 9 * {} iterations",
            stats.max_comparisons_per_pixel,
            stats.iterations_run
        );
    }

    #[test]
    fn invalid_params_reported() {
        let img = uniform_image(4, 4, [0.0; 3]);
        assert!(matches!(
            segment(&img, &SlicParams { k: 0, ..SlicParams::default() }),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            segment(&img, &SlicParams { k: 17, ..SlicParams::default() }),
            Err(Error::InvalidK { .. })
        ));
    }

    /// Brute-force single-iteration oracle: independently seeds the grid
    /// and, per pixel, scans every center whose 2S window covers it.
    fn brute_force_one_iteration(img: &FloatImage, params: &SlicParams) -> Vec<u32> {
        let w = img.width;
        let h = img.height;
        let s = (img.n_pixels() as f64 / f64::from(params.k)).sqrt();
        let nx = ((f64::from(w) / s).round() as u32).max(1);
        let ny = ((f64::from(h) / s).round() as u32).max(1);

        let mut centers = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let gx = ((f64::from(i) + 0.5) * s).clamp(0.0, f64::from(w - 1));
                let gy = ((f64::from(j) + 0.5) * s).clamp(0.0, f64::from(h - 1));
                let px = (gx.round() as i64).clamp(0, i64::from(w) - 1);
                let py = (gy.round() as i64).clamp(0, i64::from(h) - 1);
                let mut best = (px, py);
                let mut best_g = f64::INFINITY;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (cx, cy) = (px + dx, py + dy);
                        if cx < 1 || cy < 1 || cx + 1 >= i64::from(w) || cy + 1 >= i64::from(h) {
                            continue;
                        }
                        let gx2 = {
                            let a = img.pixel(cx as u32 + 1, cy as u32);
                            let b = img.pixel(cx as u32 - 1, cy as u32);
                            (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>()
                        };
                        let gy2 = {
                            let a = img.pixel(cx as u32, cy as u32 + 1);
                            let b = img.pixel(cx as u32, cy as u32 - 1);
                            (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>()
                        };
                        let g = gx2 + gy2;
                        if g < best_g {
                            best_g = g;
                            best = (cx, cy);
                        }
                    }
                }
                let color = img.pixel(best.0 as u32, best.1 as u32);
                centers.push((color, best.0 as f64, best.1 as f64));
            }
        }

        let mut labels = vec![0u32; img.n_pixels()];
        for y in 0..h {
            for x in 0..w {
                let mut best_d = f64::INFINITY;
                let mut best_c = {
                    // Same coverage fallback as the implementation.
                    let i = ((f64::from(x) / s) as u32).min(nx - 1);
                    let j = ((f64::from(y) / s) as u32)
                        .min((centers.len() as u32 - 1) / nx);
                    (j * nx + i).min(centers.len() as u32 - 1)
                };
                for (ci, (color, cx, cy)) in centers.iter().enumerate() {
                    let x0 = (cx - s).floor().max(0.0) as u32;
                    let x1 = (cx + s).ceil().min(f64::from(w - 1)) as u32;
                    let y0 = (cy - s).floor().max(0.0) as u32;
                    let y1 = (cy + s).ceil().min(f64::from(h - 1)) as u32;
                    if x < x0 || x > x1 || y < y0 || y > y1 {
                        continue;
                    }
                    let px = img.pixel(x, y);
                    let dc = (px[0] - color[0]).powi(2)
                        + (px[1] - color[1]).powi(2)
                        + (px[2] - color[2]).powi(2);
                    let ds = (f64::from(x) - cx).powi(2) + (f64::from(y) - cy).powi(2);
                    let d = dc.sqrt() + (params.m / s) * ds.sqrt();
                    if d < best_d {
                        best_d = d;
                        best_c = ci as u32;
                    }
                }
                labels[(y * w + x) as usize] = best_c;
            }
        }
        labels
    }

    #[test]
    fn one_iteration_matches_brute_force_on_16x16() {
        let mut img = FloatImage::zeros(16, 16).unwrap();
        // Deterministic pseudo-random texture.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for y in 0..16 {
            for x in 0..16 {
                let mut px = [0.0; 3];
                for c in px.iter_mut() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *c = (state >> 40) as f64 / 16777216.0 * 100.0;
                }
                img.set_pixel(x, y, px);
            }
        }
        let params = SlicParams {
            k: 4,
            m: 10.0,
            iterations: 1,
            color_space: ColorSpace::Lab,
        };
        let got = segment_raw(&img, &params).unwrap();
        let expected = brute_force_one_iteration(&img, &params);
        assert_eq!(got.labels, expected);
    }

    #[test]
    fn connectivity_repairs_enclaves() {
        // Hand-built label map: label 0 with an enclave of label 1 inside,
        // plus label 1's main body on the right.
        let w = 8;
        let h = 4;
        let mut labels: Vec<u32> = vec![0; w * h];
        for y in 0..h {
            for x in 5..w {
                labels[y * w + x] = 1;
            }
        }
        labels[1 * w + 1] = 1; // enclave, disjoint from the right body
        let count = enforce_connectivity(&mut labels, w, h, 1.0);
        assert_eq!(count, 2);
        let seg = SegmentLabels {
            width: w as u32,
            height: h as u32,
            labels,
            segment_count: count,
        };
        for (l, &c) in components_per_label(&seg).iter().enumerate() {
            assert_eq!(c, 1, "label {l}");
        }
        // The enclave merged into the surrounding cluster.
        assert_eq!(seg.get(1, 1), seg.get(0, 0));
    }

    #[test]
    fn boundaries_marked_between_segments() {
        let img = ImageU8::filled(4, 2, [9, 9, 9]).unwrap();
        let labels = SegmentLabels {
            width: 4,
            height: 2,
            labels: vec![0, 0, 1, 1, 0, 0, 1, 1],
            segment_count: 2,
        };
        let overlay = draw_boundaries(&img, &labels);
        assert_eq!(overlay.pixel(1, 0), [255, 255, 0]);
        assert_eq!(overlay.pixel(3, 0), [9, 9, 9]);
    }
}
