//! Shared helpers for the integration and acceptance suites: the
//! synthetic indoor-scene renderer with per-pixel ground truth, plus
//! small deterministic generators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use floorvis::image::{ImageU8, OccupancyMask, BLACK, WHITE};
use floorvis::slic::SegmentLabels;

/// A rendered indoor scene: wall band, plank-textured floor, and 1-3 box
/// obstacles standing on the floor, with per-pixel floor ground truth.
pub struct Scene {
    pub image: ImageU8,
    /// WHITE where the pixel is visible floor.
    pub truth: OccupancyMask,
}

/// Render scene `seed` at the given size (the acceptance corpus uses
/// 640x480).
pub fn render_scene(seed: u64, width: u32, height: u32) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = height as i64;
    let w = width as i64;
    let horizon = rng.random_range((h * 35 / 100)..(h * 48 / 100)) as u32;
    let wall: [i64; 3] = [
        rng.random_range(150..=210),
        rng.random_range(150..=210),
        rng.random_range(150..=210),
    ];
    let base: [i64; 3] = [
        rng.random_range(110..=170),
        rng.random_range(80..=140),
        rng.random_range(60..=110),
    ];
    let seam_period = rng.random_range(45..=70i64);
    let seam_phase = rng.random_range(0..seam_period);
    let seam_depth = rng.random_range(14..=22i64);

    let n_boxes = rng.random_range(1..=3u32);
    let mut boxes: Vec<(u32, u32, u32, u32)> = Vec::new();
    let mut tries = 0;
    while boxes.len() < n_boxes as usize && tries < 60 {
        tries += 1;
        let bw = rng.random_range(80..=150i64).min(w - 30);
        let bh = rng.random_range(90..=170i64);
        let x0 = rng.random_range(10..=(w - bw - 10));
        let y_base = rng.random_range((i64::from(horizon) + 40)..=(h * 66 / 100));
        let y0 = (y_base - bh).max(0);
        let clear = boxes
            .iter()
            .all(|&(bx0, bx1, _, _)| x0 + bw + 30 < i64::from(bx0) || i64::from(bx1) + 30 < x0);
        if clear {
            boxes.push((x0 as u32, (x0 + bw) as u32, y0 as u32, y_base as u32));
        }
    }

    let mut image = ImageU8::filled(width, height, [0, 0, 0]).unwrap();
    let mut truth = OccupancyMask::filled(width, height, BLACK).unwrap();
    for y in 0..height {
        for x in 0..width {
            let (mut rgb, mut floor);
            if y < horizon {
                rgb = wall;
                floor = false;
            } else {
                let n = rng.random_range(-6..=6i64);
                let seam = (i64::from(x) + seam_phase) % seam_period < 3
                    || (i64::from(y) + 2 * seam_phase) % (seam_period + 13) < 3;
                let d = if seam { seam_depth } else { 0 };
                rgb = [base[0] + n - d, base[1] + n - d, base[2] + n - d];
                floor = true;
            }
            for &(bx0, bx1, by0, by1) in &boxes {
                if x >= bx0 && x < bx1 && y >= by0 && y < by1 {
                    let c = 40 + 13 * ((i64::from(bx0) * 7) % 9);
                    rgb = [c, 45, 160 - c / 2];
                    floor = false;
                }
            }
            image.set_pixel(
                x,
                y,
                [
                    rgb[0].clamp(0, 255) as u8,
                    rgb[1].clamp(0, 255) as u8,
                    rgb[2].clamp(0, 255) as u8,
                ],
            );
            if floor {
                truth.set(x, y, WHITE);
            }
        }
    }
    Scene { image, truth }
}

/// Pixel-level floor recall and obstacle-region precision of a predicted
/// occupancy mask against the rendered ground truth.
pub fn score(pred: &OccupancyMask, truth: &OccupancyMask) -> (f64, f64) {
    let mut tp = 0u64;
    let mut gt_floor = 0u64;
    let mut pred_black = 0u64;
    let mut true_black = 0u64;
    for (p, t) in pred.data.iter().zip(&truth.data) {
        if *t == WHITE {
            gt_floor += 1;
            if *p == WHITE {
                tp += 1;
            }
        }
        if *p == BLACK {
            pred_black += 1;
            if *t == BLACK {
                true_black += 1;
            }
        }
    }
    let recall = tp as f64 / gt_floor as f64;
    let precision = if pred_black == 0 {
        1.0
    } else {
        true_black as f64 / pred_black as f64
    };
    (recall, precision)
}

/// Random Voronoi label map: dense ids, deterministic for a seed.
pub fn random_labels(seed: u64, width: u32, height: u32, n_sites: u32) -> SegmentLabels {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<(f64, f64)> = (0..n_sites)
        .map(|_| {
            (
                rng.random_range(0.0..f64::from(width)),
                rng.random_range(0.0..f64::from(height)),
            )
        })
        .collect();
    let mut labels = vec![0u32; (width * height) as usize];
    for y in 0..height {
        for x in 0..width {
            let mut best = (f64::INFINITY, 0u32);
            for (i, s) in sites.iter().enumerate() {
                let d = (f64::from(x) - s.0).powi(2) + (f64::from(y) - s.1).powi(2);
                if d < best.0 {
                    best = (d, i as u32);
                }
            }
            labels[(y * width + x) as usize] = best.1;
        }
    }
    // Dense renumber in raster order of first appearance (sites can end
    // up empty).
    let mut remap = std::collections::BTreeMap::new();
    let mut next = 0u32;
    for l in labels.iter_mut() {
        let id = *remap.entry(*l).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        *l = id;
    }
    SegmentLabels {
        width,
        height,
        labels,
        segment_count: next,
    }
}
