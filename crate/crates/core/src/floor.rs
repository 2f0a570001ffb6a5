//! Floor / non-floor classification of superpixels by normalized SSD
//! against safe-zone statistics, region growing over the superpixel
//! adjacency graph, and the pixel-level flood-fill baseline.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::features::SuperpixelFeatures;
use crate::image::{ImageU8, OccupancyMask, BLACK, WHITE};
use crate::slic::SegmentLabels;

/// Scale floor so zero-variance features cannot divide by zero.
const SCALE_EPS: f64 = 1e-6;

/// Per-superpixel class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorClass {
    Floor,
    NonFloor,
}

/// Statistics of the safe-zone (training) superpixels: per-feature mean
/// and scale, plus the classification threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorModel {
    pub mean: [f64; 7],
    pub scale: [f64; 7],
    pub threshold: f64,
}

/// Region-growing seed point in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub x: u32,
    pub y: u32,
}

/// Train the floor model from the safe-zone superpixels.
///
/// `mean` and `scale` are the per-feature mean and population standard
/// deviation over the training set (scale floored at 1e-6), and the
/// threshold is `multiplier` times the maximum normalized SSD any
/// training superpixel attains. With `multiplier >= 1` every training
/// superpixel classifies as floor. Setting `normalize: false` keeps all
/// scales at 1, reproducing the raw unnormalized SSD formula.
pub fn train_floor_model(
    features: &[SuperpixelFeatures],
    training_ids: &BTreeSet<u32>,
    multiplier: f64,
    normalize: bool,
) -> Result<FloorModel> {
    let training: Vec<&SuperpixelFeatures> = features
        .iter()
        .filter(|f| training_ids.contains(&f.label))
        .collect();
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if multiplier < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "ssd multiplier {multiplier} must be >= 1"
        )));
    }

    let n = training.len() as f64;
    let mut mean = [0.0f64; 7];
    for f in &training {
        let v = f.vector();
        for i in 0..7 {
            mean[i] += v[i];
        }
    }
    for m in &mut mean {
        *m /= n;
    }

    let mut scale = [1.0f64; 7];
    if normalize {
        let mut var = [0.0f64; 7];
        for f in &training {
            let v = f.vector();
            for i in 0..7 {
                var[i] += (v[i] - mean[i]).powi(2);
            }
        }
        for i in 0..7 {
            scale[i] = (var[i] / n).sqrt().max(SCALE_EPS);
        }
    }

    let mut model = FloorModel {
        mean,
        scale,
        threshold: 0.0,
    };
    let max_ssd = training
        .iter()
        .map(|f| normalized_ssd(f, &model))
        .fold(0.0, f64::max);
    model.threshold = multiplier * max_ssd;
    Ok(model)
}

/// Sum of squared per-feature deviations from the model mean, each
/// deviation divided by the model scale.
pub fn normalized_ssd(f: &SuperpixelFeatures, model: &FloorModel) -> f64 {
    let v = f.vector();
    let mut ssd = 0.0;
    for i in 0..7 {
        ssd += ((v[i] - model.mean[i]) / model.scale[i]).powi(2);
    }
    ssd
}

/// Classify every superpixel: floor iff `normalized_ssd <= threshold`
/// (boundary inclusive).
pub fn classify(features: &[SuperpixelFeatures], model: &FloorModel) -> Vec<FloorClass> {
    features
        .iter()
        .map(|f| {
            if normalized_ssd(f, model) <= model.threshold {
                FloorClass::Floor
            } else {
                FloorClass::NonFloor
            }
        })
        .collect()
}

/// 4-adjacency relation over segment ids: `A` and `B` are adjacent iff
/// some pixel of `A` 4-neighbors some pixel of `B`. Neighbor lists are
/// sorted ascending.
pub fn superpixel_adjacency(labels: &SegmentLabels) -> Vec<Vec<u32>> {
    let k = labels.segment_count as usize;
    let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); k];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let a = labels.get(x, y);
            if x + 1 < labels.width {
                let b = labels.get(x + 1, y);
                if a != b {
                    sets[a as usize].insert(b);
                    sets[b as usize].insert(a);
                }
            }
            if y + 1 < labels.height {
                let b = labels.get(x, y + 1);
                if a != b {
                    sets[a as usize].insert(b);
                    sets[b as usize].insert(a);
                }
            }
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Grow the traversable region from the seed superpixel.
///
/// Breadth-first search over the superpixel adjacency graph; a neighbor
/// joins the traversable set iff its normalized SSD is within the model
/// threshold. The mask is WHITE over member superpixels, BLACK elsewhere.
pub fn region_grow(
    labels: &SegmentLabels,
    features: &[SuperpixelFeatures],
    model: &FloorModel,
    seed: Seed,
) -> Result<OccupancyMask> {
    if seed.x >= labels.width || seed.y >= labels.height {
        return Err(Error::SeedOutOfBounds {
            x: i64::from(seed.x),
            y: i64::from(seed.y),
        });
    }
    let k = labels.segment_count as usize;
    if features.len() != k {
        return Err(Error::InvalidParameter(format!(
            "{} feature records for {} segments",
            features.len(),
            k
        )));
    }
    let ssd: Vec<f64> = features.iter().map(|f| normalized_ssd(f, model)).collect();

    let seed_label = labels.get(seed.x, seed.y);
    if ssd[seed_label as usize] > model.threshold {
        return Err(Error::SeedNotFloor {
            label: seed_label,
            ssd: ssd[seed_label as usize],
            threshold: model.threshold,
        });
    }

    let adjacency = superpixel_adjacency(labels);
    let mut traversable = vec![false; k];
    let mut visited = vec![false; k];
    let mut queue = VecDeque::new();
    traversable[seed_label as usize] = true;
    visited[seed_label as usize] = true;
    queue.push_back(seed_label);
    while let Some(sp) = queue.pop_front() {
        for &nb in &adjacency[sp as usize] {
            if visited[nb as usize] {
                continue;
            }
            visited[nb as usize] = true;
            if ssd[nb as usize] <= model.threshold {
                traversable[nb as usize] = true;
                queue.push_back(nb);
            }
        }
    }

    let data = labels
        .labels
        .iter()
        .map(|&l| if traversable[l as usize] { WHITE } else { BLACK })
        .collect();
    OccupancyMask::new(labels.width, labels.height, data)
}

/// Iterative 4-connected flood fill from `node`: pixels reachable through
/// `target`-colored pixels become `replacement`-colored.
pub fn flood_fill(
    img: &ImageU8,
    node: (u32, u32),
    target: [u8; 3],
    replacement: [u8; 3],
) -> Result<ImageU8> {
    let (x, y) = node;
    if x >= img.width || y >= img.height {
        return Err(Error::NodeOutOfBounds {
            x: i64::from(x),
            y: i64::from(y),
        });
    }
    let mut out = img.clone();
    if target == replacement {
        return Ok(out);
    }
    if img.pixel(x, y) != target {
        return Ok(out);
    }
    let mut queue = VecDeque::new();
    out.set_pixel(x, y, replacement);
    queue.push_back((x, y));
    while let Some((px, py)) = queue.pop_front() {
        let try_push = |nx: i64, ny: i64, out: &mut ImageU8, queue: &mut VecDeque<(u32, u32)>| {
            if nx < 0 || ny < 0 || nx >= i64::from(img.width) || ny >= i64::from(img.height) {
                return;
            }
            let (nx, ny) = (nx as u32, ny as u32);
            if out.pixel(nx, ny) == target {
                out.set_pixel(nx, ny, replacement);
                queue.push_back((nx, ny));
            }
        };
        try_push(i64::from(px), i64::from(py) + 1, &mut out, &mut queue);
        try_push(i64::from(px), i64::from(py) - 1, &mut out, &mut queue);
        try_push(i64::from(px) - 1, i64::from(py), &mut out, &mut queue);
        try_push(i64::from(px) + 1, i64::from(py), &mut out, &mut queue);
    }
    Ok(out)
}

/// `label,l,a,b,area,width,height,diagonal,ssd,class` CSV rows for
/// debugging the classifier.
pub fn write_features_csv<W: std::io::Write>(
    mut w: W,
    features: &[SuperpixelFeatures],
    model: &FloorModel,
    classes: &[FloorClass],
) -> std::io::Result<()> {
    writeln!(w, "label,l,a,b,area,width,height,diagonal,ssd,class")?;
    for (f, class) in features.iter().zip(classes) {
        let class = match class {
            FloorClass::Floor => "floor",
            FloorClass::NonFloor => "non_floor",
        };
        writeln!(
            w,
            "{},{:.4},{:.4},{:.4},{},{},{},{},{:.6},{}",
            f.label,
            f.l,
            f.a,
            f.b,
            f.area,
            f.width,
            f.height,
            f.diagonal,
            normalized_ssd(f, model),
            class
        )?;
    }
    Ok(())
}
