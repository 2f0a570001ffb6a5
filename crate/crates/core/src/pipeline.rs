//! Full obstacle-detection pipeline: smoothing, segmentation, safe-zone
//! sampling, floor classification with region growing, junction masking.

use std::path::PathBuf;
use std::time::Instant;

use crate::color::{rgb_to_lab, to_grayscale};
use crate::error::{Error, Result};
use crate::features::{
    extract_features, safe_zone_superpixels, sample_safe_zone_histogram, ColorHistogram, SafeZone,
    SafeZoneSpec, SuperpixelFeatures,
};
use crate::floor::{classify, region_grow, train_floor_model, FloorClass, FloorModel, Seed};
use crate::image::{FloatImage, ImageU8, OccupancyMask};
use crate::junction::{apply_junction_mask, detect_junctions, JunctionParams, JunctionStage};
use crate::slic::{draw_boundaries, segment_with_stats, ColorSpace, SegmentLabels, SlicParams, SlicStats};
use crate::smooth::{build_kernel, smooth, smooth_rgb};

/// Everything the `detect` pipeline needs, loadable from a JSON file with
/// every field optional.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub slic: SlicParams,
    /// Gaussian smoothing bandwidth in pixels.
    pub sigma: f64,
    /// Smooth the RGB image before Lab conversion instead of smoothing
    /// in the working color space.
    pub smooth_rgb_first: bool,
    pub safe_zone: SafeZoneSpec,
    /// Threshold slack: threshold = multiplier * max training SSD.
    pub ssd_multiplier: f64,
    /// Z-score features by safe-zone standard deviation; turning this
    /// off reproduces the raw SSD formula.
    pub normalize_features: bool,
    pub junction: JunctionParams,
    /// Calibration JSON for the mapping subcommands; unused by `detect`.
    pub calibration: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub debug_artifacts: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            slic: SlicParams::default(),
            sigma: 5.0,
            smooth_rgb_first: false,
            safe_zone: SafeZoneSpec::default(),
            ssd_multiplier: 1.0,
            normalize_features: true,
            junction: JunctionParams::default(),
            calibration: None,
            output_dir: PathBuf::from("out"),
            debug_artifacts: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Wall time per pipeline stage.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StageTimings {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }

    pub fn write_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Full pipeline output, including the intermediate products the CLI
/// writes as artifacts.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Final occupancy mask (region growing AND junction mask).
    pub occupancy: OccupancyMask,
    /// Occupancy before junction masking.
    pub pre_mask: OccupancyMask,
    pub labels: SegmentLabels,
    pub features: Vec<SuperpixelFeatures>,
    pub classes: Vec<FloorClass>,
    pub model: FloorModel,
    pub histogram: ColorHistogram,
    pub junction: JunctionStage,
    pub smoothed: ImageU8,
    pub safe_zone: SafeZone,
    pub seed: Seed,
    pub slic_stats: SlicStats,
    pub timings: StageTimings,
}

struct Timer {
    start: Instant,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            stages: Vec::new(),
        }
    }

    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages
            .push((name.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(self) -> StageTimings {
        StageTimings {
            total_seconds: self.start.elapsed().as_secs_f64(),
            stages: self.stages,
        }
    }
}


/// Run the whole obstacle-detection pipeline on one camera frame.
pub fn run_pipeline(img: &ImageU8, config: &PipelineConfig) -> Result<PipelineResult> {
    let mut timer = Timer::new();
    let kernel = build_kernel(config.sigma).map_err(|e| e.in_stage("smoothing"))?;
    if config.ssd_multiplier < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "ssd multiplier {} must be >= 1",
            config.ssd_multiplier
        ))
        .in_stage("config"));
    }

    // The junction stage always works on the smoothed camera image.
    let smoothed = smooth_rgb(img, &kernel);
    timer.stage("smooth_rgb");

    // Working-space images for segmentation and features.
    let lab = if config.smooth_rgb_first {
        rgb_to_lab(&smoothed)
    } else {
        let lab_raw = rgb_to_lab(img);
        timer.stage("to_lab");
        let out = smooth(&lab_raw, &kernel);
        timer.stage("smooth_lab");
        out
    };
    if config.smooth_rgb_first {
        timer.stage("to_lab");
    }
    let working = match config.slic.color_space {
        ColorSpace::Lab => lab.clone(),
        ColorSpace::Rgb => {
            if config.smooth_rgb_first {
                FloatImage::from_rgb(&smoothed)
            } else {
                smooth(&FloatImage::from_rgb(img), &kernel)
            }
        }
    };
    timer.stage("working_image");

    let (labels, slic_stats) =
        segment_with_stats(&working, &config.slic).map_err(|e| e.in_stage("slic"))?;
    timer.stage("slic");

    let features = extract_features(&labels, &lab).map_err(|e| e.in_stage("features"))?;
    timer.stage("features");

    let safe_zone = config
        .safe_zone
        .resolve(img.width, img.height)
        .map_err(|e| e.in_stage("safe_zone"))?;
    let training_ids = safe_zone_superpixels(&labels, &safe_zone);
    if training_ids.is_empty() {
        return Err(Error::EmptyIntersection.in_stage("safe_zone"));
    }
    let histogram = sample_safe_zone_histogram(img, &labels, &safe_zone)
        .map_err(|e| e.in_stage("safe_zone"))?;
    timer.stage("safe_zone");

    let model = train_floor_model(
        &features,
        &training_ids,
        config.ssd_multiplier,
        config.normalize_features,
    )
    .map_err(|e| e.in_stage("train"))?;
    let classes = classify(&features, &model);
    timer.stage("train");

    let centroid = safe_zone.centroid();
    let seed = Seed {
        x: (centroid.0.round() as i64).clamp(0, i64::from(img.width) - 1) as u32,
        y: (centroid.1.round() as i64).clamp(0, i64::from(img.height) - 1) as u32,
    };
    let pre_mask = match region_grow(&labels, &features, &model, seed) {
        Ok(mask) => mask,
        Err(e @ Error::SeedNotFloor { .. }) => {
            dump_seed_diagnostic(img, &labels, &safe_zone, seed, &config.output_dir);
            return Err(e.in_stage("region_grow (seed diagnostic overlay dumped)"));
        }
        Err(e) => return Err(e.in_stage("region_grow")),
    };
    timer.stage("region_grow");

    let gray = to_grayscale(&smoothed);
    let junction =
        detect_junctions(&gray, &config.junction).map_err(|e| e.in_stage("junctions"))?;
    timer.stage("junctions");

    let occupancy =
        apply_junction_mask(&pre_mask, &junction.mask).map_err(|e| e.in_stage("mask_and"))?;
    timer.stage("mask_and");

    Ok(PipelineResult {
        occupancy,
        pre_mask,
        labels,
        features,
        classes,
        model,
        histogram,
        junction,
        smoothed,
        safe_zone,
        seed,
        slic_stats,
        timings: timer.finish(),
    })
}

/// Best-effort overlay written when the safe-zone seed lands on a
/// non-floor superpixel: segment boundaries, the safe zone outline, and
/// a crosshair on the seed.
fn dump_seed_diagnostic(
    img: &ImageU8,
    labels: &SegmentLabels,
    zone: &SafeZone,
    seed: Seed,
    out_dir: &std::path::Path,
) {
    let mut overlay = draw_boundaries(img, labels);
    for i in 0..4 {
        let (x1, y1) = zone.vertices[i];
        let (x2, y2) = zone.vertices[(i + 1) % 4];
        let steps = (x2 - x1).abs().max((y2 - y1).abs()).ceil() as u32 + 1;
        for s in 0..=steps {
            let t = f64::from(s) / f64::from(steps);
            let x = (x1 + t * (x2 - x1)).round() as u32;
            let y = (y1 + t * (y2 - y1)).round() as u32;
            if x < overlay.width && y < overlay.height {
                overlay.set_pixel(x, y, [0, 255, 0]);
            }
        }
    }
    for d in -4i64..=4 {
        for (x, y) in [
            (i64::from(seed.x) + d, i64::from(seed.y)),
            (i64::from(seed.x), i64::from(seed.y) + d),
        ] {
            if x >= 0 && y >= 0 && x < i64::from(overlay.width) && y < i64::from(overlay.height) {
                overlay.set_pixel(x as u32, y as u32, [255, 0, 0]);
            }
        }
    }
    if std::fs::create_dir_all(out_dir).is_ok() {
        let _ = crate::io::save_png(&overlay, &out_dir.join("seed-diagnostic.png"));
    }
}
