//! floorvis command line: obstacle detection, SLIC segmentation, flood
//! fill, homography calibration, top-down warping, and lookup tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use floorvis::features::SafeZoneSpec;
use floorvis::floor::{flood_fill, write_features_csv};
use floorvis::image::ImageU8;
use floorvis::io;
use floorvis::ipm::{
    apply_homography, build_lookup_table, estimate_homography, reprojection_error,
    warp_topdown, CalibrationConfig, Roi,
};
use floorvis::junction::LineSegment;
use floorvis::pipeline::{run_pipeline, PipelineConfig};
use floorvis::slic::{draw_boundaries, segment, ColorSpace};

#[derive(Parser)]
#[command(name = "floorvis", version, about = "Monocular floor / obstacle detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full obstacle-detection pipeline on one image.
    Detect(DetectArgs),
    /// SLIC superpixel segmentation only: label map plus boundary overlay.
    Segment(SegmentArgs),
    /// Pixel-level flood fill baseline.
    Floodfill(FloodfillArgs),
    /// Estimate the image-to-ground homography from a calibration file.
    Calibrate(CalibrateArgs),
    /// Warp a quadrilateral region to a top-down view.
    Warp(WarpArgs),
    /// Export the pixel-to-ground lookup table (CSV and binary).
    Lut(LutArgs),
}

#[derive(Args)]
struct PipelineFlags {
    /// Pipeline config JSON; flags below override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Desired superpixel count.
    #[arg(long)]
    k: Option<u32>,
    /// SLIC compactness weight.
    #[arg(long)]
    m: Option<f64>,
    /// SLIC working color space.
    #[arg(long, value_parser = parse_colorspace)]
    colorspace: Option<ColorSpace>,
    /// Gaussian smoothing bandwidth.
    #[arg(long)]
    sigma: Option<f64>,
    /// Safe zone JSON ({"relative": [[x,y],...]} or {"absolute": ...}).
    #[arg(long)]
    safe_zone: Option<PathBuf>,
    /// Threshold slack multiplier (>= 1).
    #[arg(long)]
    ssd_multiplier: Option<f64>,
    /// Use the raw unnormalized SSD formula.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    canny_low: Option<f64>,
    #[arg(long)]
    canny_high: Option<f64>,
    #[arg(long)]
    hough_votes: Option<u32>,
    #[arg(long)]
    hough_minlen: Option<f64>,
    #[arg(long)]
    hough_maxgap: Option<u32>,
    /// Lines within this many degrees of vertical count as vertical.
    #[arg(long)]
    vertical_tol: Option<f64>,
    /// Junction pairing radius / mask band widening in pixels.
    #[arg(long)]
    junction_radius: Option<f64>,
    /// PRNG seed for the probabilistic Hough sampler.
    #[arg(long)]
    hough_seed: Option<u64>,
    /// Run Hough on the raw edge map instead of traced contours.
    #[arg(long)]
    hough_on_edges: bool,
    /// Write intermediate debug artifacts.
    #[arg(long)]
    debug_artifacts: bool,
}

impl PipelineFlags {
    fn build_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(k) = self.k {
            config.slic.k = k;
        }
        if let Some(m) = self.m {
            config.slic.m = m;
        }
        if let Some(cs) = self.colorspace {
            config.slic.color_space = cs;
        }
        if let Some(sigma) = self.sigma {
            config.sigma = sigma;
        }
        if let Some(path) = &self.safe_zone {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading safe zone {}", path.display()))?;
            config.safe_zone = serde_json::from_str::<SafeZoneSpec>(&text)
                .with_context(|| format!("parsing safe zone {}", path.display()))?;
        }
        if let Some(v) = self.ssd_multiplier {
            config.ssd_multiplier = v;
        }
        if self.no_normalize {
            config.normalize_features = false;
        }
        if let Some(v) = self.canny_low {
            config.junction.canny_low = v;
        }
        if let Some(v) = self.canny_high {
            config.junction.canny_high = v;
        }
        if let Some(v) = self.hough_votes {
            config.junction.hough.votes = v;
        }
        if let Some(v) = self.hough_minlen {
            config.junction.hough.min_len = v;
        }
        if let Some(v) = self.hough_maxgap {
            config.junction.hough.max_gap = v;
        }
        if let Some(v) = self.vertical_tol {
            config.junction.vertical_tol = v;
        }
        if let Some(v) = self.junction_radius {
            config.junction.radius = v;
        }
        if let Some(v) = self.hough_seed {
            config.junction.hough.seed = v;
        }
        if self.hough_on_edges {
            config.junction.hough_on_edge_map = true;
        }
        if self.debug_artifacts {
            config.debug_artifacts = true;
        }
        Ok(config)
    }
}

fn parse_colorspace(s: &str) -> Result<ColorSpace, String> {
    match s {
        "rgb" => Ok(ColorSpace::Rgb),
        "lab" => Ok(ColorSpace::Lab),
        other => Err(format!("{other}: expected rgb or lab")),
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    flags: PipelineFlags,
    /// Input image (PNG or binary PPM).
    image: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    flags: PipelineFlags,
    image: PathBuf,
}

#[derive(Args)]
struct FloodfillArgs {
    /// Start pixel as x,y.
    #[arg(long, value_parser = parse_point_u32)]
    node: (u32, u32),
    /// Target color r,g,b; defaults to the color at the node.
    #[arg(long, value_parser = parse_rgb)]
    target: Option<[u8; 3]>,
    /// Replacement color r,g,b.
    #[arg(long, value_parser = parse_rgb, default_value = "255,0,0")]
    replacement: [u8; 3],
    #[arg(long, default_value = "out")]
    out: PathBuf,
    image: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Calibration JSON: square_size_cm plus image/ground correspondences.
    #[arg(long)]
    calib: PathBuf,
}

#[derive(Args)]
struct WarpArgs {
    /// Region corners x1,y1,x2,y2,x3,y3,x4,y4 ordered top-left,
    /// top-right, bottom-right, bottom-left.
    #[arg(long, value_parser = parse_quad)]
    roi: [(f64, f64); 4],
    /// Output size WxH.
    #[arg(long, value_parser = parse_size, default_value = "400x400")]
    size: (u32, u32),
    #[arg(long, default_value = "out")]
    out: PathBuf,
    image: PathBuf,
}

#[derive(Args)]
struct LutArgs {
    #[arg(long)]
    calib: PathBuf,
    /// Region of validity as x,y,w,h; defaults to --size at origin.
    #[arg(long, value_parser = parse_roi)]
    roi: Option<Roi>,
    /// Image size WxH used when --roi is absent.
    #[arg(long, value_parser = parse_size, default_value = "640x480")]
    size: (u32, u32),
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_point_u32(s: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("{s}: expected x,y"));
    }
    let x = parts[0].trim().parse().map_err(|e| format!("{s}: {e}"))?;
    let y = parts[1].trim().parse().map_err(|e| format!("{s}: {e}"))?;
    Ok((x, y))
}

fn parse_rgb(s: &str) -> Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("{s}: expected r,g,b"));
    }
    let mut rgb = [0u8; 3];
    for (i, p) in parts.iter().enumerate() {
        rgb[i] = p.trim().parse().map_err(|e| format!("{s}: {e}"))?;
    }
    Ok(rgb)
}

fn parse_quad(s: &str) -> Result<[(f64, f64); 4], String> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| format!("{s}: {e}"))?;
    if vals.len() != 8 {
        return Err(format!("{s}: expected 8 comma-separated coordinates"));
    }
    Ok([
        (vals[0], vals[1]),
        (vals[2], vals[3]),
        (vals[4], vals[5]),
        (vals[6], vals[7]),
    ])
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 2 {
        return Err(format!("{s}: expected WxH"));
    }
    let w = parts[0].trim().parse().map_err(|e| format!("{s}: {e}"))?;
    let h = parts[1].trim().parse().map_err(|e| format!("{s}: {e}"))?;
    Ok((w, h))
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let vals: Result<Vec<u32>, _> = s.split(',').map(|p| p.trim().parse::<u32>()).collect();
    let vals = vals.map_err(|e| format!("{s}: {e}"))?;
    if vals.len() != 4 {
        return Err(format!("{s}: expected x,y,w,h"));
    }
    Ok(Roi {
        x: vals[0],
        y: vals[1],
        width: vals[2],
        height: vals[3],
    })
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("output directory {} is not writable", dir.display()))?;
    // Cheap writability probe so failures surface at startup.
    let probe = dir.join(".floorvis-write-probe");
    std::fs::write(&probe, b"ok")
        .with_context(|| format!("output directory {} is not writable", dir.display()))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

fn draw_segment(img: &mut ImageU8, seg: &LineSegment, color: [u8; 3]) {
    let steps = (seg.p2.0 - seg.p1.0)
        .abs()
        .max((seg.p2.1 - seg.p1.1).abs())
        .ceil() as u32
        + 1;
    for s in 0..=steps {
        let t = f64::from(s) / f64::from(steps);
        let x = (seg.p1.0 + t * (seg.p2.0 - seg.p1.0)).round() as i64;
        let y = (seg.p1.1 + t * (seg.p2.1 - seg.p1.1)).round() as i64;
        if x >= 0 && y >= 0 && x < i64::from(img.width) && y < i64::from(img.height) {
            img.set_pixel(x as u32, y as u32, color);
        }
    }
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let config = args.flags.build_config()?;
    ensure_out_dir(&config.output_dir)?;
    let img = io::load_image(&args.image)?;
    let result = run_pipeline(&img, &config)?;
    let out = &config.output_dir;

    io::save_mask(&result.occupancy, &out.join("occupancy.pgm"))?;
    io::save_labels_pgm16(&result.labels, &out.join("labels.pgm"))?;
    io::save_png(&draw_boundaries(&img, &result.labels), &out.join("overlay.png"))?;

    let mut hist_csv = Vec::new();
    result.histogram.write_csv(&mut hist_csv)?;
    std::fs::write(out.join("histogram.csv"), hist_csv)?;

    let mut feat_csv = Vec::new();
    write_features_csv(&mut feat_csv, &result.features, &result.model, &result.classes)?;
    std::fs::write(out.join("features.csv"), feat_csv)?;

    let mut timings = Vec::new();
    result.timings.write_json(&mut timings)?;
    std::fs::write(out.join("timings.json"), timings)?;

    if config.debug_artifacts {
        io::save_mask(&result.pre_mask, &out.join("region_grow.pgm"))?;
        io::save_mask(&result.junction.mask, &out.join("junction_mask.pgm"))?;
        io::save_png(&result.smoothed, &out.join("smoothed.png"))?;
        let edges_gray = result.junction.edges.to_gray();
        let edges_img = ImageU8 {
            width: edges_gray.width,
            height: edges_gray.height,
            data: edges_gray.data.iter().flat_map(|&v| [v, v, v]).collect(),
        };
        io::save_png(&edges_img, &out.join("edges.png"))?;
        let mut lines_img = result.smoothed.clone();
        for line in &result.junction.lines {
            let vertical = line.orientation <= config.junction.vertical_tol;
            let color = if vertical { [255, 0, 0] } else { [0, 255, 0] };
            draw_segment(&mut lines_img, line, color);
        }
        io::save_png(&lines_img, &out.join("lines.png"))?;
    }

    println!(
        "segments: {}  floor px: {} / {}  junctions: {}  total: {:.3}s",
        result.labels.segment_count,
        result.occupancy.count_white(),
        result.occupancy.data.len(),
        result.junction.junctions.len(),
        result.timings.total_seconds
    );
    for (name, secs) in &result.timings.stages {
        println!("  {name}: {:.1} ms", secs * 1e3);
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}

fn cmd_segment(args: &SegmentArgs) -> Result<()> {
    let config = args.flags.build_config()?;
    ensure_out_dir(&config.output_dir)?;
    let img = io::load_image(&args.image)?;

    let kernel = floorvis::smooth::build_kernel(config.sigma)?;
    let working = match config.slic.color_space {
        ColorSpace::Lab => floorvis::smooth::smooth(&floorvis::color::rgb_to_lab(&img), &kernel),
        ColorSpace::Rgb => floorvis::smooth::smooth(
            &floorvis::image::FloatImage::from_rgb(&img),
            &kernel,
        ),
    };
    let labels = segment(&working, &config.slic)?;
    io::save_labels_pgm16(&labels, &config.output_dir.join("labels.pgm"))?;
    io::save_png(
        &draw_boundaries(&img, &labels),
        &config.output_dir.join("overlay.png"),
    )?;
    println!(
        "{} segments; labels.pgm and overlay.png written to {}",
        labels.segment_count,
        config.output_dir.display()
    );
    Ok(())
}

fn cmd_floodfill(args: &FloodfillArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let img = io::load_image(&args.image)?;
    let (x, y) = args.node;
    if x >= img.width || y >= img.height {
        bail!("node ({x}, {y}) outside {}x{} image", img.width, img.height);
    }
    let target = args.target.unwrap_or_else(|| img.pixel(x, y));
    let filled = flood_fill(&img, args.node, target, args.replacement)?;
    let path = args.out.join("floodfill.png");
    io::save_png(&filled, &path)?;
    println!("flood fill written to {}", path.display());
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let calib = CalibrationConfig::load(&args.calib)?;
    let h = estimate_homography(&calib.correspondences)?;
    println!("homography (image -> ground, cm):");
    for row in &h.h {
        println!("  [{:12.6} {:12.6} {:12.6}]", row[0], row[1], row[2]);
    }
    let err = reprojection_error(&h, &calib.correspondences)?;
    println!("reprojection SSD over {} points: {:.6e}", calib.correspondences.len(), err);
    println!("square size: {} cm", calib.square_size_cm);
    Ok(())
}

fn cmd_warp(args: &WarpArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let img = io::load_image(&args.image)?;
    let (w, h) = args.size;
    let warped = warp_topdown(&img, args.roi, w, h)?;
    let path = args.out.join("topdown.png");
    io::save_png(&warped, &path)?;
    println!("top-down view written to {}", path.display());
    Ok(())
}

fn cmd_lut(args: &LutArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let calib = CalibrationConfig::load(&args.calib)?;
    let h = estimate_homography(&calib.correspondences)?;
    let roi = args.roi.unwrap_or(Roi {
        x: 0,
        y: 0,
        width: args.size.0,
        height: args.size.1,
    });
    let lut = build_lookup_table(&h, roi);

    let mut csv = Vec::new();
    lut.write_csv(&mut csv)?;
    std::fs::write(args.out.join("lut.csv"), csv)?;
    let mut bin = Vec::new();
    lut.write_binary(&mut bin)?;
    std::fs::write(args.out.join("lut.bin"), bin)?;

    let center = (
        f64::from(roi.x) + f64::from(roi.width) / 2.0,
        f64::from(roi.y) + f64::from(roi.height) / 2.0,
    );
    if let Ok(g) = apply_homography(&h, center) {
        println!("center pixel {center:?} -> ground ({:.2}, {:.2}) cm", g.0, g.1);
    }
    println!("lut.csv and lut.bin written to {}", args.out.display());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Floodfill(args) => cmd_floodfill(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Warp(args) => cmd_warp(args),
        Command::Lut(args) => cmd_lut(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_point_u32("3,4").unwrap(), (3, 4));
        assert!(parse_point_u32("3").is_err());
        assert_eq!(parse_rgb("1, 2, 3").unwrap(), [1, 2, 3]);
        assert_eq!(parse_size("640x480").unwrap(), (640, 480));
        assert_eq!(
            parse_quad("0,0,1,0,1,1,0,1").unwrap(),
            [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        );
        let roi = parse_roi("1,2,3,4").unwrap();
        assert_eq!((roi.x, roi.y, roi.width, roi.height), (1, 2, 3, 4));
    }
}
