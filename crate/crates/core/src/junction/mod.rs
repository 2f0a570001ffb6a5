//! Floor-junction detection and masking.
//!
//! Vertical lines are treated as possible wall / obstacle edges (vertical
//! stays vertical however the robot is oriented). Where a vertical line's
//! bottom end meets a non-vertical line, the region above that junction
//! is masked out of the occupancy image.

pub mod canny;
pub mod contour;
pub mod hough;

pub use canny::{canny, EdgeMap};
pub use contour::{contours_to_edge_map, trace_contours, Contour};
pub use hough::{hough_lines, HoughParams, LineSegment};

use crate::error::{Error, Result};
use crate::image::{GrayImage, OccupancyMask, BLACK, WHITE};

/// A vertical line paired with the non-vertical line that passes near its
/// bottom endpoint: the place where an obstacle edge meets the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorJunction {
    pub vertical: LineSegment,
    pub floor_line: LineSegment,
    /// Bottom endpoint of the vertical line.
    pub anchor: (f64, f64),
}

/// Parameters of the whole junction stage.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JunctionParams {
    pub canny_low: f64,
    pub canny_high: f64,
    pub hough: HoughParams,
    /// A line is vertical iff its orientation from vertical is within
    /// this tolerance (degrees).
    pub vertical_tol: f64,
    /// Pairing radius around the vertical line's bottom endpoint, also
    /// the mask band widening, in pixels.
    pub radius: f64,
    /// Run the line detector on the raw edge map instead of the traced
    /// contour points.
    pub hough_on_edge_map: bool,
}

impl Default for JunctionParams {
    fn default() -> Self {
        // The junction stage sees the sigma=5 smoothed camera image, which
        // caps Sobel magnitudes near 0.6x the raw contrast; thresholds sit
        // well below the classic 50/150 for that reason.
        Self {
            canny_low: 15.0,
            canny_high: 40.0,
            hough: HoughParams::default(),
            vertical_tol: 10.0,
            radius: 15.0,
            hough_on_edge_map: false,
        }
    }
}

/// Distance from point `p` to the closed segment `(a, b)`.
fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    (p.0 - cx).hypot(p.1 - cy)
}

/// Pair every vertical line (orientation within `vertical_tol` of the
/// image vertical) with each non-vertical line passing within `radius`
/// of the vertical's bottom endpoint.
pub fn find_floor_junctions(
    lines: &[LineSegment],
    radius: f64,
    vertical_tol: f64,
) -> Vec<FloorJunction> {
    let mut junctions = Vec::new();
    for vl in lines.iter().filter(|l| l.orientation <= vertical_tol) {
        let anchor = vl.bottom();
        for fl in lines.iter().filter(|l| l.orientation > vertical_tol) {
            if point_segment_distance(anchor, fl.p1, fl.p2) <= radius {
                junctions.push(FloorJunction {
                    vertical: *vl,
                    floor_line: *fl,
                    anchor,
                });
            }
        }
    }
    junctions
}

/// Rasterize junctions into a mask: for each junction, the band of
/// columns spanned by the vertical line (widened by `radius`) turns
/// BLACK from the image top down to the floor line's y at that column.
/// With no junctions the mask stays all WHITE.
pub fn junction_mask(
    width: u32,
    height: u32,
    junctions: &[FloorJunction],
    radius: f64,
) -> Result<OccupancyMask> {
    let mut mask = OccupancyMask::filled(width, height, WHITE)?;
    for j in junctions {
        let x_lo = (j.vertical.p1.0.min(j.vertical.p2.0) - radius).max(0.0) as u32;
        let x_hi = (j.vertical.p1.0.max(j.vertical.p2.0) + radius).min(f64::from(width - 1)) as u32;
        let (f1, f2) = (j.floor_line.p1, j.floor_line.p2);
        let dx = f2.0 - f1.0;
        for x in x_lo..=x_hi {
            let floor_y = if dx.abs() > 1e-9 {
                f1.1 + (f64::from(x) - f1.0) * (f2.1 - f1.1) / dx
            } else {
                j.anchor.1
            };
            let stop = floor_y.min(f64::from(height));
            let mut y = 0u32;
            while f64::from(y) < stop {
                mask.set(x, y, BLACK);
                y += 1;
            }
        }
    }
    Ok(mask)
}

/// Per-pixel AND of the occupancy image with the junction mask: WHITE
/// only where both are WHITE. Never turns a BLACK pixel WHITE.
pub fn apply_junction_mask(occ: &OccupancyMask, mask: &OccupancyMask) -> Result<OccupancyMask> {
    if occ.width != mask.width || occ.height != mask.height {
        return Err(Error::DimensionMismatch {
            expected: (occ.width, occ.height),
            actual: (mask.width, mask.height),
        });
    }
    let data = occ
        .data
        .iter()
        .zip(&mask.data)
        .map(|(&a, &b)| if a == WHITE && b == WHITE { WHITE } else { BLACK })
        .collect();
    OccupancyMask::new(occ.width, occ.height, data)
}

/// Everything the junction stage produces, kept for debug artifacts.
#[derive(Debug, Clone)]
pub struct JunctionStage {
    pub edges: EdgeMap,
    pub lines: Vec<LineSegment>,
    pub junctions: Vec<FloorJunction>,
    pub mask: OccupancyMask,
}

/// Run the full junction chain on a (smoothed) grayscale camera image:
/// Canny edges, contour tracing, probabilistic Hough, junction pairing,
/// mask rasterization.
pub fn detect_junctions(gray: &GrayImage, params: &JunctionParams) -> Result<JunctionStage> {
    let edges = canny(gray, params.canny_low, params.canny_high)?;
    let hough_input = if params.hough_on_edge_map {
        edges.clone()
    } else {
        let contours = trace_contours(&edges);
        contours_to_edge_map(&contours, edges.width, edges.height)
    };
    let lines = hough_lines(&hough_input, &params.hough);
    let junctions = find_floor_junctions(&lines, params.radius, params.vertical_tol);
    let mask = junction_mask(gray.width, gray.height, &junctions, params.radius)?;
    Ok(JunctionStage {
        edges,
        lines,
        junctions,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(p1: (f64, f64), p2: (f64, f64)) -> LineSegment {
        LineSegment::new(p1, p2)
    }

    #[test]
    fn no_vertical_lines_no_junctions() {
        let lines = vec![seg((0.0, 10.0), (50.0, 12.0)), seg((0.0, 40.0), (80.0, 40.0))];
        assert!(find_floor_junctions(&lines, 20.0, 10.0).is_empty());
    }

    #[test]
    fn pairing_by_anchor_distance() {
        let vertical = seg((10.0, 20.0), (10.0, 100.0));
        let floor = seg((12.0, 102.0), (60.0, 102.0));
        let lines = vec![vertical, floor];

        // Nearest floor-line point to the anchor (10, 100) is (12, 102),
        // at distance sqrt(8) ~ 2.83.
        let j = find_floor_junctions(&lines, 20.0, 10.0);
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].anchor, (10.0, 100.0));

        assert!(find_floor_junctions(&lines, 1.0, 10.0).is_empty());
    }

    #[test]
    fn orientation_classification_respects_tolerance() {
        // ~11.3 degrees from vertical: not vertical at tol 10, vertical at 15.
        let tilted = seg((50.0, 0.0), (60.0, 50.0));
        let floor = seg((30.0, 52.0), (90.0, 52.0));
        let lines = vec![tilted, floor];
        assert!(find_floor_junctions(&lines, 20.0, 10.0).is_empty());
        assert_eq!(find_floor_junctions(&lines, 20.0, 15.0).len(), 1);
    }

    #[test]
    fn mask_no_junctions_all_white() {
        let mask = junction_mask(32, 24, &[], 15.0).unwrap();
        assert!(mask.data.iter().all(|&v| v == WHITE));
    }

    #[test]
    fn mask_band_above_horizontal_floor_line() {
        let vertical = seg((50.0, 10.0), (50.0, 80.0));
        let floor = seg((20.0, 80.0), (90.0, 80.0));
        let junctions = find_floor_junctions(&[vertical, floor], 15.0, 10.0);
        assert_eq!(junctions.len(), 1);
        let mask = junction_mask(120, 100, &junctions, 10.0).unwrap();
        for y in 0..100u32 {
            for x in 0..120u32 {
                let in_band = (40..=60).contains(&x);
                let expected = if in_band && y < 80 { BLACK } else { WHITE };
                assert_eq!(mask.get(x, y), expected, "({x},{y})");
            }
        }
    }

    #[test]
    fn mask_union_of_disjoint_bands() {
        let j1 = FloorJunction {
            vertical: seg((20.0, 0.0), (20.0, 40.0)),
            floor_line: seg((0.0, 40.0), (100.0, 40.0)),
            anchor: (20.0, 40.0),
        };
        let j2 = FloorJunction {
            vertical: seg((80.0, 0.0), (80.0, 60.0)),
            floor_line: seg((60.0, 60.0), (100.0, 60.0)),
            anchor: (80.0, 60.0),
        };
        let both = junction_mask(120, 100, &[j1.clone(), j2.clone()], 5.0).unwrap();
        let a = junction_mask(120, 100, &[j1], 5.0).unwrap();
        let b = junction_mask(120, 100, &[j2], 5.0).unwrap();
        let union = apply_junction_mask(&a, &b).unwrap();
        assert_eq!(both, union);
    }

    #[test]
    fn and_identity_and_annihilator() {
        let occ = OccupancyMask::new(2, 2, vec![WHITE, BLACK, WHITE, BLACK]).unwrap();
        let all_white = OccupancyMask::filled(2, 2, WHITE).unwrap();
        let all_black = OccupancyMask::filled(2, 2, BLACK).unwrap();
        assert_eq!(apply_junction_mask(&occ, &all_white).unwrap(), occ);
        assert_eq!(apply_junction_mask(&occ, &all_black).unwrap(), all_black);
        assert!(matches!(
            apply_junction_mask(&occ, &OccupancyMask::filled(3, 2, WHITE).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn and_equals_pixelwise_minimum() {
        let a = OccupancyMask::new(4, 1, vec![WHITE, WHITE, BLACK, BLACK]).unwrap();
        let b = OccupancyMask::new(4, 1, vec![WHITE, BLACK, WHITE, BLACK]).unwrap();
        let out = apply_junction_mask(&a, &b).unwrap();
        for i in 0..4 {
            assert_eq!(out.data[i], a.data[i].min(b.data[i]));
        }
    }

    #[test]
    fn and_never_turns_black_white() {
        let a = OccupancyMask::new(3, 1, vec![BLACK, WHITE, BLACK]).unwrap();
        let b = OccupancyMask::filled(3, 1, WHITE).unwrap();
        let out = apply_junction_mask(&a, &b).unwrap();
        for i in 0..3 {
            assert!(!(a.data[i] == BLACK && out.data[i] == WHITE));
        }
    }

    #[test]
    fn end_to_end_box_scene_masks_above_junction() {
        // Gray scene: bright floor, dark box with base at y = 90,
        // x in [50, 120).
        let mut gray = GrayImage::filled(180, 140, 200).unwrap();
        for y in 30..90u32 {
            for x in 50..120u32 {
                gray.set(x, y, 30);
            }
        }
        let params = JunctionParams::default();
        let stage = detect_junctions(&gray, &params).unwrap();
        assert!(!stage.lines.is_empty(), "expected lines on a box scene");
        assert!(
            !stage.junctions.is_empty(),
            "box corners should produce floor junctions: {:?}",
            stage.lines
        );
        // Above the box base, inside a vertical-edge band: masked.
        assert_eq!(stage.mask.get(50, 10), BLACK);
        assert_eq!(stage.mask.get(119, 10), BLACK);
        // Bottom of the image stays traversable.
        assert_eq!(stage.mask.get(85, 130), WHITE);
    }

    #[test]
    fn rotated_scene_keeps_vertical_lines_vertical() {
        let mut gray = GrayImage::filled(100, 80, 220).unwrap();
        for y in 10..70u32 {
            for x in 45..48u32 {
                gray.set(x, y, 10);
            }
        }
        let params = JunctionParams {
            hough: HoughParams {
                votes: 20,
                min_len: 25.0,
                ..HoughParams::default()
            },
            ..JunctionParams::default()
        };
        let count_vertical = |g: &GrayImage| -> usize {
            let stage = detect_junctions(g, &params).unwrap();
            stage
                .lines
                .iter()
                .filter(|l| l.orientation <= params.vertical_tol)
                .count()
        };
        let n1 = count_vertical(&gray);

        // Rotate 180 degrees.
        let mut rotated = gray.clone();
        rotated.data.reverse();
        let n2 = count_vertical(&rotated);
        assert!(n1 >= 1);
        assert_eq!(n1, n2);
    }
}
