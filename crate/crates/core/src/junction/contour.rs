//! Border following over a binary edge image (Suzuki-Abe).
//!
//! Only outer borders are returned; the hole/outer distinction is still
//! tracked internally because the marking scheme needs it.

use super::canny::EdgeMap;

/// Ordered border points; consecutive points are 8-neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(u32, u32)>,
}

/// Clockwise 8-neighborhood in image coordinates (x right, y down),
/// starting East.
const CLOCKWISE: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    CLOCKWISE
        .iter()
        .position(|&c| c == d)
        .expect("neighbor offset")
}

/// Trace all outer borders of the edge image. Single-pixel components
/// produce degenerate one-point borders and are dropped (a contour needs
/// at least two points).
pub fn trace_contours(edges: &EdgeMap) -> Vec<Contour> {
    let w = edges.width as i64;
    let h = edges.height as i64;
    let mut f: Vec<i32> = edges.data.iter().map(|&e| i32::from(e)).collect();
    let at = |f: &[i32], x: i64, y: i64| -> i32 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0
        } else {
            f[(y * w + x) as usize]
        }
    };

    let mut contours = Vec::new();
    let mut nbd = 1i32;

    for y in 0..h {
        for x in 0..w {
            let v = f[(y * w + x) as usize];
            let outer_start = v == 1 && at(&f, x - 1, y) == 0;
            let hole_start = v >= 1 && at(&f, x + 1, y) == 0;
            if !outer_start && !hole_start {
                continue;
            }
            nbd += 1;
            let from = if outer_start { (x - 1, y) } else { (x + 1, y) };

            // 3.1: clockwise from `from` around (x, y) for a nonzero pixel.
            let start_dir = dir_index((x, y), from);
            let mut first = None;
            for k in 0..8 {
                let d = CLOCKWISE[(start_dir + k) % 8];
                if at(&f, x + d.0, y + d.1) != 0 {
                    first = Some((x + d.0, y + d.1));
                    break;
                }
            }
            let Some((i1x, i1y)) = first else {
                // Isolated pixel: mark and move on.
                f[(y * w + x) as usize] = -nbd;
                continue;
            };

            let mut points = vec![(x as u32, y as u32)];
            let (mut p2x, mut p2y) = (i1x, i1y);
            let (mut p3x, mut p3y) = (x, y);
            loop {
                // 3.3: counterclockwise from the next element after
                // (p2) around (p3); remember whether the East neighbor
                // was examined and zero.
                let back = dir_index((p3x, p3y), (p2x, p2y));
                let mut east_seen_zero = false;
                let mut found = None;
                for k in 1..=8 {
                    let d = CLOCKWISE[(back + 8 - (k % 8)) % 8];
                    let (nx, ny) = (p3x + d.0, p3y + d.1);
                    if at(&f, nx, ny) != 0 {
                        found = Some((nx, ny));
                        break;
                    }
                    if d == (1, 0) {
                        east_seen_zero = true;
                    }
                }
                let (p4x, p4y) = found.expect("border pixel has a nonzero neighbor");

                // 3.4: marking.
                let idx = (p3y * w + p3x) as usize;
                if east_seen_zero {
                    f[idx] = -nbd;
                } else if f[idx] == 1 {
                    f[idx] = nbd;
                }

                // 3.5: termination when the trace returns to the start.
                if (p4x, p4y) == (x, y) && (p3x, p3y) == (i1x, i1y) {
                    break;
                }
                p2x = p3x;
                p2y = p3y;
                p3x = p4x;
                p3y = p4y;
                points.push((p3x as u32, p3y as u32));
            }

            if outer_start && points.len() >= 2 {
                contours.push(Contour { points });
            }
        }
    }
    contours
}

/// Rasterize contour points back into an edge map, for running the line
/// detector over contours rather than the raw edges.
pub fn contours_to_edge_map(contours: &[Contour], width: u32, height: u32) -> EdgeMap {
    let mut out = EdgeMap::empty(width, height);
    for c in contours {
        for &(x, y) in &c.points {
            out.set(x, y, true);
        }
    }
    out
}
