//! Color space conversions: sRGB → CIELAB and RGB → grayscale.

use crate::image::{FloatImage, GrayImage, ImageU8};

// D65 reference white in CIE XYZ, Y normalized to 1.
const XN: f64 = 0.95047;
const YN: f64 = 1.0;
const ZN: f64 = 1.08883;

/// Undo sRGB companding: 8-bit sample to linear-light value in [0, 1].
#[inline]
fn srgb_to_linear(c8: u8) -> f64 {
    let c = f64::from(c8) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Convert one sRGB pixel (D65) to CIE L*a*b*.
pub fn srgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);

    // sRGB linear -> XYZ (D65), IEC 61966-2-1 matrix.
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let fx = lab_f(x / XN);
    let fy = lab_f(y / YN);
    let fz = lab_f(z / ZN);

    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Convert a full sRGB image to CIELAB (L in [0, 100], a and b roughly
/// in [-128, 127]). Total and deterministic.
pub fn rgb_to_lab(img: &ImageU8) -> FloatImage {
    let mut data = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(3) {
        let lab = srgb_pixel_to_lab([px[0], px[1], px[2]]);
        data.extend_from_slice(&lab);
    }
    FloatImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// ITU-R BT.601 luma, rounded to the nearest integer.
pub fn to_grayscale(img: &ImageU8) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let luma =
                0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            luma.round() as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}
