//! Raster types shared by all stages.
//!
//! Three rasters cover the whole pipeline: [`ImageU8`] for 8-bit RGB input,
//! [`FloatImage`] for the 3-channel floating-point working space (CIELAB or
//! RGB-as-float), and single-channel [`GrayImage`] / [`OccupancyMask`] for
//! the edge and occupancy stages. All are row-major and immutable in normal
//! use; every operation returns a fresh raster.

use crate::error::{Error, Result};

/// Binary mask value for traversable floor.
pub const WHITE: u8 = 255;
/// Binary mask value for obstacle / unknown.
pub const BLACK: u8 = 0;

/// 8-bit RGB image, channels interleaved in R,G,B order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    pub width: u32,
    pub height: u32,
    /// Row-major samples, `width * height * 3` bytes.
    pub data: Vec<u8>,
}

impl ImageU8 {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::CorruptData(format!(
                "expected {} bytes for {}x{} RGB, got {}",
                expected,
                width,
                height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Solid-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn n_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// 3-channel floating-point raster: the segmentation working space.
///
/// Holds CIELAB triples after [`crate::color::rgb_to_lab`], or plain RGB
/// values promoted to float when segmenting in RGB space.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: u32,
    pub height: u32,
    /// Row-major triples, `width * height * 3` values.
    pub data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::CorruptData(format!(
                "expected {} samples for {}x{} float image, got {}",
                expected,
                width,
                height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![0.0; width as usize * height as usize * 3],
        )
    }

    /// Promote an RGB image to float without color conversion (0..255 range).
    pub fn from_rgb(img: &ImageU8) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    /// Round and clamp back to 8-bit RGB.
    pub fn to_rgb_u8(&self) -> ImageU8 {
        ImageU8 {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, v: [f64; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&v);
    }

    pub fn n_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Single-channel 8-bit image (luma).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::CorruptData(format!(
                "expected {} samples for {}x{} gray image, got {}",
                expected,
                width,
                height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, v: u8) -> Result<Self> {
        Self::new(width, height, vec![v; width as usize * height as usize])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }
}

/// Binary occupancy raster: WHITE (255) = traversable floor, BLACK (0) =
/// obstacle or unknown. Only those two values ever occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl OccupancyMask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::CorruptData(format!(
                "expected {} samples for {}x{} mask, got {}",
                expected,
                width,
                height,
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| v != BLACK && v != WHITE) {
            return Err(Error::CorruptData(format!(
                "mask sample {bad} is neither 0 nor 255"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, v: u8) -> Result<Self> {
        Self::new(width, height, vec![v; width as usize * height as usize])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(v == BLACK || v == WHITE);
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count_white(&self) -> usize {
        self.data.iter().filter(|&&v| v == WHITE).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_u8_rejects_bad_length() {
        assert!(matches!(
            ImageU8::new(2, 2, vec![0; 11]),
            Err(Error::CorruptData(_))
        ));
        assert!(matches!(ImageU8::new(0, 2, vec![]), Err(Error::EmptyImage)));
    }

    #[test]
    fn mask_rejects_non_binary_values() {
        assert!(matches!(
            OccupancyMask::new(2, 1, vec![0, 7]),
            Err(Error::CorruptData(_))
        ));
        assert!(OccupancyMask::new(2, 1, vec![0, 255]).is_ok());
    }

    #[test]
    fn pixel_roundtrip() {
        let mut img = ImageU8::filled(3, 2, [1, 2, 3]).unwrap();
        img.set_pixel(2, 1, [9, 8, 7]);
        assert_eq!(img.pixel(2, 1), [9, 8, 7]);
        assert_eq!(img.pixel(0, 0), [1, 2, 3]);
    }

    #[test]
    fn float_round_trip_clamps() {
        let f = FloatImage::new(1, 1, vec![-3.0, 12.4, 300.0]).unwrap();
        assert_eq!(f.to_rgb_u8().data, vec![0, 12, 255]);
    }
}
