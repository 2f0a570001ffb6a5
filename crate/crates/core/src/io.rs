//! Raster file I/O: PNG and binary PPM (P6) input, binary PGM (P5) and PNG
//! mask output, 16-bit PGM label maps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ImageU8, OccupancyMask};
use crate::slic::SegmentLabels;

/// Load an 8-bit RGB image from a PNG or binary PPM (P6) file.
///
/// Gray PNG input is promoted to RGB by channel replication.
pub fn load_image(path: &Path) -> Result<ImageU8> {
    let bytes = read_file(path)?;
    if bytes.starts_with(b"P6") {
        return decode_ppm_p6(&bytes);
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_png_rgb(&bytes);
    }
    Err(Error::UnsupportedFormat(format!(
        "{}: not a PNG or binary PPM file",
        path.display()
    )))
}

/// Write an occupancy mask as binary PGM (`.pgm`) or 8-bit gray PNG
/// (`.png`). Reloading with [`load_mask`] yields a bit-identical mask.
pub fn save_mask(mask: &OccupancyMask, path: &Path) -> Result<()> {
    match extension(path) {
        Some("pgm") => {
            let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
            out.extend_from_slice(&mask.data);
            fs::write(path, out)?;
            Ok(())
        }
        Some("png") => save_gray_png(&mask.data, mask.width, mask.height, path),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: mask output must be .pgm or .png",
            path.display()
        ))),
    }
}

/// Load an occupancy mask from a binary PGM (P5) or gray PNG file.
pub fn load_mask(path: &Path) -> Result<OccupancyMask> {
    let bytes = read_file(path)?;
    let (width, height, data) = if bytes.starts_with(b"P5") {
        decode_pgm_p5(&bytes)?
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png_gray(&bytes)?
    } else {
        return Err(Error::UnsupportedFormat(format!(
            "{}: not a PNG or binary PGM file",
            path.display()
        )));
    };
    OccupancyMask::new(width, height, data)
}

/// Write a label map as a 16-bit binary PGM (maxval 65535, big-endian
/// samples per the netpbm convention).
pub fn save_labels_pgm16(labels: &SegmentLabels, path: &Path) -> Result<()> {
    if labels.segment_count > u32::from(u16::MAX) {
        return Err(Error::UnsupportedFormat(format!(
            "{} segments exceed 16-bit PGM range",
            labels.segment_count
        )));
    }
    let mut out = format!("P5\n{} {}\n65535\n", labels.width, labels.height).into_bytes();
    for &l in &labels.labels {
        out.extend_from_slice(&(l as u16).to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write an RGB image as PNG.
pub fn save_png(img: &ImageU8, path: &Path) -> Result<()> {
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width, img.height, img.data.clone())
            .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptData(format!("png encode: {e}")))
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    Ok(fs::read(path)?)
}

fn save_gray_png(data: &[u8], width: u32, height: u32, path: &Path) -> Result<()> {
    let buf: image::GrayImage = image::ImageBuffer::from_raw(width, height, data.to_vec())
        .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptData(format!("png encode: {e}")))
}

fn decode_png_rgb(bytes: &[u8]) -> Result<ImageU8> {
    let dynimg = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptData(format!("png decode: {e}")))?;
    let rgb = match dynimg {
        image::DynamicImage::ImageRgb8(img) => img,
        image::DynamicImage::ImageRgba8(_)
        | image::DynamicImage::ImageLuma8(_)
        | image::DynamicImage::ImageLumaA8(_) => dynimg.to_rgb8(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "png color type {:?}: expected 8-bit RGB or gray",
                other.color()
            )))
        }
    };
    let (width, height) = rgb.dimensions();
    ImageU8::new(width, height, rgb.into_raw())
}

fn decode_png_gray(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let dynimg = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptData(format!("png decode: {e}")))?;
    match dynimg {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            Ok((w, h, img.into_raw()))
        }
        other => Err(Error::UnsupportedFormat(format!(
            "png color type {:?}: expected 8-bit gray mask",
            other.color()
        ))),
    }
}

/// Pull the next whitespace-delimited token out of a netpbm header,
/// skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::CorruptData("truncated netpbm header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_dim(token: &[u8]) -> Result<u32> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| Error::CorruptData("bad netpbm header field".into()))
}

fn parse_netpbm_header(bytes: &[u8], magic: &[u8]) -> Result<(u32, u32, usize)> {
    let mut pos = 0usize;
    let m = next_token(bytes, &mut pos)?;
    if m != magic {
        return Err(Error::UnsupportedFormat(format!(
            "netpbm magic {:?}",
            String::from_utf8_lossy(m)
        )));
    }
    let width = parse_dim(next_token(bytes, &mut pos)?)?;
    let height = parse_dim(next_token(bytes, &mut pos)?)?;
    let maxval = parse_dim(next_token(bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "netpbm maxval {maxval}: only 255 supported for input"
        )));
    }
    // Exactly one whitespace byte separates the header from raster data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::CorruptData("missing raster separator".into()));
    }
    Ok((width, height, pos + 1))
}

fn decode_ppm_p6(bytes: &[u8]) -> Result<ImageU8> {
    let (width, height, offset) = parse_netpbm_header(bytes, b"P6")?;
    let n = width as usize * height as usize * 3;
    if bytes.len() < offset + n {
        return Err(Error::CorruptData(format!(
            "ppm raster truncated: need {} bytes, have {}",
            n,
            bytes.len().saturating_sub(offset)
        )));
    }
    ImageU8::new(width, height, bytes[offset..offset + n].to_vec())
}

fn decode_pgm_p5(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let (width, height, offset) = parse_netpbm_header(bytes, b"P5")?;
    let n = width as usize * height as usize;
    if bytes.len() < offset + n {
        return Err(Error::CorruptData(format!(
            "pgm raster truncated: need {} bytes, have {}",
            n,
            bytes.len().saturating_sub(offset)
        )));
    }
    Ok((width, height, bytes[offset..offset + n].to_vec()))
}
