//! Float images with binary PPM (P6) / PGM (P5) file I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major image with 1 (gray) or 3 (RGB) channels and values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new_filled(width: usize, height: usize, channels: usize, value: f64) -> Image {
        debug_assert!(channels == 1 || channels == 3);
        Image { width, height, channels, data: vec![value; width * height * channels] }
    }

    /// Builds an image from raw data, validating shape and value range.
    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Image> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("channels must be 1 or 3, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::InvalidImage("pixel value outside [0,1]".into()));
        }
        Ok(Image { width, height, channels, data })
    }

    #[inline]
    pub fn pixel_index(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> f64 {
        self.data[self.pixel_index(x, y) + ch]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: f64) {
        let i = self.pixel_index(x, y) + ch;
        self.data[i] = v;
    }

    pub fn same_resolution(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Luminance plane: `0.299 R + 0.587 G + 0.114 B` (identity on gray images).
    pub fn luminance(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        load_image(path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_image(self, path)
    }
}

/// Loads a binary PGM (P5, 1 channel) or PPM (P6, 3 channels) with maxval 255.
///
/// Header tokens may be separated by any whitespace and `#` comments; values
/// map to floats as `v / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 2 {
        return Err(Error::parse(path, None, "file too short for a netpbm header"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::parse(
                path,
                None,
                format!("unsupported magic number {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };

    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in &mut header {
        *slot = read_header_int(&bytes, &mut pos)
            .ok_or_else(|| Error::parse(path, None, "truncated or malformed netpbm header"))?;
    }
    let (width, height, maxval) = (header[0], header[1], header[2]);
    if maxval != 255 {
        return Err(Error::parse(path, None, format!("unsupported maxval {maxval} (only 255)")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::parse(path, None, "missing whitespace before pixel payload"));
    }
    pos += 1;

    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::parse(
            path,
            None,
            format!("truncated payload: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    let data = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    Image::from_data(width, height, channels, data)
}

/// Saves as binary PGM/PPM with maxval 255: `round(v * 255)` clamped to `[0, 255]`.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_header_int(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    // Skip whitespace and '#' comments.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}
