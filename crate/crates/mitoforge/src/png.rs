//! 8-bit PNG input and output.
//!
//! Loading maps every sample to `v / 255`; grayscale is replicated to three
//! channels and alpha is dropped. Storing writes `round(v * 255)`.

use std::path::Path;

use image::{ImageFormat, RgbImage};
use mitoforge_core::imaging::ImageBuffer;

use crate::error::{CliError, Result};

pub fn load_png(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_rgb8(&decoded.to_rgb8()))
}

pub fn from_rgb8(img: &RgbImage) -> ImageBuffer {
    let (w, h) = img.dimensions();
    ImageBuffer::from_fn(h as usize, w as usize, |r, c| {
        let p = img.get_pixel(c as u32, r as u32).0;
        [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
    })
}

pub fn to_rgb8(img: &ImageBuffer) -> RgbImage {
    let quantize = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    RgbImage::from_fn(img.width() as u32, img.height() as u32, |c, r| {
        let p = img.pixel(r as usize, c as usize);
        image::Rgb([quantize(p[0]), quantize(p[1]), quantize(p[2])])
    })
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    to_rgb8(img)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|source| match source {
            image::ImageError::IoError(e) => CliError::io(path, e),
            source => CliError::Image {
                path: path.to_path_buf(),
                source,
            },
        })
}
