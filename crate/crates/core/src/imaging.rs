//! RGB raster type and the geometric/photometric primitives the augmentation
//! chain is built from.
//!
//! Pixels are `f64` in `[0, 1]`, row-major, channel-interleaved. Coordinates
//! are pixel centers: `(x, y) = (col, row)`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Wraps interleaved RGB data. Values are clamped into `[0, 1]`; NaN is rejected.
    pub fn new(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * CHANNELS {
            return Err(invalid!(
                "buffer holds {} values, expected {}x{}x3",
                data.len(),
                height,
                width
            ));
        }
        for v in &mut data {
            if v.is_nan() {
                return Err(invalid!("pixel value is NaN"));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value.clamp(0.0, 1.0); height * width * CHANNELS],
        }
    }

    /// Builds an image from a per-pixel function `f(row, col) -> rgb`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(y, x).iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.height == 0 || self.width == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * CHANNELS + channel]
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// One channel as a dense `height * width` plane.
    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.data.iter().skip(channel).step_by(CHANNELS).copied().collect()
    }

    pub(crate) fn from_planes(height: usize, width: usize, planes: [&[f64]; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for i in 0..height * width {
            for plane in planes {
                data.push(plane[i].clamp(0.0, 1.0));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &ImageBuffer) -> f64 {
        if self.height != other.height || self.width != other.width {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpMode {
    #[default]
    Bilinear,
}

/// How taps outside the image are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Border {
    /// Coordinates are clamped to the nearest edge pixel.
    #[default]
    Clamp,
    /// Taps outside the image read this value.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Interpolator {
    pub mode: InterpMode,
    pub border: Border,
}

impl Interpolator {
    pub const CLAMP: Interpolator = Interpolator {
        mode: InterpMode::Bilinear,
        border: Border::Clamp,
    };

    pub fn constant(value: f64) -> Self {
        Self {
            mode: InterpMode::Bilinear,
            border: Border::Constant(value.clamp(0.0, 1.0)),
        }
    }
}

#[inline]
fn tap(img: &ImageBuffer, row: isize, col: isize, border: Border) -> [f64; 3] {
    let (h, w) = (img.height as isize, img.width as isize);
    if (0..h).contains(&row) && (0..w).contains(&col) {
        return img.pixel(row as usize, col as usize);
    }
    match border {
        Border::Clamp => img.pixel(row.clamp(0, h - 1) as usize, col.clamp(0, w - 1) as usize),
        Border::Constant(v) => [v; 3],
    }
}

/// Bilinear sample at `(x, y)` = (column, row) in pixel-center coordinates.
///
/// The image must be nonempty. Exact integer coordinates inside the image
/// return the stored pixel unchanged.
pub fn sample_bilinear(img: &ImageBuffer, x: f64, y: f64, interp: Interpolator) -> [f64; 3] {
    let InterpMode::Bilinear = interp.mode;
    let (x, y) = match interp.border {
        Border::Clamp => (
            x.clamp(0.0, (img.width - 1) as f64),
            y.clamp(0.0, (img.height - 1) as f64),
        ),
        Border::Constant(_) => (x, y),
    };
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let (c0, r0) = (x0 as isize, y0 as isize);
    let p00 = tap(img, r0, c0, interp.border);
    let p01 = tap(img, r0, c0 + 1, interp.border);
    let p10 = tap(img, r0 + 1, c0, interp.border);
    let p11 = tap(img, r0 + 1, c0 + 1, interp.border);
    let mut out = [0.0; 3];
    for c in 0..CHANNELS {
        let top = p00[c] * (1.0 - fx) + p01[c] * fx;
        let bottom = p10[c] * (1.0 - fx) + p11[c] * fx;
        out[c] = (top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0);
    }
    out
}

/// Aspect-preserving fit into a `height` x `width` canvas.
///
/// The image is scaled by `min(height / h, width / w)` with bilinear
/// resampling (half-pixel centers, clamped border), centered, and padded
/// with black. Odd remainders put the extra row/column on the bottom/right.
pub fn resize_pad_to(img: &ImageBuffer, height: usize, width: usize) -> Result<ImageBuffer> {
    if img.is_empty() {
        return Err(invalid!("cannot resize an empty image"));
    }
    if height == 0 || width == 0 {
        return Err(invalid!("target size must be at least 1x1"));
    }
    if img.height == height && img.width == width {
        return Ok(img.clone());
    }
    let scale = f64::min(height as f64 / img.height as f64, width as f64 / img.width as f64);
    let active_h = (libm::round(img.height as f64 * scale) as usize).clamp(1, height);
    let active_w = (libm::round(img.width as f64 * scale) as usize).clamp(1, width);
    let top = (height - active_h) / 2;
    let left = (width - active_w) / 2;
    let sy = img.height as f64 / active_h as f64;
    let sx = img.width as f64 / active_w as f64;

    let mut out = ImageBuffer::filled(height, width, 0.0);
    for r in 0..active_h {
        let src_y = (r as f64 + 0.5) * sy - 0.5;
        for c in 0..active_w {
            let src_x = (c as f64 + 0.5) * sx - 0.5;
            let px = sample_bilinear(img, src_x, src_y, Interpolator::CLAMP);
            let i = ((top + r) * width + left + c) * CHANNELS;
            out.data[i..i + CHANNELS].copy_from_slice(&px);
        }
    }
    Ok(out)
}

/// Square letterbox: [`resize_pad_to`] with `side` x `side`.
pub fn resize_pad(img: &ImageBuffer, side: usize) -> Result<ImageBuffer> {
    resize_pad_to(img, side, side)
}

/// `v -> clamp(contrast * (v - 0.5) + 0.5 + brightness, 0, 1)`.
pub fn brightness_contrast(img: &ImageBuffer, brightness: f64, contrast: f64) -> Result<ImageBuffer> {
    if !(contrast > 0.0) || !contrast.is_finite() {
        return Err(invalid!("contrast must be positive and finite, got {contrast}"));
    }
    if !brightness.is_finite() {
        return Err(invalid!("brightness must be finite"));
    }
    // Written as v + (c - 1)(v - 0.5) + b so neutral parameters are bit-exact.
    let data = img
        .data
        .iter()
        .map(|&v| (v + (contrast - 1.0) * (v - 0.5) + brightness).clamp(0.0, 1.0))
        .collect();
    Ok(ImageBuffer {
        height: img.height,
        width: img.width,
        data,
    })
}

/// (sin, cos) of an angle in degrees, exact at multiples of 90.
fn sin_cos_degrees(angle: f64) -> (f64, f64) {
    let reduced = angle % 360.0;
    let reduced = if reduced < 0.0 { reduced + 360.0 } else { reduced };
    if reduced % 90.0 == 0.0 {
        match (reduced / 90.0) as u32 {
            0 | 4 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        libm::sincos(reduced.to_radians())
    }
}

/// Rotates about the image center by `angle` degrees.
///
/// Each output pixel samples the input at its own position rotated by
/// `-angle`; in row-down image coordinates a positive angle turns the content
/// clockwise on screen.
pub fn rotate(img: &ImageBuffer, angle: f64, interp: Interpolator) -> Result<ImageBuffer> {
    if !angle.is_finite() {
        return Err(invalid!("rotation angle must be finite"));
    }
    if img.is_empty() {
        return Ok(img.clone());
    }
    let (sin, cos) = sin_cos_degrees(angle);
    if sin == 0.0 && cos == 1.0 {
        return Ok(img.clone());
    }
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(img.data.len());
    for r in 0..img.height {
        let dy = r as f64 - cy;
        for c in 0..img.width {
            let dx = c as f64 - cx;
            let src_x = cx + cos * dx + sin * dy;
            let src_y = cy - sin * dx + cos * dy;
            data.extend_from_slice(&sample_bilinear(img, src_x, src_y, interp));
        }
    }
    Ok(ImageBuffer {
        height: img.height,
        width: img.width,
        data,
    })
}
