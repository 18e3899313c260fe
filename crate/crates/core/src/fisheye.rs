//! Single-coefficient radial lens warp.
//!
//! Radii are normalized so that the edge-midpoint pixel centers sit at
//! `r = 1`; corners reach `r = √2`. An output pixel at radius `r_d` samples
//! the input at
//!
//! ```text
//! r_s = r_d · (1 + k·r_d²) / (1 + k)
//! ```
//!
//! along the same polar angle. `k > 0` magnifies the center, `k < 0` shrinks
//! it, `k = 0` is the identity, and the `r = 1` circle is fixed for every `k`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::imaging::{sample_bilinear, ImageBuffer, Interpolator};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FisheyeParams {
    pub k: f64,
    pub interp: Interpolator,
}

impl FisheyeParams {
    pub fn new(k: f64) -> Self {
        Self {
            k,
            interp: Interpolator::CLAMP,
        }
    }
}

/// Source radius for destination radius `r_d`.
#[inline]
pub fn source_radius(r_d: f64, k: f64) -> f64 {
    r_d * radial_scale(r_d, k)
}

/// `r_s / r_d`, finite at the center.
#[inline]
fn radial_scale(r_d: f64, k: f64) -> f64 {
    (1.0 + k * r_d * r_d) / (1.0 + k)
}

/// Applies the warp to a square image.
pub fn fisheye(img: &ImageBuffer, params: FisheyeParams) -> Result<ImageBuffer> {
    let k = params.k;
    if !(k > -1.0) || !k.is_finite() {
        return Err(invalid!("fisheye coefficient must satisfy 1 + k > 0, got {k}"));
    }
    if img.height() != img.width() {
        return Err(invalid!(
            "fisheye needs a square image, got {}x{}",
            img.height(),
            img.width()
        ));
    }
    let side = img.width();
    if side <= 1 {
        return Ok(img.clone());
    }
    let center = (side as f64 - 1.0) / 2.0;
    let half = center;
    let mut data = Vec::with_capacity(img.data().len());
    for r in 0..side {
        let dy = r as f64 - center;
        for c in 0..side {
            let dx = c as f64 - center;
            let r_d2 = (dx * dx + dy * dy) / (half * half);
            let s = (1.0 + k * r_d2) / (1.0 + k);
            let px = sample_bilinear(img, center + dx * s, center + dy * s, params.interp);
            data.extend_from_slice(&px);
        }
    }
    ImageBuffer::new(side, side, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pixel value encodes normalized radius, saturating at 1.
    fn radial_gradient(side: usize) -> ImageBuffer {
        let center = (side as f64 - 1.0) / 2.0;
        ImageBuffer::from_fn(side, side, |r, c| {
            let (dx, dy) = (c as f64 - center, r as f64 - center);
            let rad = libm::sqrt(dx * dx + dy * dy) / center;
            [rad.min(1.0); 3]
        })
    }

    #[test]
    fn zero_coefficient_is_bit_identical() {
        let img = ImageBuffer::from_fn(17, 17, |r, c| [(r * 17 + c) as f64 / 289.0, 0.2, 0.9]);
        assert_eq!(fisheye(&img, FisheyeParams::new(0.0)).unwrap(), img);
        let even = ImageBuffer::from_fn(16, 16, |r, c| [(r ^ c) as f64 / 16.0, 0.0, 1.0]);
        assert_eq!(fisheye(&even, FisheyeParams::new(0.0)).unwrap(), even);
    }

    #[test]
    fn center_pixel_is_fixed() {
        let img = ImageBuffer::from_fn(21, 21, |r, c| [((r * 3 + c * 7) % 11) as f64 / 10.0; 3]);
        for k in [-0.9, -0.3, 0.4, 0.9] {
            let out = fisheye(&img, FisheyeParams::new(k)).unwrap();
            assert_eq!(out.pixel(10, 10), img.pixel(10, 10));
        }
    }

    #[test]
    fn half_radius_sample_matches_closed_form() {
        let img = radial_gradient(101);
        let out = fisheye(&img, FisheyeParams::new(0.9)).unwrap();
        // (row 50, col 75): r_d = 25 / 50 = 0.5
        let expected = 0.5 * (1.0 + 0.9 * 0.25) / 1.9;
        assert!((expected - 0.322_368_421_f64).abs() < 1e-9);
        assert!((out.get(50, 75, 0) - expected).abs() < 2e-2);
        assert_eq!(source_radius(0.5, 0.9), expected);
    }

    #[test]
    fn unit_circle_is_fixed() {
        for k in [-0.9, -0.5, 0.5, 0.9] {
            assert!((source_radius(1.0, k) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let sq = ImageBuffer::filled(4, 4, 0.5);
        assert!(fisheye(&sq, FisheyeParams::new(-1.0)).is_err());
        assert!(fisheye(&sq, FisheyeParams::new(f64::NAN)).is_err());
        assert!(fisheye(&ImageBuffer::filled(4, 5, 0.5), FisheyeParams::new(0.1)).is_err());
    }
}
