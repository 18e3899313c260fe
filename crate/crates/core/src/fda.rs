//! Fourier domain adaptation: low-frequency amplitude swap with source phase.
//!
//! The swap window is the DC-centered rectangle of signed frequencies
//! `[-h, h] x [-w, w]` with `h = floor(beta·H/2)`, `w = floor(beta·W/2)`. The
//! window is closed under negation, and each bin is written together with its
//! conjugate mirror so the modified spectrum stays Hermitian and the inverse
//! transform is real up to rounding.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fft::Fft2;
use crate::imaging::{resize_pad_to, ImageBuffer, CHANNELS};

pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct FdaParams {
    pub beta: f64,
    pub target: ImageBuffer,
}

/// Half-extents of the swap window for a `height` x `width` spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapWindow {
    pub half_rows: usize,
    pub half_cols: usize,
}

impl SwapWindow {
    pub fn new(beta: f64, height: usize, width: usize) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            half_rows: libm::floor(beta * height as f64 / 2.0) as usize,
            half_cols: libm::floor(beta * width as f64 / 2.0) as usize,
        })
    }

    /// Whether unshifted bin `(u, v)` of an `height` x `width` spectrum is swapped.
    pub fn contains(&self, u: usize, v: usize, height: usize, width: usize) -> bool {
        signed_offset(u, height) <= self.half_rows && signed_offset(v, width) <= self.half_cols
    }
}

/// Distance of bin `i` from DC along an axis of length `n`, i.e. `min(i, n - i)`.
#[inline]
fn signed_offset(i: usize, n: usize) -> usize {
    i.min(n - i)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid!("beta must lie in [0, 1], got {beta}"));
    }
    Ok(())
}

/// Replaces amplitudes inside the window of `source` with those of `target`,
/// keeping the source phase. Both spectra are `height` x `width`, row-major.
pub fn swap_amplitude(
    source: &mut [Complex64],
    target: &[Complex64],
    height: usize,
    width: usize,
    window: SwapWindow,
) {
    let rows = window.half_rows.min(height / 2);
    let cols = window.half_cols.min(width / 2);
    let replace = |src: Complex64, tgt: Complex64| Complex64::from_polar(tgt.norm(), src.arg());
    // Negative row offsets are written as mirrors of the positive ones.
    for u in 0..=rows {
        for dv in -(cols as isize)..=(cols as isize) {
            let v = dv.rem_euclid(width as isize) as usize;
            let mu = (height - u) % height;
            let mv = (width - v) % width;
            let i = u * width + v;
            let mirror = mu * width + mv;
            let value = replace(source[i], target[i]);
            source[i] = value;
            source[mirror] = value.conj();
            if u == mu && v == mv {
                // self-conjugate bins (DC, Nyquist) must be real
                source[i] = Complex64::new(value.re, 0.0);
            }
        }
    }
}

/// Per-channel swap result before clamping into `[0, 1]`.
///
/// Returned as three `height * width` planes; the target must already match
/// the source dimensions.
pub fn fda_planes(source: &ImageBuffer, target: &ImageBuffer, beta: f64) -> Result<[Vec<f64>; 3]> {
    check_beta(beta)?;
    if source.is_empty() {
        return Err(invalid!("source image is empty"));
    }
    let (h, w) = (source.height(), source.width());
    if target.height() != h || target.width() != w {
        return Err(invalid!("target must be {h}x{w}"));
    }
    let window = SwapWindow::new(beta, h, w)?;
    let plan = Fft2::new(h, w);
    let mut planes: [Vec<f64>; 3] = Default::default();
    for (c, plane) in planes.iter_mut().enumerate().take(CHANNELS) {
        let mut spectrum = plan.forward_real(&source.channel(c));
        let target_spectrum = plan.forward_real(&target.channel(c));
        swap_amplitude(&mut spectrum, &target_spectrum, h, w, window);
        plan.inverse(&mut spectrum);
        *plane = spectrum.iter().map(|z| z.re).collect();
    }
    Ok(planes)
}

/// Fourier domain adaptation of `source` toward `params.target`.
///
/// The target is letterboxed to the source size first; the result is the real
/// part of the inverse transform clamped into `[0, 1]`.
pub fn fda_transfer(source: &ImageBuffer, params: &FdaParams) -> Result<ImageBuffer> {
    check_beta(params.beta)?;
    if source.is_empty() {
        return Err(invalid!("source image is empty"));
    }
    let target = resize_pad_to(&params.target, source.height(), source.width())?;
    let [r, g, b] = fda_planes(source, &target, params.beta)?;
    Ok(ImageBuffer::from_planes(source.height(), source.width(), [&r, &g, &b]))
}
