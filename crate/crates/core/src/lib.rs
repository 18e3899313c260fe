//! Allocation-only core of the mitoforge toolkit.
//!
//! - [`imaging`]: RGB raster, letterboxing, photometric jitter, rotation
//! - [`fisheye`]: radial lens warp
//! - [`fda`]: Fourier domain adaptation (amplitude swap, source phase kept)
//! - [`pipeline`]: seeded augmentation chain, group-weighted sampler, split
//! - [`lora`]: Q/V low-rank adapters on a toy attention classifier
//! - [`ensemble`]: balanced accuracy and greedy ensemble selection
//!
//! Nothing here touches the filesystem; file formats and the CLI live in the
//! `mitoforge` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ensemble;
pub mod error;
pub mod fda;
pub mod fft;
pub mod fisheye;
pub mod imaging;
pub mod lora;
pub use matrix::Matrix;
pub mod matrix;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
