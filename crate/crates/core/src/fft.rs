//! Discrete Fourier transforms for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 Cooley-Tukey kernel; any
//! other length goes through Bluestein's chirp-z reformulation on a padded
//! power-of-two convolution. Forward transforms use `exp(-2πi jk/n)`;
//! inverse transforms are normalized by `1/n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        Self { len, twiddles }
    }

    /// Unnormalized in-place transform; `inverse` conjugates the twiddles.
    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let step = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut t = self.twiddles[k * step];
                    if inverse {
                        t = t.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * t;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    inner: Radix2,
    /// `exp(-iπ k² / n)` for k in 0..n
    chirp: Vec<Complex64>,
    /// Transform of the conjugate chirp, wrapped for circular convolution.
    kernel_fft: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let m = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp angle small and exact.
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                Complex64::from_polar(1.0, -PI * k2 / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.process(&mut kernel, false);
        Self {
            len,
            inner,
            chirp,
            kernel_fft: kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.len;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..self.len {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.process(&mut work, false);
        for (w, kf) in work.iter_mut().zip(&self.kernel_fft) {
            *w *= *kf;
        }
        self.inner.process(&mut work, true);
        let scale = 1.0 / m as f64;
        for k in 0..self.len {
            buf[k] = work[k] * scale * self.chirp[k];
        }
    }

    /// Unnormalized inverse via `IDFT(x) = conj(DFT(conj(x)))`.
    fn inverse(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        for v in buf.iter_mut() {
            *v = v.conj();
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// A reusable transform plan for one length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kernel: Kernel,
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let kernel = if len.is_power_of_two() || len == 0 {
            Kernel::Radix2(Radix2::new(len.max(1)))
        } else {
            Kernel::Bluestein(Bluestein::new(len))
        };
        Self { len, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kernel {
            Kernel::Radix2(k) => k.process(buf, false),
            Kernel::Bluestein(k) => k.forward(buf),
        }
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kernel {
            Kernel::Radix2(k) => k.process(buf, true),
            Kernel::Bluestein(k) => k.inverse(buf),
        }
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Row/column plans for a `height` x `width` grid stored row-major.
#[derive(Debug, Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    rows: FftPlan,
    cols: FftPlan,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            rows: FftPlan::new(width),
            cols: FftPlan::new(height),
        }
    }

    pub fn forward(&self, grid: &mut [Complex64]) {
        self.run(grid, false);
    }

    pub fn inverse(&self, grid: &mut [Complex64]) {
        self.run(grid, true);
    }

    fn run(&self, grid: &mut [Complex64], inverse: bool) {
        assert_eq!(grid.len(), self.height * self.width);
        for row in grid.chunks_exact_mut(self.width) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for c in 0..self.width {
            for r in 0..self.height {
                column[r] = grid[r * self.width + c];
            }
            if inverse {
                self.cols.inverse(&mut column);
            } else {
                self.cols.forward(&mut column);
            }
            for r in 0..self.height {
                grid[r * self.width + c] = column[r];
            }
        }
    }

    /// Forward transform of a real plane.
    pub fn forward_real(&self, plane: &[f64]) -> Vec<Complex64> {
        let mut grid: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut grid);
        grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let angle = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new(libm::sin(i as f64 * 0.37) + 0.1 * i as f64, libm::cos(i as f64 * 1.3)))
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for n in [1usize, 2, 3, 4, 5, 7, 8, 12, 16, 31, 32, 100] {
            let x = signal(n);
            let expected = naive_dft(&x);
            let mut got = x.clone();
            let plan = FftPlan::new(n);
            plan.forward(&mut got);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-9 * (n as f64), "n={n}: {a} vs {b}");
            }
            plan.inverse(&mut got);
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12 * (n as f64).max(1.0), "roundtrip n={n}");
            }
        }
    }

    #[test]
    fn two_d_roundtrip() {
        let (h, w) = (6, 10);
        let plane: Vec<f64> = (0..h * w).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let plan = Fft2::new(h, w);
        let mut grid = plan.forward_real(&plane);
        plan.inverse(&mut grid);
        for (a, b) in grid.iter().zip(&plane) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }
}
