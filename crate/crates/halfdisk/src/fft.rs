//! FFT-based [`Convolver`] for the Cauchy-Green operator on fine grids.

use std::sync::Arc;

use halfdisk_core::cauchy_green::Convolver;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Rows handed to one rayon task.
const ROWS_PER_TASK: usize = 16;

/// Linear convolution through a zero-padded 2-D FFT of size `m x m`,
/// `m >= 2 side - 1`, which is large enough that the offsets used never wrap.
#[derive(Clone)]
pub struct FftConvolver {
    side: usize,
    m: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver")
            .field("side", &self.side)
            .field("m", &self.m)
            .finish()
    }
}

fn transpose(data: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for c in 0..m {
            out[c * m + r] = data[r * m + c];
        }
    }
    out
}

fn rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], m: usize) {
    data.par_chunks_mut(m * ROWS_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
    debug_assert_eq!(data.len() % m, 0);
}

fn fft2(fft: &Arc<dyn Fft<f64>>, data: Vec<Complex64>, m: usize) -> Vec<Complex64> {
    let mut data = data;
    rows(fft, &mut data, m);
    let mut t = transpose(&data, m);
    rows(fft, &mut t, m);
    transpose(&t, m)
}

impl FftConvolver {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Padded transform size.
    pub fn padded(&self) -> usize {
        self.m
    }
}

impl Convolver for FftConvolver {
    fn from_kernel(side: usize, kernel: Vec<Complex64>) -> Self {
        let ks = 2 * side - 1;
        assert_eq!(kernel.len(), ks * ks);
        let m = ks.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut padded = vec![Complex64::new(0.0, 0.0); m * m];
        for dj in 0..ks {
            padded[dj * m..dj * m + ks].copy_from_slice(&kernel[dj * ks..(dj + 1) * ks]);
        }
        let kernel_hat = fft2(&forward, padded, m);
        Self {
            side,
            m,
            kernel_hat,
            forward,
            inverse,
        }
    }

    fn convolve(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (s, m) = (self.side, self.m);
        assert_eq!(f.len(), s * s);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        for j in 0..s {
            buf[j * m..j * m + s].copy_from_slice(&f[j * s..(j + 1) * s]);
        }
        let mut freq = fft2(&self.forward, buf, m);
        freq.par_iter_mut()
            .zip(self.kernel_hat.par_iter())
            .for_each(|(a, k)| *a *= *k);
        let back = fft2(&self.inverse, freq, m);
        let norm = 1.0 / (m * m) as f64;
        let mut out = Vec::with_capacity(s * s);
        for pj in 0..s {
            let row = (pj + s - 1) * m + s - 1;
            out.extend(back[row..row + s].iter().map(|v| v * norm));
        }
        out
    }
}
