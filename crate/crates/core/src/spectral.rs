//! Discrete Fourier transforms on the periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Cached forward/inverse plans for one grid. Forward is unnormalised, the
/// inverse divides by the number of cells so a round trip is the identity.
pub struct Spectral {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            dim: grid.dim(),
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.forward);
        self.apply(fft.as_ref(), data);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.inverse);
        self.apply(fft.as_ref(), data);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn apply(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n.pow(self.dim as u32));
        // Axis 0 is contiguous, so every row of length n is transformed at once.
        fft.process_with_scratch(data, &mut self.scratch);
        if self.dim == 2 {
            transpose_square(data, self.n);
            fft.process_with_scratch(data, &mut self.scratch);
            transpose_square(data, self.n);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for row in 0..n {
        for col in (row + 1)..n {
            data.swap(row * n + col, col * n + row);
        }
    }
}

/// Signed wavenumber of FFT bin `j` on a periodic domain of length `length`.
pub fn wavenumber(j: usize, n: usize, length: f64) -> f64 {
    let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * signed / length
}

/// Wavenumbers for every bin along one axis.
pub fn wavenumbers(grid: &GridSpec) -> Vec<f64> {
    (0..grid.n()).map(|j| wavenumber(j, grid.n(), grid.length())).collect()
}
