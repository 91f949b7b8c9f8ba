//! Multi-dimensional complex FFT on cubic grids, built from 1-d rustfft
//! plans applied axis by axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct FftNd {
    points: usize,
    dim: usize,
    total: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(points: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            points,
            dim,
            total: points.pow(dim as u32),
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `c_k = N^{-d} sum_x f(x) e^{-i k.x}` in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.total as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Unnormalized synthesis `f(x) = sum_k c_k e^{i k.x}` in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.total, "buffer does not match the grid");
        let n = self.points;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut lines = vec![Complex64::default(); self.total];
        for axis in (0..self.dim - 1).rev() {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = n * stride;
            for (blk, chunk) in data.chunks_mut(block).enumerate() {
                let out = &mut lines[blk * block..(blk + 1) * block];
                for k in 0..n {
                    let row = &chunk[k * stride..(k + 1) * stride];
                    for (i, v) in row.iter().enumerate() {
                        out[i * n + k] = *v;
                    }
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            for (blk, chunk) in data.chunks_mut(block).enumerate() {
                let src = &lines[blk * block..(blk + 1) * block];
                for k in 0..n {
                    let row = &mut chunk[k * stride..(k + 1) * stride];
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = src[i * n + k];
                    }
                }
            }
        }
    }
}
