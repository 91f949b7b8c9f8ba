//! Off-grid evaluation of band-limited fields: Fourier zero-padding onto a
//! finer grid followed by local tensor-product Lagrange interpolation.

use num_complex::Complex64;

use crate::field::Spectrum;
use crate::grid::Grid;

/// Refinement factor and stencil width of the interpolator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpOptions {
    /// Fine grid has `factor * N` points per axis.
    pub factor: usize,
    /// Lagrange stencil width per axis (even).
    pub stencil: usize,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            factor: 2,
            stencil: 6,
        }
    }
}

/// Samples of one or more fields on the refined grid.
pub struct Interpolator {
    dim: usize,
    fine: usize,
    h: f64,
    stencil: usize,
    offsets: Vec<i64>,
    denominators: Vec<f64>,
    values: Vec<Vec<f64>>,
}

/// Per-axis fine indices and weights of a coarse mode; Nyquist modes split in two.
fn padded_targets(k: i64, coarse: usize, fine: usize) -> ([(usize, f64); 2], usize) {
    let half = (coarse / 2) as i64;
    let m = fine as i64;
    if k == -half {
        ([((m - half) as usize, 0.5), (half as usize, 0.5)], 2)
    } else {
        ([(k.rem_euclid(m) as usize, 1.0), (0, 0.0)], 1)
    }
}

impl Interpolator {
    pub fn new(spectra: &[&Spectrum], opts: InterpOptions) -> Self {
        assert!(opts.stencil >= 2 && opts.stencil % 2 == 0, "stencil must be even");
        assert!(opts.factor >= 1, "refinement factor must be positive");
        let grid: Grid = spectra[0].grid().clone();
        let dim = grid.dim();
        let coarse = grid.points();
        let plan = grid.padded_fft(opts.factor);
        let fine = opts.factor * coarse;
        let k_axis = grid.k_int_axis();
        let values = spectra
            .iter()
            .map(|s| {
                let mut buf = vec![Complex64::default(); plan.total()];
                let mut idx = vec![0usize; dim];
                for (flat, c) in s.coeffs().iter().enumerate() {
                    if *c != Complex64::default() {
                        grid.unflatten(flat, &mut idx);
                        scatter(&mut buf, &idx, k_axis, coarse, fine, *c);
                    }
                }
                plan.inverse(&mut buf);
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect();
        let m = opts.stencil as i64;
        let offsets: Vec<i64> = (0..m).map(|j| j - (m / 2 - 1)).collect();
        let denominators = offsets
            .iter()
            .map(|&oj| {
                offsets
                    .iter()
                    .filter(|&&ol| ol != oj)
                    .map(|&ol| (oj - ol) as f64)
                    .product()
            })
            .collect();
        Interpolator {
            dim,
            fine,
            h: grid.length() / fine as f64,
            stencil: opts.stencil,
            offsets,
            denominators,
            values,
        }
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    /// Writes the value of every component at `x` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let m = self.stencil;
        let d = self.dim;
        let fine = self.fine as i64;
        let mut idx = [[0usize; 16]; 8];
        let mut wts = [[0.0f64; 16]; 8];
        for a in 0..d {
            let t = x[a] / self.h;
            let base = t.floor();
            let tau = t - base;
            let base = base as i64;
            for j in 0..m {
                let mut num = 1.0;
                for (l, &ol) in self.offsets.iter().enumerate() {
                    if l != j {
                        num *= tau - ol as f64;
                    }
                }
                wts[a][j] = num / self.denominators[j];
                idx[a][j] = (base + self.offsets[j]).rem_euclid(fine) as usize;
            }
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        if d == 2 {
            for i in 0..m {
                let row = idx[0][i] * self.fine;
                for j in 0..m {
                    let w = wts[0][i] * wts[1][j];
                    let p = row + idx[1][j];
                    for (o, v) in out.iter_mut().zip(&self.values) {
                        *o += w * v[p];
                    }
                }
            }
            return;
        }
        let mut pos = vec![0usize; d];
        loop {
            let mut w = 1.0;
            let mut p = 0usize;
            for a in 0..d {
                w *= wts[a][pos[a]];
                p = p * self.fine + idx[a][pos[a]];
            }
            for (o, v) in out.iter_mut().zip(&self.values) {
                *o += w * v[p];
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                pos[a] += 1;
                if pos[a] < m {
                    break;
                }
                pos[a] = 0;
            }
        }
    }
}

fn scatter(buf: &mut [Complex64], idx: &[usize], k_axis: &[i64], coarse: usize, fine: usize, c: Complex64) {
    let d = idx.len();
    let targets: Vec<([(usize, f64); 2], usize)> = idx
        .iter()
        .map(|&i| padded_targets(k_axis[i], coarse, fine))
        .collect();
    let mut choice = vec![0usize; d];
    loop {
        let mut p = 0usize;
        let mut w = 1.0;
        for a in 0..d {
            let (t, wt) = targets[a].0[choice[a]];
            p = p * fine + t;
            w *= wt;
        }
        buf[p] += c * w;
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            choice[a] += 1;
            if choice[a] < targets[a].1 {
                break;
            }
            choice[a] = 0;
        }
    }
}
