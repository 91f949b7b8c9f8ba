//! Periodic box geometry and the attached frequency lattice.
//!
//! A [`Grid`] is a cheaply clonable handle around the immutable
//! [`GridSpec`] plus everything precomputed from it: wavenumber tables,
//! the dealiasing mask and FFT plans. Fields keep a `Grid` and compare
//! grids by spec.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;

/// Geometry of the box `[0, L)^{2n}` sampled with `N` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half dimension; the box has `2n` axes.
    pub n: usize,
    /// Points per axis, even.
    pub points: usize,
    /// Box side length.
    pub length: f64,
}

impl GridSpec {
    pub fn new(n: usize, points: usize, length: f64) -> Result<Self> {
        let spec = GridSpec { n, points, length };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("half-dimension n must be positive"));
        }
        if self.points < 4 || self.points % 2 != 0 {
            return Err(Error::invalid(format!(
                "points per axis must be even and >= 4, got {}",
                self.points
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid(format!(
                "box length must be positive, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn total_points(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }
}

/// Shared handle to a grid and its precomputed tables.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

struct GridData {
    spec: GridSpec,
    dim: usize,
    total: usize,
    /// Signed integer wavenumber per axis position, in `[-N/2, N/2)`.
    k_int: Vec<i64>,
    /// Physical frequency `2 pi k / L` per axis position.
    xi_axis: Vec<f64>,
    /// Frequency per axis position used by first derivatives: Nyquist zeroed.
    dxi_axis: Vec<f64>,
    /// `|xi|^2` per flat spectral index.
    xi_sq: Vec<f64>,
    /// Two-thirds rule mask per flat spectral index.
    retained: Vec<bool>,
    fft: FftNd,
    padded: Mutex<Vec<(usize, Arc<FftNd>)>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Grid").field(&self.0.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim();
        let npts = spec.points;
        let total = spec.total_points();
        let half = (npts / 2) as i64;
        let k_int: Vec<i64> = (0..npts as i64)
            .map(|i| if i < half { i } else { i - npts as i64 })
            .collect();
        let scale = 2.0 * PI / spec.length;
        let xi_axis: Vec<f64> = k_int.iter().map(|&k| scale * k as f64).collect();
        let dxi_axis: Vec<f64> = k_int
            .iter()
            .map(|&k| if k == -half { 0.0 } else { scale * k as f64 })
            .collect();
        // Largest retained |k| per axis: 3K < N keeps quadratic aliases out.
        let kmax = ((npts - 1) / 3) as i64;
        let mut xi_sq = vec![0.0; total];
        let mut retained = vec![true; total];
        let mut idx = vec![0usize; dim];
        for flat in 0..total {
            let mut s = 0.0;
            let mut keep = true;
            for &i in &idx {
                s += xi_axis[i] * xi_axis[i];
                keep &= k_int[i].abs() <= kmax;
            }
            xi_sq[flat] = s;
            retained[flat] = keep;
            increment(&mut idx, npts);
        }
        let fft = FftNd::new(npts, dim);
        Ok(Grid(Arc::new(GridData {
            spec,
            dim,
            total,
            k_int,
            xi_axis,
            dxi_axis,
            xi_sq,
            retained,
            fft,
            padded: Mutex::new(Vec::new()),
        })))
    }

    /// Convenience constructor for `[0, 2 pi)^{2n}`.
    pub fn periodic(n: usize, points: usize) -> Result<Self> {
        Grid::new(GridSpec::new(n, points, 2.0 * PI)?)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.0.spec
    }
    pub fn n(&self) -> usize {
        self.0.spec.n
    }
    pub fn dim(&self) -> usize {
        self.0.dim
    }
    pub fn points(&self) -> usize {
        self.0.spec.points
    }
    pub fn length(&self) -> f64 {
        self.0.spec.length
    }
    /// Number of grid points (and of spectral coefficients).
    pub fn len(&self) -> usize {
        self.0.total
    }
    pub fn is_empty(&self) -> bool {
        self.0.total == 0
    }
    pub fn dx(&self) -> f64 {
        self.0.spec.length / self.0.spec.points as f64
    }
    /// Volume of the box.
    pub fn volume(&self) -> f64 {
        self.length().powi(self.dim() as i32)
    }
    /// Quadrature weight of a single grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    pub(crate) fn fft(&self) -> &FftNd {
        &self.0.fft
    }

    /// FFT plan for the same dimension with `factor * N` points per axis.
    pub(crate) fn padded_fft(&self, factor: usize) -> Arc<FftNd> {
        let mut cache = self.0.padded.lock().expect("fft cache poisoned");
        if let Some((_, plan)) = cache.iter().find(|(f, _)| *f == factor) {
            return plan.clone();
        }
        let plan = Arc::new(FftNd::new(factor * self.points(), self.dim()));
        cache.push((factor, plan.clone()));
        plan
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// Multi-index of a flat position, axis 0 slowest.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        let npts = self.points();
        for a in (0..self.dim()).rev() {
            out[a] = flat % npts;
            flat /= npts;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let npts = self.points();
        idx.iter().fold(0, |acc, &i| acc * npts + i)
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unflatten(flat, &mut idx);
        let h = self.dx();
        idx.iter().map(|&i| i as f64 * h).collect()
    }

    /// Integer lattice vector of a flat spectral index.
    pub fn wavenumber(&self, flat: usize) -> Vec<i64> {
        let mut idx = vec![0; self.dim()];
        self.unflatten(flat, &mut idx);
        idx.iter().map(|&i| self.0.k_int[i]).collect()
    }

    /// Frequency vector `xi = 2 pi k / L` of a flat spectral index.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unflatten(flat, &mut idx);
        idx.iter().map(|&i| self.0.xi_axis[i]).collect()
    }

    /// Flat spectral index of an integer lattice vector, if representable.
    pub fn index_of_wavenumber(&self, k: &[i64]) -> Option<usize> {
        let npts = self.points() as i64;
        let half = npts / 2;
        if k.len() != self.dim() || k.iter().any(|&c| c < -half || c >= half) {
            return None;
        }
        Some(
            k.iter()
                .fold(0usize, |acc, &c| acc * npts as usize + c.rem_euclid(npts) as usize),
        )
    }

    pub fn xi_sq(&self) -> &[f64] {
        &self.0.xi_sq
    }

    pub fn retained(&self) -> &[bool] {
        &self.0.retained
    }

    /// Largest retained |k| per axis under the two-thirds rule.
    pub fn dealias_kmax(&self) -> usize {
        (self.points() - 1) / 3
    }

    pub(crate) fn k_int_axis(&self) -> &[i64] {
        &self.0.k_int
    }

    /// Derivative frequency `xi_axis` for every flat index.
    pub(crate) fn for_each_axis_freq(&self, axis: usize, mut f: impl FnMut(usize, f64)) {
        let npts = self.points();
        let stride = npts.pow((self.dim() - 1 - axis) as u32);
        let dxi = &self.0.dxi_axis;
        for flat in 0..self.len() {
            f(flat, dxi[(flat / stride) % npts]);
        }
    }

    /// Largest frequency magnitude present on the grid.
    pub fn max_frequency(&self) -> f64 {
        self.0.xi_sq.iter().cloned().fold(0.0, f64::max).sqrt()
    }
}

pub(crate) fn increment(idx: &mut [usize], npts: usize) {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < npts {
            return;
        }
        idx[a] = 0;
    }
}

/// Minimal-image difference `a - b` on a circle of length `len`.
pub fn wrap_delta(a: f64, b: f64, len: f64) -> f64 {
    let d = (a - b).rem_euclid(len);
    if d > 0.5 * len {
        d - len
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_tiny_grids() {
        assert!(GridSpec::new(1, 7, 1.0).is_err());
        assert!(GridSpec::new(1, 2, 1.0).is_err());
        assert!(GridSpec::new(0, 8, 1.0).is_err());
        assert!(GridSpec::new(1, 8, -1.0).is_err());
    }

    #[test]
    fn frequency_lattice_is_antisymmetric() {
        let g = Grid::periodic(1, 8).unwrap();
        let zero = g.index_of_wavenumber(&[0, 0]).unwrap();
        assert_eq!(zero, 0);
        assert!(g.frequency(zero).iter().all(|&x| x == 0.0));
        for k in [[1, 2], [-3, 1], [3, -3]] {
            let p = g.index_of_wavenumber(&k).unwrap();
            let m = g.index_of_wavenumber(&[-k[0], -k[1]]).unwrap();
            let (fp, fm) = (g.frequency(p), g.frequency(m));
            for a in 0..2 {
                assert_eq!(fp[a], -fm[a]);
            }
        }
        assert!(g.index_of_wavenumber(&[4, 0]).is_none());
    }

    #[test]
    fn flatten_roundtrip() {
        let g = Grid::periodic(2, 6).unwrap();
        let mut idx = vec![0; 4];
        for flat in [0, 1, 37, 1295] {
            g.unflatten(flat, &mut idx);
            assert_eq!(g.flatten(&idx), flat);
        }
    }

    #[test]
    fn wrap_delta_is_minimal() {
        assert!((wrap_delta(0.1, 6.2, 2.0 * std::f64::consts::PI) - 0.1 - (2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
        assert_eq!(wrap_delta(1.0, 0.25, 4.0), 0.75);
    }
}
