//! Real fields sampled on a [`Grid`] and their Fourier coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Real scalar samples at the grid points, row-major with axis 0 slowest.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients `c_k`, normalized so that `f(x) = sum_k c_k e^{i xi.x}`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

/// `2n` real components on a common grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

#[derive(Clone, Debug)]
pub struct VectorSpectrum {
    grid: Grid,
    components: Vec<Spectrum>,
}

/// Antisymmetric `2n x 2n` matrix field; only entries `i < j` are stored.
#[derive(Clone, Debug)]
pub struct SkewMatrixField {
    grid: Grid,
    upper: Vec<ScalarField>,
}

#[derive(Clone, Debug)]
pub struct SkewSpectrum {
    grid: Grid,
    upper: Vec<Spectrum>,
}

/// Position of entry `(i, j)`, `i < j`, in the packed upper triangle.
pub fn pair_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

pub fn pair_count(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

/// Iterates over `(i, j)` with `i < j` in packed order.
pub fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |i| (i + 1..dim).map(move |j| (i, j)))
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let h = grid.dx();
        let mut idx = vec![0usize; grid.dim()];
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat, &mut idx);
                for (xa, &ia) in x.iter_mut().zip(&idx) {
                    *xa = ia as f64 * h;
                }
                f(&x)
            })
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft().forward(&mut buf);
        Spectrum {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Box integral by the rectangle rule (exact for trigonometric polynomials
    /// resolved by the grid).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
        Ok(())
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Spectrum {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid("coefficient count does not match the grid"));
        }
        Ok(Spectrum {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Synthesizes grid values; the imaginary residue of a non-Hermitian
    /// spectrum is dropped.
    pub fn to_field(&self) -> ScalarField {
        let mut buf = self.coeffs.clone();
        self.grid.fft().inverse(&mut buf);
        ScalarField {
            grid: self.grid.clone(),
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Largest `|c_k - conj(c_{-k})|` over modes whose negative is on the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let npts = g.points();
        let mut idx = vec![0usize; g.dim()];
        let mut neg = vec![0usize; g.dim()];
        let mut worst = 0.0f64;
        for (flat, c) in self.coeffs.iter().enumerate() {
            g.unflatten(flat, &mut idx);
            for (n, &i) in neg.iter_mut().zip(&idx) {
                *n = (npts - i) % npts;
            }
            let other = self.coeffs[g.flatten(&neg)];
            worst = worst.max((c - other.conj()).norm());
        }
        worst
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    pub fn axpy(&mut self, a: f64, other: &Spectrum) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (c, d) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * d;
        }
        Ok(())
    }

    /// Multiplies every coefficient by `symbol(flat)`.
    pub fn apply(&mut self, mut symbol: impl FnMut(usize) -> Complex64) {
        for (flat, c) in self.coeffs.iter_mut().enumerate() {
            *c *= symbol(flat);
        }
    }

    /// Re of `sum_k c_k e^{i xi.x}` at an arbitrary point.
    pub fn evaluate_at(&self, x: &[f64]) -> f64 {
        self.evaluate_with(x, |_| Complex64::new(1.0, 0.0))
    }

    /// Re of `sum_k m(xi) c_k e^{i xi.x}` where `m` gets the per-axis
    /// frequencies of the mode.
    pub(crate) fn evaluate_with(&self, x: &[f64], mut m: impl FnMut(&[f64]) -> Complex64) -> f64 {
        let g = &self.grid;
        let d = g.dim();
        let npts = g.points();
        let scale = 2.0 * std::f64::consts::PI / g.length();
        let k = g.k_int_axis();
        let phases: Vec<Vec<Complex64>> = x
            .iter()
            .map(|&xa| {
                k.iter()
                    .map(|&ki| Complex64::from_polar(1.0, scale * ki as f64 * xa))
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; d];
        let mut xi = vec![0.0; d];
        let mut acc = Complex64::default();
        for c in &self.coeffs {
            if *c != Complex64::default() {
                let mut p = Complex64::new(1.0, 0.0);
                for a in 0..d {
                    p *= phases[a][idx[a]];
                    xi[a] = scale * k[idx[a]] as f64;
                }
                acc += c * p * m(&xi);
            }
            crate::grid::increment(&mut idx, npts);
        }
        acc.re
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            grid: grid.clone(),
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| Error::invalid("vector field needs components"))?
            .grid
            .clone();
        if components.len() != grid.dim() {
            return Err(Error::invalid(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            same_grid(&grid, &c.grid)?;
        }
        Ok(VectorField { grid, components })
    }

    /// Samples a vector-valued function; `f` writes all components.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let d = grid.dim();
        let mut comps = vec![vec![0.0; grid.len()]; d];
        let mut out = vec![0.0; d];
        let h = grid.dx();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        for flat in 0..grid.len() {
            grid.unflatten(flat, &mut idx);
            for (xa, &ia) in x.iter_mut().zip(&idx) {
                *xa = ia as f64 * h;
            }
            f(&x, &mut out);
            for a in 0..d {
                comps[a][flat] = out[a];
            }
        }
        VectorField {
            grid: grid.clone(),
            components: comps
                .into_iter()
                .map(|values| ScalarField {
                    grid: grid.clone(),
                    values,
                })
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }
    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }
    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn spectrum(&self) -> VectorSpectrum {
        VectorSpectrum {
            grid: self.grid.clone(),
            components: self.components.iter().map(|c| c.spectrum()).collect(),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.components.iter_mut().for_each(|c| c.scale(a));
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (c, o) in self.components.iter_mut().zip(&other.components) {
            c.axpy(a, o)?;
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Largest Euclidean length over grid points.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|p| {
                self.components
                    .iter()
                    .map(|c| c.values[p] * c.values[p])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn has_non_finite(&self) -> bool {
        self.components.iter().any(|c| c.has_non_finite())
    }

    /// Components at one grid point.
    pub fn at(&self, flat: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.values[flat]).collect()
    }
}

impl VectorSpectrum {
    pub fn zeros(grid: &Grid) -> Self {
        VectorSpectrum {
            grid: grid.clone(),
            components: (0..grid.dim()).map(|_| Spectrum::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<Spectrum>) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| Error::invalid("vector spectrum needs components"))?
            .grid
            .clone();
        if components.len() != grid.dim() {
            return Err(Error::invalid("component count does not match 2n"));
        }
        for c in &components {
            same_grid(&grid, &c.grid)?;
        }
        Ok(VectorSpectrum { grid, components })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn components(&self) -> &[Spectrum] {
        &self.components
    }
    pub fn components_mut(&mut self) -> &mut [Spectrum] {
        &mut self.components
    }
    pub fn component(&self, i: usize) -> &Spectrum {
        &self.components[i]
    }

    pub fn to_field(&self) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            components: self.components.iter().map(|c| c.to_field()).collect(),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.components.iter_mut().for_each(|c| c.scale(a));
    }

    pub fn axpy(&mut self, a: f64, other: &VectorSpectrum) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (c, o) in self.components.iter_mut().zip(&other.components) {
            c.axpy(a, o)?;
        }
        Ok(())
    }

    pub fn has_non_finite(&self) -> bool {
        self.components
            .iter()
            .any(|c| c.coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())))
    }
}

impl SkewMatrixField {
    pub fn zeros(grid: &Grid) -> Self {
        SkewMatrixField {
            grid: grid.clone(),
            upper: (0..pair_count(grid.dim()))
                .map(|_| ScalarField::zeros(grid))
                .collect(),
        }
    }

    pub fn from_upper(grid: &Grid, upper: Vec<ScalarField>) -> Result<Self> {
        if upper.len() != pair_count(grid.dim()) {
            return Err(Error::invalid("wrong number of upper-triangle entries"));
        }
        for u in &upper {
            same_grid(grid, &u.grid)?;
        }
        Ok(SkewMatrixField {
            grid: grid.clone(),
            upper,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn upper(&self) -> &[ScalarField] {
        &self.upper
    }
    pub fn upper_mut(&mut self) -> &mut [ScalarField] {
        &mut self.upper
    }

    /// Entry `(i, j)` as a field; diagonal entries are zero.
    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        let d = self.grid.dim();
        if i == j {
            ScalarField::zeros(&self.grid)
        } else if i < j {
            self.upper[pair_index(d, i, j)].clone()
        } else {
            self.upper[pair_index(d, j, i)].map(|v| -v)
        }
    }

    pub fn spectrum(&self) -> SkewSpectrum {
        SkewSpectrum {
            grid: self.grid.clone(),
            upper: self.upper.iter().map(|u| u.spectrum()).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &SkewMatrixField) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (c, o) in self.upper.iter_mut().zip(&other.upper) {
            c.axpy(a, o)?;
        }
        Ok(())
    }

    /// Largest pointwise Frobenius norm.
    pub fn max_frobenius(&self) -> f64 {
        (0..self.grid.len())
            .map(|p| 2.0 * self.upper.iter().map(|u| u.values[p] * u.values[p]).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }
}

impl SkewSpectrum {
    pub fn zeros(grid: &Grid) -> Self {
        SkewSpectrum {
            grid: grid.clone(),
            upper: (0..pair_count(grid.dim())).map(|_| Spectrum::zeros(grid)).collect(),
        }
    }

    pub fn from_upper(grid: &Grid, upper: Vec<Spectrum>) -> Result<Self> {
        if upper.len() != pair_count(grid.dim()) {
            return Err(Error::invalid("wrong number of upper-triangle entries"));
        }
        for u in &upper {
            same_grid(grid, &u.grid)?;
        }
        Ok(SkewSpectrum {
            grid: grid.clone(),
            upper,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn upper(&self) -> &[Spectrum] {
        &self.upper
    }
    pub fn upper_mut(&mut self) -> &mut [Spectrum] {
        &mut self.upper
    }

    /// Coefficient of entry `(i, j)` at one mode, with the antisymmetric sign.
    pub fn coeff(&self, i: usize, j: usize, flat: usize) -> Complex64 {
        let d = self.grid.dim();
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Complex64::default(),
            std::cmp::Ordering::Less => self.upper[pair_index(d, i, j)].coeffs[flat],
            std::cmp::Ordering::Greater => -self.upper[pair_index(d, j, i)].coeffs[flat],
        }
    }

    pub fn to_field(&self) -> SkewMatrixField {
        SkewMatrixField {
            grid: self.grid.clone(),
            upper: self.upper.iter().map(|u| u.to_field()).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &SkewSpectrum) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        for (c, o) in self.upper.iter_mut().zip(&other.upper) {
            c.axpy(a, o)?;
        }
        Ok(())
    }
}
