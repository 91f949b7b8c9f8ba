//! Fourier multipliers and Sobolev/Lebesgue norms.
//!
//! Axes are 0-based. First derivatives zero the Nyquist mode of the
//! differentiated axis (its symbol is not real-valued on the grid); the
//! Laplacian keeps it. `Δ^{-1}`, `(−Δ)^{-1/2}` and the Riesz transforms
//! send the zero mode to zero.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SkewMatrixField, Spectrum, VectorField, VectorSpectrum};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

impl Spectrum {
    /// `∂_axis` in place.
    pub fn differentiate(&mut self, axis: usize) -> Result<()> {
        self.grid().check_axis(axis)?;
        let grid = self.grid().clone();
        let c = self.coeffs_mut();
        grid.for_each_axis_freq(axis, |flat, xi| c[flat] *= I * xi);
        Ok(())
    }

    pub fn derivative(&self, axis: usize) -> Result<Spectrum> {
        let mut out = self.clone();
        out.differentiate(axis)?;
        Ok(out)
    }

    pub fn laplacian(&self) -> Spectrum {
        let mut out = self.clone();
        let grid = out.grid().clone();
        let xi_sq = grid.xi_sq();
        out.apply(|k| Complex64::new(-xi_sq[k], 0.0));
        out
    }

    pub fn inverse_laplacian(&self) -> Spectrum {
        let mut out = self.clone();
        let grid = out.grid().clone();
        let xi_sq = grid.xi_sq();
        out.apply(|k| {
            if xi_sq[k] == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(-1.0 / xi_sq[k], 0.0)
            }
        });
        out
    }

    /// `(−Δ)^{α}`; for `α < 0` the zero mode is sent to zero.
    pub fn neg_laplacian_power(&self, alpha: f64) -> Spectrum {
        let mut out = self.clone();
        let grid = out.grid().clone();
        let xi_sq = grid.xi_sq();
        out.apply(|k| {
            if xi_sq[k] == 0.0 {
                Complex64::new(if alpha == 0.0 { 1.0 } else { 0.0 }, 0.0)
            } else {
                Complex64::new(xi_sq[k].powf(alpha), 0.0)
            }
        });
        out
    }

    pub fn riesz(&self, axis: usize) -> Result<Spectrum> {
        let mut out = self.neg_laplacian_power(-0.5);
        out.differentiate(axis)?;
        Ok(out)
    }

    /// `J^s`, symbol `(1+|ξ|²)^{s/2}`.
    pub fn bessel_potential(&self, s: f64) -> Spectrum {
        let mut out = self.clone();
        let grid = out.grid().clone();
        let xi_sq = grid.xi_sq();
        out.apply(|k| Complex64::new((1.0 + xi_sq[k]).powf(0.5 * s), 0.0));
        out
    }

    /// Keeps `|ξ| ≤ radius`.
    pub fn ball_cutoff(&self, radius: f64) -> Result<Spectrum> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("cutoff radius must be positive, got {radius}")));
        }
        let mut out = self.clone();
        let grid = out.grid().clone();
        let xi_sq = grid.xi_sq();
        let r2 = radius * radius;
        out.apply(|k| Complex64::new(if xi_sq[k] <= r2 { 1.0 } else { 0.0 }, 0.0));
        Ok(out)
    }

    /// Two-thirds rule truncation in place.
    pub fn dealias(&mut self) {
        let grid = self.grid().clone();
        let keep = grid.retained();
        for (c, &k) in self.coeffs_mut().iter_mut().zip(keep) {
            if !k {
                *c = Complex64::default();
            }
        }
    }

    /// `‖f‖²_{H^s} = L^d Σ_k (1+|ξ|²)^s |c_k|²`.
    pub fn sobolev_norm_sq(&self, s: f64) -> Result<f64> {
        check_index(s)?;
        let grid = self.grid();
        let xi_sq = grid.xi_sq();
        let sum: f64 = self
            .coeffs()
            .iter()
            .zip(xi_sq)
            .map(|(c, &x)| {
                let w = if s == 0.0 { 1.0 } else { (1.0 + x).powf(s) };
                w * c.norm_sqr()
            })
            .sum();
        Ok(sum * grid.volume())
    }

    /// Same trigonometric polynomial on another grid of the same box.
    ///
    /// Modes at or beyond either Nyquist frequency are dropped.
    pub fn resample(&self, target: &Grid) -> Result<Spectrum> {
        let src = self.grid();
        if src.n() != target.n() || src.length() != target.length() {
            return Err(Error::GridMismatch);
        }
        let half = (src.points().min(target.points()) / 2) as i64;
        let mut out = Spectrum::zeros(target);
        for (flat, c) in self.coeffs().iter().enumerate() {
            let k = src.wavenumber(flat);
            if k.iter().any(|&c| c.abs() >= half) {
                continue;
            }
            if let Some(j) = target.index_of_wavenumber(&k) {
                out.coeffs_mut()[j] = *c;
            }
        }
        Ok(out)
    }

    /// `⟨f, g⟩_{L²}` of the real fields represented by two spectra.
    pub fn l2_inner(&self, other: &Spectrum) -> f64 {
        let sum: f64 = self
            .coeffs()
            .iter()
            .zip(other.coeffs())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        sum * self.grid().volume()
    }
}

impl VectorSpectrum {
    pub fn resample(&self, target: &Grid) -> Result<VectorSpectrum> {
        let comps = self
            .components()
            .iter()
            .map(|c| c.resample(target))
            .collect::<Result<Vec<_>>>()?;
        VectorSpectrum::from_components(comps)
    }

    pub fn dealias(&mut self) {
        self.components_mut().iter_mut().for_each(|c| c.dealias());
    }

    pub fn sobolev_norm_sq(&self, s: f64) -> Result<f64> {
        self.components()
            .iter()
            .map(|c| c.sobolev_norm_sq(s))
            .sum()
    }

    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        Ok(self.sobolev_norm_sq(s)?.sqrt())
    }

    pub fn l2_inner(&self, other: &VectorSpectrum) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.l2_inner(b))
            .sum()
    }
}

fn check_index(s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("Sobolev index must be nonnegative, got {s}")))
    }
}

/// Sobolev and Lebesgue norms over the box.
pub trait Norms {
    /// `(Σ (1+|ξ|²)^s |f̂|²)^{1/2}` normalized so that `s = 0` is the box L² norm.
    fn sobolev_norm(&self, s: f64) -> Result<f64>;
    /// Grid-quadrature L² norm and grid max-abs.
    fn lebesgue_norms(&self) -> (f64, f64);
}

impl Norms for ScalarField {
    fn sobolev_norm(&self, s: f64) -> Result<f64> {
        check_index(s)?;
        Ok(self.spectrum().sobolev_norm_sq(s)?.sqrt())
    }

    fn lebesgue_norms(&self) -> (f64, f64) {
        let sq: f64 = self.values().iter().map(|v| v * v).sum();
        ((sq * self.grid().cell_volume()).sqrt(), self.max_abs())
    }
}

impl Norms for VectorField {
    fn sobolev_norm(&self, s: f64) -> Result<f64> {
        check_index(s)?;
        let mut total = 0.0;
        for c in self.components() {
            total += c.spectrum().sobolev_norm_sq(s)?;
        }
        Ok(total.sqrt())
    }

    fn lebesgue_norms(&self) -> (f64, f64) {
        let mut sq = 0.0;
        for c in self.components() {
            sq += c.lebesgue_norms().0.powi(2);
        }
        (sq.sqrt(), self.max_abs())
    }
}

impl SkewMatrixField {
    /// L² norm of the pointwise Frobenius norm (both triangles counted).
    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self
            .upper()
            .iter()
            .map(|u| u.values().iter().map(|v| v * v).sum::<f64>())
            .sum();
        (2.0 * sq * self.grid().cell_volume()).sqrt()
    }

    /// Frobenius L² inner product summing all `(i, j)` entries.
    pub fn l2_inner(&self, other: &SkewMatrixField) -> f64 {
        let sum: f64 = self
            .upper()
            .iter()
            .zip(other.upper())
            .map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        2.0 * sum * self.grid().cell_volume()
    }
}

/// `⟨f, g⟩_{L²}` by grid quadrature.
pub fn l2_inner(f: &ScalarField, g: &ScalarField) -> f64 {
    f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.grid().cell_volume()
}

/// `Σ_i ⟨u_i, w_i⟩_{L²}`.
pub fn l2_inner_vector(u: &VectorField, w: &VectorField) -> f64 {
    u.components()
        .iter()
        .zip(w.components())
        .map(|(a, b)| l2_inner(a, b))
        .sum()
}

pub fn sobolev_norm(f: &impl Norms, s: f64) -> Result<f64> {
    f.sobolev_norm(s)
}

pub fn lebesgue_norms(f: &impl Norms) -> (f64, f64) {
    f.lebesgue_norms()
}

pub fn partial_derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    Ok(f.spectrum().derivative(axis)?.to_field())
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.spectrum().laplacian().to_field()
}

pub fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    f.spectrum().inverse_laplacian().to_field()
}

pub fn riesz(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    Ok(f.spectrum().riesz(axis)?.to_field())
}

pub fn bessel_potential(f: &ScalarField, s: f64) -> ScalarField {
    f.spectrum().bessel_potential(s).to_field()
}

pub fn ball_cutoff(f: &ScalarField, radius: f64) -> Result<ScalarField> {
    Ok(f.spectrum().ball_cutoff(radius)?.to_field())
}

pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut s = f.spectrum();
    s.dealias();
    s.to_field()
}

pub fn dealias_vector(u: &VectorField) -> VectorField {
    let mut s = u.spectrum();
    s.dealias();
    s.to_field()
}

/// Mean value over the box.
pub fn mean(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() / f.values().len() as f64
}

/// `f` with its mean removed.
pub fn remove_mean(f: &ScalarField) -> ScalarField {
    let m = mean(f);
    f.map(|v| v - m)
}

/// Smooth radial partition of unity in frequency.
///
/// `θ ≡ 1` on `|ξ| ≤ 3/4` and `θ ≡ 0` on `|ξ| ≥ 4/3`; block `j ≥ 0` has
/// symbol `η(2^{-j}ξ) = θ(2^{-j-1}ξ) − θ(2^{-j}ξ)`, supported in
/// `3/4·2^j ≤ |ξ| ≤ 8/3·2^j`.
pub mod dyadic {
    pub const INNER: f64 = 0.75;
    pub const OUTER: f64 = 4.0 / 3.0;

    fn psi(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }

    /// `θ(r)` for `r = |ξ|`, a C^∞ step built from `exp(-1/t)`.
    pub fn theta(r: f64) -> f64 {
        let t = (OUTER - r) / (OUTER - INNER);
        if t >= 1.0 {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            let a = psi(t);
            a / (a + psi(1.0 - t))
        }
    }

    /// Symbol of block `j`; `j = -1` is the low block `θ`.
    pub fn block_symbol(j: i32, r: f64) -> f64 {
        if j < 0 {
            theta(r)
        } else {
            let s = (2f64).powi(-j);
            theta(0.5 * s * r) - theta(s * r)
        }
    }

    /// Number of `η` blocks needed so that the partition sums to one on
    /// every frequency up to `max_freq`.
    pub fn block_count(max_freq: f64) -> usize {
        let mut j = 0usize;
        while INNER * (2f64).powi(j as i32 + 1) < max_freq {
            j += 1;
        }
        j + 1
    }
}

/// `[θ(D)f, η(D)f, η(2^{-1}D)f, …]` covering every grid frequency.
pub fn dyadic_blocks(f: &ScalarField) -> Vec<ScalarField> {
    let spec = f.spectrum();
    let grid = f.grid().clone();
    let radii: Vec<f64> = grid.xi_sq().iter().map(|x| x.sqrt()).collect();
    let count = dyadic::block_count(grid.max_frequency());
    (-1..count as i32)
        .map(|j| {
            let mut b = spec.clone();
            b.apply(|k| Complex64::new(dyadic::block_symbol(j, radii[k]), 0.0));
            b.to_field()
        })
        .collect()
}
