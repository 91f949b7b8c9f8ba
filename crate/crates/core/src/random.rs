//! Seeded band-limited random fields.
//!
//! All generators draw from [`ChaCha8Rng`] so that a seed reproduces the same
//! field across platforms. Coefficients are uniform in the unit square,
//! weighted by `(1+|k|²)^{-decay/2}` on the two-thirds band, and the result
//! is rescaled to unit max-abs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{pairs, ScalarField, SkewMatrixField, Spectrum, VectorField};
use crate::grid::Grid;
use crate::symplectic::sympl_grad;

pub type FieldRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> FieldRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_spectrum(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> Spectrum {
    let kmax = band.min(grid.dealias_kmax()) as i64;
    let coeffs = (0..grid.len())
        .map(|flat| {
            let k = grid.wavenumber(flat);
            if k.iter().any(|c| c.abs() > kmax) {
                return Complex64::default();
            }
            let k2: i64 = k.iter().map(|c| c * c).sum();
            let w = (1.0 + k2 as f64).powf(-0.5 * decay);
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w
        })
        .collect();
    Spectrum::from_coeffs(grid, coeffs).expect("length matches grid")
}

/// Real part of a random band-limited trigonometric polynomial, before scaling.
fn raw_scalar(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> ScalarField {
    random_spectrum(grid, rng, decay, band).to_field()
}

fn normalize(f: &mut ScalarField) {
    let m = f.max_abs();
    if m > 0.0 {
        f.scale(1.0 / m);
    }
}

/// Random real scalar field with modes `|k_j| ≤ band` (capped at the dealiasing band).
pub fn scalar(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> ScalarField {
    let mut f = raw_scalar(grid, rng, decay, band);
    normalize(&mut f);
    f
}

/// Random vector field with independent components, unit max-abs overall.
pub fn vector(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> VectorField {
    let comps = (0..grid.dim())
        .map(|_| raw_scalar(grid, rng, decay, band))
        .collect();
    let mut u = VectorField::from_components(comps).expect("components share the grid");
    let m = u.max_abs();
    if m > 0.0 {
        u.scale(1.0 / m);
    }
    u
}

/// Random symplectic field `∇_ω H`, unit max-abs.
pub fn symplectic(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> VectorField {
    let h = raw_scalar(grid, rng, decay + 1.0, band);
    let mut u = sympl_grad(&h);
    let m = u.max_abs();
    if m > 0.0 {
        u.scale(1.0 / m);
    }
    u
}

/// Random skew matrix field, each stored entry at unit max-abs.
pub fn skew(grid: &Grid, rng: &mut FieldRng, decay: f64, band: usize) -> SkewMatrixField {
    let upper = pairs(grid.dim())
        .map(|_| scalar(grid, rng, decay, band))
        .collect();
    SkewMatrixField::from_upper(grid, upper).expect("entry count matches")
}
