//! Maps `x ↦ x + ψ(x)` of the periodic box, their composition and inversion,
//! and the geodesic formulation `φ_t = v`, `v_t = B(v∘φ^{-1})∘φ`.
//!
//! Displacements are lifted: a map that pushes points across the seam
//! keeps a displacement larger than the box rather than wrapping it.

use crate::error::{Error, Result};
use crate::eulerian::step_count;
use crate::field::{ScalarField, Spectrum, VectorField, VectorSpectrum};
use crate::grid::Grid;
use crate::interp::{InterpOptions, Interpolator};
use crate::symplectic::{Kinematics, SymplecticMatrix};

#[derive(Clone, Debug)]
pub struct DiffeoMap {
    displacement: VectorField,
}

impl DiffeoMap {
    pub fn identity(grid: &Grid) -> Self {
        DiffeoMap {
            displacement: VectorField::zeros(grid),
        }
    }

    pub fn from_displacement(displacement: VectorField) -> Self {
        DiffeoMap { displacement }
    }

    /// `x ↦ x + a`.
    pub fn translation(grid: &Grid, a: &[f64]) -> Self {
        DiffeoMap {
            displacement: VectorField::from_fn(grid, |_, o| o.copy_from_slice(a)),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.displacement.grid()
    }

    pub fn displacement(&self) -> &VectorField {
        &self.displacement
    }

    pub fn into_displacement(self) -> VectorField {
        self.displacement
    }

    /// Image of grid point `flat`.
    pub fn image(&self, flat: usize) -> Vec<f64> {
        let mut x = self.grid().coords(flat);
        for (xa, c) in x.iter_mut().zip(self.displacement.components()) {
            *xa += c.values()[flat];
        }
        x
    }

    /// `‖φ − χ‖` in grid max-norm on displacements.
    pub fn max_distance(&self, other: &DiffeoMap) -> Result<f64> {
        Ok(self.displacement.sub(&other.displacement)?.max_abs())
    }

    /// Jacobian `I + Dψ` at every grid point, row-major `d × d`.
    pub fn jacobians(&self) -> Vec<Vec<f64>> {
        let grid = self.grid();
        let d = grid.dim();
        let spec = self.displacement.spectrum();
        let mut out = vec![vec![0.0; d * d]; grid.len()];
        for i in 0..d {
            for j in 0..d {
                let dij = spec.component(i).derivative(j).unwrap().to_field();
                for (m, v) in out.iter_mut().zip(dij.values()) {
                    m[i * d + j] = v + if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }

    /// `det(dφ)` at every grid point.
    pub fn jacobian_determinant(&self) -> ScalarField {
        let d = self.grid().dim();
        let vals = self.jacobians().iter().map(|m| determinant(m, d)).collect();
        ScalarField::from_values(self.grid(), vals).unwrap()
    }

    /// Max over grid points of the spectral norm of `dφ = I + Dψ`.
    pub fn lipschitz(&self) -> f64 {
        let d = self.grid().dim();
        self.jacobians()
            .iter()
            .map(|m| spectral_norm(m, d))
            .fold(0.0, f64::max)
    }

    /// Max over grid points of the spectral norm of `Dψ`.
    pub fn displacement_lipschitz(&self) -> f64 {
        let d = self.grid().dim();
        self.jacobians()
            .iter()
            .map(|m| {
                let mut a = m.clone();
                for i in 0..d {
                    a[i * d + i] -= 1.0;
                }
                spectral_norm(&a, d)
            })
            .fold(0.0, f64::max)
    }
}

fn determinant(m: &[f64], d: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for c in 0..d {
        let piv = (c..d)
            .max_by(|&x, &y| a[x * d + c].abs().total_cmp(&a[y * d + c].abs()))
            .unwrap();
        if a[piv * d + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..d {
                a.swap(piv * d + k, c * d + k);
            }
            det = -det;
        }
        det *= a[c * d + c];
        for r in c + 1..d {
            let f = a[r * d + c] / a[c * d + c];
            for k in c..d {
                a[r * d + k] -= f * a[c * d + k];
            }
        }
    }
    det
}

/// Largest singular value by power iteration on `AᵀA`.
fn spectral_norm(a: &[f64], d: usize) -> f64 {
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return 0.0;
    }
    let mut ata = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            ata[i * d + j] = (0..d).map(|k| a[k * d + i] * a[k * d + j]).sum();
        }
    }
    let mut x = vec![1.0; d];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let y: Vec<f64> = (0..d).map(|i| (0..d).map(|j| ata[i * d + j] * x[j]).sum()).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if (next - lambda).abs() <= 1e-14 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt().min(frob)
}

/// Evaluates the spectra at the images of `phi`.
pub fn compose_spectra(spectra: &[&Spectrum], phi: &DiffeoMap, opts: InterpOptions) -> Vec<ScalarField> {
    let grid = phi.grid();
    let it = Interpolator::new(spectra, opts);
    let mut out = vec![vec![0.0; grid.len()]; spectra.len()];
    let mut buf = vec![0.0; spectra.len()];
    for flat in 0..grid.len() {
        it.eval(&phi.image(flat), &mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            o[flat] = *b;
        }
    }
    out.into_iter()
        .map(|v| ScalarField::from_values(grid, v).unwrap())
        .collect()
}

pub fn compose_scalar(f: &ScalarField, phi: &DiffeoMap) -> ScalarField {
    compose_scalar_with(f, phi, InterpOptions::default())
}

pub fn compose_scalar_with(f: &ScalarField, phi: &DiffeoMap, opts: InterpOptions) -> ScalarField {
    compose_spectra(&[&f.spectrum()], phi, opts).pop().unwrap()
}

pub fn compose(f: &VectorField, phi: &DiffeoMap) -> VectorField {
    compose_with(f, phi, InterpOptions::default())
}

pub fn compose_with(f: &VectorField, phi: &DiffeoMap, opts: InterpOptions) -> VectorField {
    compose_spectrum(&f.spectrum(), phi, opts)
}

pub fn compose_spectrum(f: &VectorSpectrum, phi: &DiffeoMap, opts: InterpOptions) -> VectorField {
    let refs: Vec<&Spectrum> = f.components().iter().collect();
    VectorField::from_components(compose_spectra(&refs, phi, opts)).unwrap()
}

/// Settings for [`invert`].
#[derive(Clone, Copy, Debug)]
pub struct InversionOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub interp: InterpOptions,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tol: 1e-10,
            max_iter: 200,
            interp: InterpOptions::default(),
        }
    }
}

/// `φ^{-1}` by the fixed point `χ_{k+1} = −ψ∘(id + χ_k)`.
pub fn invert(phi: &DiffeoMap, tol: f64, max_iter: usize) -> Result<DiffeoMap> {
    invert_from(
        phi,
        None,
        &InversionOptions {
            tol,
            max_iter,
            ..InversionOptions::default()
        },
    )
}

/// As [`invert`], starting from `guess` when given.
pub fn invert_from(phi: &DiffeoMap, guess: Option<&DiffeoMap>, opts: &InversionOptions) -> Result<DiffeoMap> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("inversion needs tol > 0 and max_iter > 0"));
    }
    let lip = phi.displacement_lipschitz();
    if !(lip < 1.0) {
        return Err(Error::NotContractive { lipschitz: lip });
    }
    let grid = phi.grid().clone();
    let d = grid.dim();
    let spec = phi.displacement.spectrum();
    let refs: Vec<&Spectrum> = spec.components().iter().collect();
    let it = Interpolator::new(&refs, opts.interp);
    let mut chi: Vec<Vec<f64>> = match guess {
        Some(g) => g.displacement.components().iter().map(|c| c.values().to_vec()).collect(),
        None => phi
            .displacement
            .components()
            .iter()
            .map(|c| c.values().iter().map(|v| -v).collect())
            .collect(),
    };
    let mut x = vec![0.0; d];
    let mut buf = vec![0.0; d];
    let mut update = f64::INFINITY;
    for _ in 0..opts.max_iter {
        update = 0.0;
        for flat in 0..grid.len() {
            let base = grid.coords(flat);
            for a in 0..d {
                x[a] = base[a] + chi[a][flat];
            }
            it.eval(&x, &mut buf);
            for a in 0..d {
                let next = -buf[a];
                update = f64::max(update, (next - chi[a][flat]).abs());
                chi[a][flat] = next;
            }
        }
        if !update.is_finite() {
            break;
        }
        if update < opts.tol {
            let comps = chi
                .into_iter()
                .map(|v| ScalarField::from_values(&grid, v).unwrap())
                .collect();
            return Ok(DiffeoMap {
                displacement: VectorField::from_components(comps)?,
            });
        }
    }
    Err(Error::InversionFailed {
        iterations: opts.max_iter,
        update,
    })
}

/// `φ∘χ`: displacement `ψ_χ + ψ_φ∘χ`.
pub fn compose_maps(phi: &DiffeoMap, chi: &DiffeoMap, opts: InterpOptions) -> DiffeoMap {
    let mut disp = compose_with(&phi.displacement, chi, opts);
    disp.axpy(1.0, &chi.displacement).unwrap();
    DiffeoMap { displacement: disp }
}

/// L² norm over the box of the Frobenius norm of `(dφ)ᵀω dφ − ω`.
pub fn symplectic_residual(phi: &DiffeoMap) -> f64 {
    let grid = phi.grid();
    let d = grid.dim();
    let om = SymplecticMatrix { dim: d };
    let sum: f64 = phi
        .jacobians()
        .iter()
        .map(|j| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    let mut v = -om.entry(a, b);
                    for k in 0..d {
                        let l = k ^ 1;
                        v += j[k * d + a] * om.entry(k, l) * j[l * d + b];
                    }
                    s += v * v;
                }
            }
            s
        })
        .sum();
    (sum * grid.cell_volume()).sqrt()
}

#[derive(Clone, Debug)]
pub struct GeodesicOptions {
    pub cutoff_radius: f64,
    pub inversion: InversionOptions,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            cutoff_radius: 1.0,
            inversion: InversionOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicState {
    pub t: f64,
    pub phi: DiffeoMap,
    pub v: VectorField,
}

/// `F(φ, v) = B(v∘φ^{-1})∘φ`; also returns `φ^{-1}` for warm starts.
fn spray(
    phi: &DiffeoMap,
    v: &VectorField,
    opts: &GeodesicOptions,
    guess: Option<&DiffeoMap>,
) -> Result<(VectorField, DiffeoMap)> {
    let inv = invert_from(phi, guess, &opts.inversion)?;
    let u = compose_with(v, &inv, opts.inversion.interp);
    let b = Kinematics::new(&u.spectrum()).b_operator(opts.cutoff_radius);
    Ok((compose_spectrum(&b, phi, opts.inversion.interp), inv))
}

/// `(dφ/dt, dv/dt) = (v, F(φ, v))`.
pub fn geodesic_rhs(phi: &DiffeoMap, v: &VectorField, cutoff_radius: f64) -> Result<(VectorField, VectorField)> {
    let opts = GeodesicOptions {
        cutoff_radius,
        ..GeodesicOptions::default()
    };
    let (f, _) = spray(phi, v, &opts, None)?;
    Ok((v.clone(), f))
}

fn shifted(base: &VectorField, a: f64, k: &VectorField) -> VectorField {
    let mut out = base.clone();
    out.axpy(a, k).unwrap();
    out
}

/// RK4 on `(ψ, v)` from `(id, u0)`.
pub fn geodesic_integrate(u0: &VectorField, t_final: f64, dt: f64, opts: &GeodesicOptions) -> Result<GeodesicState> {
    geodesic_integrate_with(u0, t_final, dt, opts, |_| {})
}

/// As [`geodesic_integrate`], calling `observer` after every step.
pub fn geodesic_integrate_with(
    u0: &VectorField,
    t_final: f64,
    dt: f64,
    opts: &GeodesicOptions,
    mut observer: impl FnMut(&GeodesicState),
) -> Result<GeodesicState> {
    let steps = step_count(t_final, dt)?;
    let grid = u0.grid();
    let mut psi = VectorField::zeros(grid);
    let mut v = u0.clone();
    let mut inv: Option<DiffeoMap> = None;
    let fail = |t: f64, e: Error| match e {
        Error::DiscretizationFailure { .. } | Error::NotContractive { .. } | Error::InversionFailed { .. } => e,
        other => Error::DiscretizationFailure {
            t,
            reason: other.to_string(),
        },
    };
    for n in 0..steps {
        let t = n as f64 * dt;
        let map = |p: &VectorField| DiffeoMap::from_displacement(p.clone());
        let (f1, i1) = spray(&map(&psi), &v, opts, inv.as_ref()).map_err(|e| fail(t, e))?;
        let p2 = shifted(&psi, 0.5 * dt, &v);
        let v2 = shifted(&v, 0.5 * dt, &f1);
        let (f2, i2) = spray(&map(&p2), &v2, opts, Some(&i1)).map_err(|e| fail(t, e))?;
        let p3 = shifted(&psi, 0.5 * dt, &v2);
        let v3 = shifted(&v, 0.5 * dt, &f2);
        let (f3, _) = spray(&map(&p3), &v3, opts, Some(&i2)).map_err(|e| fail(t, e))?;
        let p4 = shifted(&psi, dt, &v3);
        let v4 = shifted(&v, dt, &f3);
        let (f4, i4) = spray(&map(&p4), &v4, opts, Some(&i2)).map_err(|e| fail(t, e))?;
        for (k, w) in [(&v, 1.0), (&v2, 2.0), (&v3, 2.0), (&v4, 1.0)] {
            psi.axpy(w * dt / 6.0, k).unwrap();
        }
        for (k, w) in [(&f1, 1.0), (&f2, 2.0), (&f3, 2.0), (&f4, 1.0)] {
            v.axpy(w * dt / 6.0, k).unwrap();
        }
        inv = Some(i4);
        if psi.has_non_finite() || v.has_non_finite() {
            return Err(Error::DiscretizationFailure {
                t: t + dt,
                reason: "non-finite geodesic state".into(),
            });
        }
        observer(&GeodesicState {
            t: (n + 1) as f64 * dt,
            phi: map(&psi),
            v: v.clone(),
        });
    }
    Ok(GeodesicState {
        t: t_final,
        phi: DiffeoMap::from_displacement(psi),
        v,
    })
}

/// `exp(u0) = φ(1; u0)`.
pub fn exp_map(u0: &VectorField, dt: f64, opts: &GeodesicOptions) -> Result<DiffeoMap> {
    Ok(geodesic_integrate(u0, 1.0, dt, opts)?.phi)
}

/// Eulerian velocity `v∘φ^{-1}` of a geodesic state.
pub fn eulerian_velocity(state: &GeodesicState, opts: &GeodesicOptions) -> Result<VectorField> {
    let inv = invert_from(&state.phi, None, &opts.inversion)?;
    Ok(compose_with(&state.v, &inv, opts.inversion.interp))
}

/// Flow map of a velocity history sampled every `dt` from `t = 0`:
/// RK4 for `φ_t = u(t)∘φ` with cubic Lagrange interpolation in time.
pub fn flow_from_velocity(trajectory: &[VectorField], dt: f64) -> Result<DiffeoMap> {
    flow_from_velocity_with(trajectory, dt, InterpOptions::default())
}

pub fn flow_from_velocity_with(trajectory: &[VectorField], dt: f64, opts: InterpOptions) -> Result<DiffeoMap> {
    if trajectory.is_empty() {
        return Err(Error::invalid("empty velocity trajectory"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let grid = trajectory[0].grid().clone();
    let spectra: Vec<VectorSpectrum> = trajectory.iter().map(|u| u.spectrum()).collect();
    let samples = spectra.len();
    let velocity_at = |t: f64| -> VectorSpectrum {
        if samples == 1 {
            return spectra[0].clone();
        }
        let s = t / dt;
        let width = samples.min(4);
        let first = ((s.floor() as i64) - 1).clamp(0, (samples - width) as i64) as usize;
        let nodes: Vec<usize> = (first..first + width).collect();
        let mut out = VectorSpectrum::zeros(&grid);
        for &j in &nodes {
            let w: f64 = nodes
                .iter()
                .filter(|&&l| l != j)
                .map(|&l| (s - l as f64) / (j as f64 - l as f64))
                .product();
            if w != 0.0 {
                out.axpy(w, &spectra[j]).unwrap();
            }
        }
        out
    };
    let mut psi = VectorField::zeros(&grid);
    let eval = |u: &VectorSpectrum, p: &VectorField| compose_spectrum(u, &DiffeoMap::from_displacement(p.clone()), opts);
    for n in 0..samples - 1 {
        let t = n as f64 * dt;
        let k1 = eval(&spectra[n], &psi);
        let mid = velocity_at(t + 0.5 * dt);
        let k2 = eval(&mid, &shifted(&psi, 0.5 * dt, &k1));
        let k3 = eval(&mid, &shifted(&psi, 0.5 * dt, &k2));
        let k4 = eval(&spectra[n + 1], &shifted(&psi, dt, &k3));
        for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
            psi.axpy(w * dt / 6.0, k).unwrap();
        }
        if psi.has_non_finite() {
            return Err(Error::DiscretizationFailure {
                t: t + dt,
                reason: "non-finite flow map".into(),
            });
        }
    }
    Ok(DiffeoMap::from_displacement(psi))
}
