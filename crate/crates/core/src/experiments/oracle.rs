//! Classical 2D Euler in vorticity–stream form.
//!
//! `ζ_t + u·∇ζ = 0`, `u = ū + (−∂_2ψ, ∂_1ψ)` with `Δψ = ζ`, where `ū` is the
//! conserved mean velocity. RK4 on the two-thirds-truncated spectrum of `ζ`.

use crate::error::{Error, Result};
use crate::eulerian::step_count;
use crate::field::{ScalarField, Spectrum, VectorField};
use crate::spectral::mean;

struct Flow {
    mean: [f64; 2],
}

impl Flow {
    fn velocity(&self, zeta: &Spectrum) -> [ScalarField; 2] {
        let psi = zeta.inverse_laplacian();
        let mut u1 = psi.derivative(1).unwrap().to_field();
        u1.scale(-1.0);
        let u2 = psi.derivative(0).unwrap().to_field();
        let shift = |mut f: ScalarField, m: f64| {
            f.values_mut().iter_mut().for_each(|v| *v += m);
            f
        };
        [shift(u1, self.mean[0]), shift(u2, self.mean[1])]
    }

    /// `−T[u·∇ζ]`.
    fn rhs(&self, zeta: &Spectrum) -> Spectrum {
        let grid = zeta.grid().clone();
        let [u1, u2] = self.velocity(zeta);
        let z1 = zeta.derivative(0).unwrap().to_field();
        let z2 = zeta.derivative(1).unwrap().to_field();
        let vals = (0..grid.len())
            .map(|p| -(u1.values()[p] * z1.values()[p] + u2.values()[p] * z2.values()[p]))
            .collect();
        let mut out = ScalarField::from_values(&grid, vals).unwrap().spectrum();
        out.dealias();
        out
    }
}

fn stage(base: &Spectrum, a: f64, k: &Spectrum) -> Spectrum {
    let mut out = base.clone();
    out.axpy(a, k).unwrap();
    out
}

/// Velocity at time `t_final` from the vorticity–stream solver with step `dt`.
pub fn oracle_2d_solve(u0: &VectorField, t_final: f64, dt: f64) -> Result<VectorField> {
    let grid = u0.grid().clone();
    if grid.n() != 1 {
        return Err(Error::invalid("the vorticity oracle needs n = 1"));
    }
    let steps = step_count(t_final, dt)?;
    let mut us = u0.spectrum();
    us.dealias();
    let c = us.components();
    let mut div = c[0].derivative(0)?;
    div.axpy(1.0, &c[1].derivative(1)?)?;
    let dnorm = div.sobolev_norm_sq(0.0)?.sqrt();
    let gnorm = c[0].derivative(0)?.sobolev_norm_sq(0.0)?
        + c[0].derivative(1)?.sobolev_norm_sq(0.0)?
        + c[1].derivative(0)?.sobolev_norm_sq(0.0)?
        + c[1].derivative(1)?.sobolev_norm_sq(0.0)?;
    if dnorm > 1e-8 * gnorm.sqrt().max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!(
            "initial velocity is not divergence-free (‖div u‖ = {dnorm:.3e})"
        )));
    }
    let flow = Flow {
        mean: [mean(u0.component(0)), mean(u0.component(1))],
    };
    let mut zeta = c[1].derivative(0)?;
    zeta.axpy(-1.0, &c[0].derivative(1)?)?;
    for n in 0..steps {
        let k1 = flow.rhs(&zeta);
        let k2 = flow.rhs(&stage(&zeta, 0.5 * dt, &k1));
        let k3 = flow.rhs(&stage(&zeta, 0.5 * dt, &k2));
        let k4 = flow.rhs(&stage(&zeta, dt, &k3));
        zeta.axpy(dt / 6.0, &k1)?;
        zeta.axpy(dt / 3.0, &k2)?;
        zeta.axpy(dt / 3.0, &k3)?;
        zeta.axpy(dt / 6.0, &k4)?;
        if zeta.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::DiscretizationFailure {
                t: (n + 1) as f64 * dt,
                reason: "non-finite vorticity".into(),
            });
        }
    }
    let [u1, u2] = flow.velocity(&zeta);
    VectorField::from_components(vec![u1, u2])
}
