//! Time integration of `u_t + (u·∇)u = B(u)` with RK4 in Fourier space.
//!
//! The state is kept as a two-thirds-truncated spectrum. Passive tracers
//! can ride along in the same RK4 stages; their velocities are exact
//! trigonometric evaluations of the stage fields.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{VectorField, VectorSpectrum};
use crate::symplectic::{p_spec, sympl_div_spec, Kinematics};

#[derive(Clone, Debug)]
pub struct EulerianState {
    pub t: f64,
    pub u: VectorField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
    pub p_residual: f64,
    pub sdiv_l2: f64,
    pub sdiv_linf: f64,
    pub bkm_integrand: f64,
    pub bkm_integral: f64,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Sobolev index of the `hs` diagnostic and the growth guard.
    pub s: f64,
    pub cutoff_radius: f64,
    /// Record diagnostics every this many steps (and at the final time).
    pub diag_every: usize,
    /// Re-project onto symplectic fields after every step.
    pub project_each_step: bool,
    /// Abort when `‖u‖_{H^s}` exceeds this multiple of its initial value.
    pub growth_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            s: 3.0,
            cutoff_radius: 1.0,
            diag_every: 1,
            project_each_step: false,
            growth_limit: 1e6,
        }
    }
}

/// Everything an integration produces.
#[derive(Clone, Debug)]
pub struct EulerianRun {
    pub state: EulerianState,
    pub log: Vec<DiagnosticsRecord>,
    /// Final tracer positions, lifted (not reduced modulo the box).
    pub tracers: Vec<Vec<f64>>,
    pub steps: usize,
    pub dt: f64,
}

/// `B(u) − (u·∇)u` on a spectrum, plus `max_x |∇u(x)|_F`.
pub(crate) fn rhs_spec(u: &VectorSpectrum, cutoff_radius: f64) -> (VectorSpectrum, f64) {
    let kin = Kinematics::new(u);
    let mut out = kin.b_operator(cutoff_radius);
    out.axpy(-1.0, &kin.advection()).unwrap();
    (out, gradient_max(&kin))
}

fn gradient_max(kin: &Kinematics) -> f64 {
    let dim = kin.grid().dim();
    let mut sq = vec![0.0; kin.grid().len()];
    for i in 0..dim {
        for j in 0..dim {
            for (s, v) in sq.iter_mut().zip(kin.jacobian(i, j)) {
                *s += v * v;
            }
        }
    }
    sq.into_iter().fold(0.0, f64::max).sqrt()
}

pub fn eulerian_rhs(u: &VectorField, cutoff_radius: f64) -> Result<VectorField> {
    if !(cutoff_radius > 0.0) {
        return Err(Error::invalid("cutoff radius must be positive"));
    }
    Ok(rhs_spec(&u.spectrum(), cutoff_radius).0.to_field())
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time step must be positive, got {dt}")))
    }
}

/// Number of steps of size `dt` covering `[0, T]`; `dt` must divide `T`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    check_dt(dt)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
    }
    let steps = (t_final / dt).round();
    if steps < 1.0 || (steps * dt - t_final).abs() > 1e-9 * t_final {
        return Err(Error::invalid(format!("time step {dt} does not divide T = {t_final}")));
    }
    Ok(steps as usize)
}

/// `T / ceil(T / (cfl · Δx / ‖u0‖_∞))`; the whole interval in one step for zero data.
pub fn cfl_time_step(u0: &VectorField, t_final: f64, cfl: f64) -> f64 {
    let umax = u0.max_abs();
    if umax == 0.0 {
        return t_final;
    }
    let raw = cfl * u0.grid().dx() / umax;
    t_final / (t_final / raw).ceil()
}

fn tracer_velocity(u: &VectorSpectrum, x: &[f64]) -> Vec<f64> {
    u.components().iter().map(|c| c.evaluate_at(x)).collect()
}

fn combine(base: &VectorSpectrum, a: f64, k: &VectorSpectrum) -> VectorSpectrum {
    let mut out = base.clone();
    out.axpy(a, k).unwrap();
    out
}

fn shift(points: &[Vec<f64>], a: f64, vel: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .zip(vel)
        .map(|(p, v)| p.iter().zip(v).map(|(x, w)| x + a * w).collect())
        .collect()
}

struct Stepper<'a> {
    opts: &'a SolverOptions,
}

impl Stepper<'_> {
    /// One RK4 step; returns the new spectrum, tracer positions and
    /// `max|∇u|` at the start of the step.
    fn step(
        &self,
        u: &VectorSpectrum,
        tracers: &[Vec<f64>],
        dt: f64,
    ) -> (VectorSpectrum, Vec<Vec<f64>>, f64) {
        let r = self.opts.cutoff_radius;
        let vel = |u: &VectorSpectrum, pts: &[Vec<f64>]| -> Vec<Vec<f64>> {
            pts.iter().map(|p| tracer_velocity(u, p)).collect()
        };
        let (k1, g0) = rhs_spec(u, r);
        let v1 = vel(u, tracers);
        let u2 = combine(u, 0.5 * dt, &k1);
        let x2 = shift(tracers, 0.5 * dt, &v1);
        let (k2, _) = rhs_spec(&u2, r);
        let v2 = vel(&u2, &x2);
        let u3 = combine(u, 0.5 * dt, &k2);
        let x3 = shift(tracers, 0.5 * dt, &v2);
        let (k3, _) = rhs_spec(&u3, r);
        let v3 = vel(&u3, &x3);
        let u4 = combine(u, dt, &k3);
        let x4 = shift(tracers, dt, &v3);
        let (k4, _) = rhs_spec(&u4, r);
        let v4 = vel(&u4, &x4);

        let mut next = u.clone();
        next.axpy(dt / 6.0, &k1).unwrap();
        next.axpy(dt / 3.0, &k2).unwrap();
        next.axpy(dt / 3.0, &k3).unwrap();
        next.axpy(dt / 6.0, &k4).unwrap();
        next.dealias();
        if self.opts.project_each_step {
            next = crate::symplectic::project_symplectic_spec(&next);
        }
        let moved = tracers
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.iter()
                    .enumerate()
                    .map(|(a, x)| x + dt / 6.0 * (v1[i][a] + 2.0 * v2[i][a] + 2.0 * v3[i][a] + v4[i][a]))
                    .collect()
            })
            .collect();
        (next, moved, g0)
    }
}

/// Advances `state` by one RK4 step of size `dt`.
pub fn rk4_step(state: &EulerianState, dt: f64, cutoff_radius: f64) -> Result<EulerianState> {
    check_dt(dt)?;
    let opts = SolverOptions {
        cutoff_radius,
        ..SolverOptions::default()
    };
    let mut u = state.u.spectrum();
    u.dealias();
    let (next, _, _) = Stepper { opts: &opts }.step(&u, &[], dt);
    let t = state.t + dt;
    if next.has_non_finite() {
        return Err(Error::DiscretizationFailure {
            t,
            reason: "non-finite velocity".into(),
        });
    }
    Ok(EulerianState {
        t,
        u: next.to_field(),
    })
}

fn diagnostics(u: &VectorSpectrum, t: f64, s: f64, bkm_integrand: f64, bkm_integral: f64) -> DiagnosticsRecord {
    let p = p_spec(u);
    let p_sq: f64 = p.upper().iter().map(|e| e.sobolev_norm_sq(0.0).unwrap()).sum();
    let sd = sympl_div_spec(u);
    DiagnosticsRecord {
        t,
        l2: u.sobolev_norm(0.0).unwrap(),
        hs: u.sobolev_norm(s).unwrap(),
        p_residual: (2.0 * p_sq).sqrt(),
        sdiv_l2: sd.sobolev_norm_sq(0.0).unwrap().sqrt(),
        sdiv_linf: sd.to_field().max_abs(),
        bkm_integrand,
        bkm_integral,
    }
}

/// Integrates to `t_final` with `dt` dividing it; returns the final state and the log.
pub fn integrate(
    u0: &VectorField,
    t_final: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(EulerianState, Vec<DiagnosticsRecord>)> {
    let run = integrate_with(u0, t_final, dt, opts, &[], |_, _| {})?;
    Ok((run.state, run.log))
}

/// Full integration driver. `observer` sees the truncated spectrum after
/// every step (and at `t = 0`).
pub fn integrate_with(
    u0: &VectorField,
    t_final: f64,
    dt: f64,
    opts: &SolverOptions,
    tracers: &[Vec<f64>],
    mut observer: impl FnMut(f64, &VectorSpectrum),
) -> Result<EulerianRun> {
    let steps = step_count(t_final, dt)?;
    if !(opts.cutoff_radius > 0.0) {
        return Err(Error::invalid("cutoff radius must be positive"));
    }
    let diag_every = opts.diag_every.max(1);
    let stepper = Stepper { opts };
    let mut u = u0.spectrum();
    u.dealias();
    let hs0 = u.sobolev_norm(opts.s)?;
    let mut points: Vec<Vec<f64>> = tracers.to_vec();
    let mut log = Vec::new();
    let mut bkm = 0.0;
    let mut pending: Option<usize> = Some(0);
    let mut last_g = 0.0;
    observer(0.0, &u);
    for n in 0..steps {
        let t = n as f64 * dt;
        let (next, moved, g) = stepper.step(&u, &points, dt);
        if n > 0 {
            bkm += 0.5 * dt * (last_g + g);
        }
        if pending == Some(n) {
            log.push(diagnostics(&u, t, opts.s, g, bkm));
            pending = None;
        }
        last_g = g;
        let t_next = (n + 1) as f64 * dt;
        if next.has_non_finite() {
            return Err(Error::DiscretizationFailure {
                t: t_next,
                reason: "non-finite velocity".into(),
            });
        }
        let hs = next.sobolev_norm(opts.s)?;
        if hs0 > 0.0 && hs > opts.growth_limit * hs0 {
            return Err(Error::DiscretizationFailure {
                t: t_next,
                reason: format!("H^s norm grew from {hs0:.3e} to {hs:.3e}"),
            });
        }
        u = next;
        points = moved;
        observer(t_next, &u);
        if (n + 1) % diag_every == 0 {
            pending = Some(n + 1);
        }
    }
    let g_final = gradient_max(&Kinematics::new(&u));
    bkm += 0.5 * dt * (last_g + g_final);
    log.push(diagnostics(&u, t_final, opts.s, g_final, bkm));
    Ok(EulerianRun {
        state: EulerianState {
            t: t_final,
            u: u.to_field(),
        },
        log,
        tracers: points,
        steps,
        dt,
    })
}

/// Writes the diagnostics log as CSV with a header row.
pub fn write_diagnostics_csv<W: Write>(log: &[DiagnosticsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in log {
        w.serialize(rec).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn step_count_requires_divisor() {
        assert_eq!(step_count(1.0, 0.25).unwrap(), 4);
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, -0.1).is_err());
        assert!(step_count(0.0, 0.1).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::periodic(1, 16).unwrap();
        let u0 = VectorField::zeros(&g);
        let (fin, log) = integrate(&u0, 1.0, 0.5, &SolverOptions::default()).unwrap();
        assert_eq!(fin.u.max_abs(), 0.0);
        assert_eq!(log.len(), 3);
        assert!(log.iter().all(|r| r.bkm_integral == 0.0));
    }

    #[test]
    fn diagnostics_csv_has_expected_header() {
        let g = Grid::periodic(1, 8).unwrap();
        let (_, log) = integrate(&VectorField::zeros(&g), 1.0, 1.0, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_diagnostics_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,l2,hs,p_residual,sdiv_l2,sdiv_linf,bkm_integrand,bkm_integral\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
