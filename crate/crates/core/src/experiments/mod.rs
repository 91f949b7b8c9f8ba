//! Scripted experiments: nonuniform dependence on initial data, the
//! vorticity form cross-check for `n = 1`, and probes of auxiliary estimates.

mod nonuniform;
mod oracle;
mod probes;

pub use nonuniform::{
    default_candidates, find_probe_direction, find_probe_direction_with, prepare_nonuniform,
    run_nonuniform, ExperimentReport, MeasuredConstants, NonuniformConfig, NonuniformParams,
    NonuniformRow, ProbeDirection, ProbeOptions,
};
pub use oracle::oracle_2d_solve;
pub use probes::{
    commutator_sweep, disjoint_ratio, disjoint_support_probe, disjoint_support_sweep,
    log_estimate_probe, log_estimate_sweep, lacunary_family, run_probes, CommutatorSweep,
    DisjointSweep, LogEstimate, LogSweep, ProbeReport,
};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{wrap_delta, Grid};

/// `exp(1/(q²−1))` for `q = |x − center|/radius < 1`, zero elsewhere.
///
/// Distances use the minimal image on the torus.
pub fn build_bump_potential(center: &[f64], radius: f64, grid: &Grid) -> Result<ScalarField> {
    let len = grid.length();
    if center.len() != grid.dim() {
        return Err(Error::invalid(format!(
            "center has {} coordinates, grid dimension is {}",
            center.len(),
            grid.dim()
        )));
    }
    if !(radius > 0.0 && radius < 0.25 * len) {
        return Err(Error::invalid(format!(
            "bump radius {radius} must lie in (0, L/4) with L = {len}"
        )));
    }
    Ok(ScalarField::from_fn(grid, |x| {
        let q2: f64 = x
            .iter()
            .zip(center)
            .map(|(&a, &c)| {
                let d = wrap_delta(a, c, len) / radius;
                d * d
            })
            .sum();
        if q2 < 1.0 {
            (1.0 / (q2 - 1.0)).exp()
        } else {
            0.0
        }
    }))
}

/// Minimal-image distance between two points of the box.
pub(crate) fn torus_distance(a: &[f64], b: &[f64], len: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| wrap_delta(x, y, len).powi(2))
        .sum::<f64>()
        .sqrt()
}
