//! Numerical probes of three auxiliary estimates: the Riesz commutator bound,
//! the disjoint-support norm inequality and the logarithmic `L^∞` bound.
//!
//! Each sweep fits the smallest constant that works over the whole sweep and
//! over its first half; `stability` is their ratio.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::random;
use crate::spectral::Norms;
use crate::symplectic::riesz_commutator_probe;

use super::build_bump_potential;

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorSweep {
    pub wavenumbers: Vec<usize>,
    pub ratios: Vec<f64>,
    pub constant: f64,
    pub constant_half: f64,
    pub stability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointSweep {
    pub sigma: f64,
    pub distances: Vec<f64>,
    pub ratios: Vec<f64>,
    pub constant: f64,
    pub stability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogEstimate {
    /// `‖R_1R_2 f‖_{L^∞}`.
    pub lhs: f64,
    /// `1`, `‖f‖_{L²}`, `‖f‖_{L^∞}`, `‖f‖_{L^∞} ln(1+‖f‖_{H^{s−1}})`.
    pub rhs_terms: [f64; 4],
}

impl LogEstimate {
    /// Smallest `C` with `lhs ≤ C · Σ rhs_terms`.
    pub fn constant(&self) -> f64 {
        self.lhs / self.rhs_terms.iter().sum::<f64>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LogSweep {
    pub levels: Vec<usize>,
    pub estimates: Vec<LogEstimate>,
    pub constants: Vec<f64>,
    pub constant: f64,
    pub constant_half: f64,
    pub stability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub commutator: CommutatorSweep,
    pub disjoint: DisjointSweep,
    pub log: LogSweep,
}

fn running_max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Commutator ratios for `f = sin(2πk x_0/L)`, `k = 1..=N/3`, and a fixed `u`.
pub fn commutator_sweep(u: &VectorField, axis: usize, s: f64) -> Result<CommutatorSweep> {
    let grid = u.grid().clone();
    let kmax = grid.points() / 3;
    let base = 2.0 * PI / grid.length();
    let mut wavenumbers = Vec::with_capacity(kmax);
    let mut ratios = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let f = ScalarField::from_fn(&grid, |x| (base * k as f64 * x[0]).sin());
        wavenumbers.push(k);
        ratios.push(riesz_commutator_probe(u, &f, axis, s)?);
    }
    let constant = running_max(&ratios);
    let constant_half = running_max(&ratios[..kmax.div_ceil(2)]);
    Ok(CommutatorSweep {
        wavenumbers,
        ratios,
        constant,
        constant_half,
        stability: constant / constant_half,
    })
}

/// `(‖f‖_{H^σ} + ‖g‖_{H^σ}) / ‖f+g‖_{H^σ}`.
pub fn disjoint_ratio(f: &ScalarField, g: &ScalarField, sigma: f64) -> Result<f64> {
    let mut sum = f.clone();
    sum.axpy(1.0, g)?;
    let denom = sum.sobolev_norm(sigma)?;
    if denom == 0.0 {
        return Err(Error::invalid("f + g vanishes"));
    }
    Ok((f.sobolev_norm(sigma)? + g.sobolev_norm(sigma)?) / denom)
}

/// Two equal bumps of radius `d/4` centred `d` apart along axis 0.
pub fn disjoint_support_probe(sigma: f64, d: f64, grid: &Grid) -> Result<f64> {
    let len = grid.length();
    if !(d > 0.0 && d <= 0.25 * len) {
        return Err(Error::invalid(format!("distance {d} must lie in (0, L/4] with L = {len}")));
    }
    if 0.25 * d < 4.0 * grid.dx() {
        return Err(Error::ResolutionGuard(format!(
            "bump radius {} spans fewer than 4 grid cells of {}",
            0.25 * d,
            grid.dx()
        )));
    }
    let mut p1 = vec![0.5 * len; grid.dim()];
    let mut p2 = p1.clone();
    p1[0] -= 0.5 * d;
    p2[0] += 0.5 * d;
    let f = build_bump_potential(&p1, 0.25 * d, grid)?;
    let g = build_bump_potential(&p2, 0.25 * d, grid)?;
    disjoint_ratio(&f, &g, sigma)
}

pub fn disjoint_support_sweep(sigma: f64, distances: &[f64], grid: &Grid) -> Result<DisjointSweep> {
    let ratios = distances
        .iter()
        .map(|&d| disjoint_support_probe(sigma, d, grid))
        .collect::<Result<Vec<_>>>()?;
    let constant = running_max(&ratios);
    let lowest = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DisjointSweep {
        sigma,
        distances: distances.to_vec(),
        ratios,
        constant,
        stability: constant / lowest,
    })
}

/// Both sides of the logarithmic estimate with `T(D) = R_1R_2` (axes 0 and 1).
pub fn log_estimate_probe(f: &ScalarField, s: f64) -> Result<LogEstimate> {
    let grid = f.grid();
    if grid.dim() < 2 {
        return Err(Error::invalid("the log estimate probe needs two axes"));
    }
    let t = f.spectrum().riesz(0)?.riesz(1)?.to_field();
    let (l2, linf) = f.lebesgue_norms();
    let hsm1 = f.sobolev_norm((s - 1.0).max(0.0))?;
    Ok(LogEstimate {
        lhs: t.max_abs(),
        rhs_terms: [1.0, l2, linf, linf * hsm1.ln_1p()],
    })
}

/// `Σ_{j≤J} sin(2^j y_0) sin(2^j y_1) / j` with `y = 2πx/L`.
pub fn lacunary_family(grid: &Grid, levels: usize) -> Result<ScalarField> {
    if grid.dim() < 2 {
        return Err(Error::invalid("the lacunary family needs two axes"));
    }
    if levels >= usize::BITS as usize || (1usize << levels) > grid.dealias_kmax() {
        return Err(Error::ResolutionGuard(format!(
            "frequency 2^{levels} exceeds the retained band {}",
            grid.dealias_kmax()
        )));
    }
    let base = 2.0 * PI / grid.length();
    Ok(ScalarField::from_fn(grid, |x| {
        (1..=levels)
            .map(|j| {
                let k = base * (1u64 << j) as f64;
                (k * x[0]).sin() * (k * x[1]).sin() / j as f64
            })
            .sum()
    }))
}

pub fn log_estimate_sweep(grid: &Grid, s: f64, max_level: usize) -> Result<LogSweep> {
    if max_level == 0 {
        return Err(Error::invalid("the sweep needs at least one level"));
    }
    let levels: Vec<usize> = (1..=max_level).collect();
    let estimates = levels
        .iter()
        .map(|&j| log_estimate_probe(&lacunary_family(grid, j)?, s))
        .collect::<Result<Vec<_>>>()?;
    let constants: Vec<f64> = estimates.iter().map(LogEstimate::constant).collect();
    let constant = running_max(&constants);
    let constant_half = running_max(&constants[..max_level.div_ceil(2)]);
    Ok(LogSweep {
        levels,
        estimates,
        constants,
        constant,
        constant_half,
        stability: constant / constant_half,
    })
}

/// The default probe suite on `n = 1` grids.
pub fn run_probes(seed: u64) -> Result<ProbeReport> {
    let box_grid = Grid::periodic(1, 128)?;
    let u = random::symplectic(&box_grid, &mut random::seeded(seed), 2.0, 4);
    let commutator = commutator_sweep(&u, 0, 3.0)?;
    let wide = Grid::new(crate::grid::GridSpec::new(1, 256, 8.0)?)?;
    let disjoint = disjoint_support_sweep(1.5, &[0.5, 1.0, 2.0], &wide)?;
    let log = log_estimate_sweep(&Grid::periodic(1, 256)?, 3.0, 6)?;
    Ok(ProbeReport {
        commutator,
        disjoint,
        log,
    })
}
