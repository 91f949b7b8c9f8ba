//! Nonuniform dependence of the time-1 solution map on the initial data.
//!
//! Around a base point `u_*` two sequences `u_{0,k} = u_* + v_k` and
//! `ũ_{0,k} = u_{0,k} + w_*/k` approach each other in `H^s`, while the
//! transported bumps `v_k` end up on disjoint supports, so the solutions
//! stay a fixed distance apart.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::{cfl_time_step, integrate_with, SolverOptions};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, GridSpec};
use crate::lagrangian::{compose_scalar, exp_map, invert, DiffeoMap, GeodesicOptions};
use crate::random;
use crate::spectral::{dealias_vector, Norms};
use crate::symplectic::{sympl_div, sympl_grad, sympl_grad_spec};

use super::{build_bump_potential, torus_distance};

/// Knobs of the experiment; the defaults satisfy the resolution guard for `K = 6`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonuniformParams {
    pub n: usize,
    /// Grid points per axis of the Eulerian runs.
    pub points: usize,
    /// Grid points per axis for the exponential-map probes.
    pub probe_points: usize,
    pub length: f64,
    pub s: f64,
    /// Ball radius `R`; every bump has `‖v_k‖_{H^s} = R/2`.
    pub radius: f64,
    /// Number of sequence terms `K`.
    pub terms: usize,
    /// `‖u_*‖_{H^s}`.
    pub u_star_norm: f64,
    /// Radius of the base potential as a fraction of the box length.
    pub u_star_width: f64,
    pub epsilon: f64,
    pub cfl: f64,
    pub cutoff_radius: f64,
    /// Minimum number of grid cells across `r_K`.
    pub guard_cells: f64,
}

impl Default for NonuniformParams {
    fn default() -> Self {
        NonuniformParams {
            n: 1,
            points: 288,
            probe_points: 72,
            length: 1.0 / 1.5f64.sqrt(),
            s: 3.0,
            radius: 1.0,
            terms: 6,
            u_star_norm: 0.05,
            u_star_width: 0.24,
            epsilon: 1e-3,
            cfl: 0.5,
            cutoff_radius: 1.0,
            guard_cells: 8.0,
        }
    }
}

impl NonuniformParams {
    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.n, self.points, self.length)?;
        GridSpec::new(self.n, self.probe_points, self.length)?;
        if !(self.s > self.n as f64 + 1.0) {
            return Err(Error::invalid(format!("s must exceed {}", self.n + 1)));
        }
        let positive = [
            ("radius", self.radius),
            ("epsilon", self.epsilon),
            ("cfl", self.cfl),
            ("cutoff_radius", self.cutoff_radius),
            ("guard_cells", self.guard_cells),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.u_star_norm >= 0.0) {
            return Err(Error::invalid("u_star_norm must be non-negative"));
        }
        if !(self.u_star_width > 0.0 && self.u_star_width < 0.25) {
            return Err(Error::invalid("u_star_width must lie in (0, 1/4)"));
        }
        if self.terms == 0 {
            return Err(Error::invalid("terms must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub s: f64,
    pub cfl: f64,
    pub geodesic: GeodesicOptions,
    /// Restrict the search to `|x − center|_∞ ≤ half_width` (minimal image).
    pub region: Option<(Vec<f64>, f64)>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            s: 3.0,
            cfl: 0.5,
            geodesic: GeodesicOptions::default(),
            region: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeDirection {
    pub index: usize,
    pub w_star: VectorField,
    pub x_star: Vec<f64>,
    pub m_star: f64,
    /// `exp(u_* + εw_*)` and `exp(u_* − εw_*)`.
    pub plus: DiffeoMap,
    pub minus: DiffeoMap,
}

/// Largest `|d_{u_*}exp(w)(x)|` over candidates `w` and grid points `x`.
pub fn find_probe_direction(
    u_star: &VectorField,
    candidates: &[VectorField],
    epsilon: f64,
) -> Result<ProbeDirection> {
    find_probe_direction_with(u_star, candidates, epsilon, &ProbeOptions::default())
}

pub fn find_probe_direction_with(
    u_star: &VectorField,
    candidates: &[VectorField],
    epsilon: f64,
    opts: &ProbeOptions,
) -> Result<ProbeDirection> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let grid = u_star.grid().clone();
    let len = grid.length();
    let mut best: Option<ProbeDirection> = None;
    for (index, w) in candidates.iter().enumerate() {
        if w.grid().spec() != grid.spec() {
            return Err(Error::GridMismatch);
        }
        let norm = w.sobolev_norm(opts.s)?;
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "candidate {index} has H^s norm {norm}, expected 1"
            )));
        }
        let mut up = u_star.clone();
        up.axpy(epsilon, w)?;
        let mut um = u_star.clone();
        um.axpy(-epsilon, w)?;
        let dt = cfl_time_step(&up, 1.0, opts.cfl).min(cfl_time_step(&um, 1.0, opts.cfl));
        let plus = exp_map(&up, dt, &opts.geodesic)?;
        let minus = exp_map(&um, dt, &opts.geodesic)?;
        let dp = plus.displacement().components();
        let dm = minus.displacement().components();
        let mut pick: Option<(f64, usize)> = None;
        for p in 0..grid.len() {
            if let Some((center, half)) = &opts.region {
                let x = grid.coords(p);
                let inside = x
                    .iter()
                    .zip(center)
                    .all(|(&a, &c)| crate::grid::wrap_delta(a, c, len).abs() <= *half);
                if !inside {
                    continue;
                }
            }
            let m = (0..grid.dim())
                .map(|i| ((dp[i].values()[p] - dm[i].values()[p]) / (2.0 * epsilon)).powi(2))
                .sum::<f64>()
                .sqrt();
            if pick.map_or(true, |(b, _)| m > b) {
                pick = Some((m, p));
            }
        }
        let Some((m, p)) = pick else {
            return Err(Error::invalid("the search region contains no grid point"));
        };
        if best.as_ref().map_or(true, |b| m > b.m_star) {
            best = Some(ProbeDirection {
                index,
                w_star: w.clone(),
                x_star: grid.coords(p),
                m_star: m,
                plus,
                minus,
            });
        }
    }
    match best {
        Some(b) if b.m_star >= 1e-6 => Ok(b),
        Some(b) => Err(Error::ProbeFailed(format!(
            "largest directional derivative {:.3e} is below 1e-6",
            b.m_star
        ))),
        None => Err(Error::ProbeFailed("no candidate directions".into())),
    }
}

fn normalized(mut w: VectorField, s: f64) -> Result<Option<VectorField>> {
    let norm = w.sobolev_norm(s)?;
    if norm == 0.0 {
        return Ok(None);
    }
    w.scale(1.0 / norm);
    Ok(Some(w))
}

/// Constant fields along each axis, then `∇_ω` of the lowest sine and cosine
/// modes along each axis, each normalized in `H^s`.
pub fn default_candidates(grid: &Grid, s: f64) -> Result<Vec<VectorField>> {
    let d = grid.dim();
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let mut out = Vec::new();
    for a in 0..d {
        let w = VectorField::from_fn(grid, |_, v| {
            v.iter_mut().for_each(|c| *c = 0.0);
            v[a] = 1.0;
        });
        out.extend(normalized(w, s)?);
    }
    for a in 0..d {
        for phase in [0.0, 0.5 * std::f64::consts::PI] {
            let h = ScalarField::from_fn(grid, |x| (base * x[a] + phase).sin());
            out.extend(normalized(sympl_grad(&h), s)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    /// Two-sided `H^{s−1}` equivalence under composition with `φ^{-1}`.
    pub c1: f64,
    /// Lipschitz constant of the probe maps.
    pub c2: f64,
    /// Second difference of `exp` along `w_*`.
    pub c3: f64,
    /// Lipschitz constant of `exp` along `w_*`.
    pub c4: f64,
    /// Sobolev embedding constant `sup|w| ≤ C_5 ‖w‖_{H^s}` on the grid lattice.
    pub c5: f64,
}

/// Everything `run_nonuniform` needs, measured once.
#[derive(Clone, Debug)]
pub struct NonuniformConfig {
    pub s: f64,
    pub radius: f64,
    pub terms: usize,
    pub x_star: Vec<f64>,
    pub base_potential: ScalarField,
    /// `H_k` for `k = 1..=K`, supported in `B_{r_k}(x_*)`.
    pub bump_potentials: Vec<ScalarField>,
    pub u_star: VectorField,
    pub w_star: VectorField,
    pub m_star: f64,
    pub radii: Vec<f64>,
    pub constants: MeasuredConstants,
    pub cfl: f64,
    pub cutoff_radius: f64,
}

fn lattice_embedding_constant(grid: &Grid, s: f64) -> f64 {
    let sum: f64 = grid.xi_sq().iter().map(|&x| (1.0 + x).powf(-s)).sum();
    (sum / grid.volume()).sqrt()
}

/// Builds `u_*`, finds `(w_*, x_*, m_*)` on the probe grid, measures the
/// constants and the radii, and checks the resolution guard.
pub fn prepare_nonuniform(params: &NonuniformParams) -> Result<NonuniformConfig> {
    params.validate()?;
    let fine = Grid::new(GridSpec::new(params.n, params.points, params.length)?)?;
    let coarse = Grid::new(GridSpec::new(params.n, params.probe_points, params.length)?)?;
    let len = params.length;
    let s = params.s;
    let center = vec![0.5 * len; fine.dim()];
    let base_potential = build_bump_potential(&center, params.u_star_width * len, &fine)?;
    let mut u_star = dealias_vector(&sympl_grad(&base_potential));
    let un = u_star.sobolev_norm(s)?;
    u_star.scale(params.u_star_norm / un);
    let u_coarse = u_star.spectrum().resample(&coarse)?.to_field();

    let candidates = default_candidates(&coarse, s)?;
    let probe_opts = ProbeOptions {
        s,
        cfl: params.cfl,
        geodesic: GeodesicOptions {
            cutoff_radius: params.cutoff_radius,
            ..GeodesicOptions::default()
        },
        region: Some((center.clone(), 0.25 * len)),
    };
    let probe = find_probe_direction_with(&u_coarse, &candidates, params.epsilon, &probe_opts)?;
    let dt = cfl_time_step(&u_coarse, 1.0, params.cfl);
    let base_map = exp_map(&u_coarse, dt, &probe_opts.geodesic)?;
    let maps = [&base_map, &probe.plus, &probe.minus];

    let c2 = maps.iter().map(|m| m.lipschitz()).fold(1.0, f64::max);
    let eps = params.epsilon;
    let dp = probe.plus.displacement();
    let dm = probe.minus.displacement();
    let c4 = dp.sub(dm)?.sobolev_norm(s)? / (2.0 * eps);
    let mut second = dp.clone();
    second.axpy(-2.0, base_map.displacement())?;
    second.axpy(1.0, dm)?;
    let c3 = second.sobolev_norm(s)? / (eps * eps);
    let mut tests = vec![random::scalar(&coarse, &mut random::seeded(1), 2.0, 4)];
    let z = sympl_div(&u_coarse);
    if z.max_abs() > 0.0 {
        tests.push(z);
    }
    let mut c1: f64 = 1.0;
    for m in maps {
        let inv = invert(m, 1e-12, 200)?;
        for f in &tests {
            let ratio = compose_scalar(f, &inv).sobolev_norm(s - 1.0)? / f.sobolev_norm(s - 1.0)?;
            c1 = c1.max(ratio).max(1.0 / ratio);
        }
    }
    let constants = MeasuredConstants {
        c1,
        c2,
        c3,
        c4,
        c5: lattice_embedding_constant(&fine, s),
    };

    let m_star = probe.m_star;
    let radii: Vec<f64> = (1..=params.terms)
        .map(|k| m_star / (8.0 * k as f64 * c2))
        .collect();
    let r_last = radii[params.terms - 1];
    if r_last < params.guard_cells * fine.dx() {
        return Err(Error::ResolutionGuard(format!(
            "r_K = {r_last:.4e} spans {:.2} grid cells, need {}",
            r_last / fine.dx(),
            params.guard_cells
        )));
    }
    if radii[0] >= 0.25 * len {
        return Err(Error::ResolutionGuard(format!(
            "r_1 = {:.4e} does not fit the box of length {len}",
            radii[0]
        )));
    }
    let x_star = probe.x_star.clone();
    let bump_potentials = radii
        .iter()
        .map(|&r| build_bump_potential(&x_star, r, &fine))
        .collect::<Result<Vec<_>>>()?;
    let w_star = probe.w_star.spectrum().resample(&fine)?.to_field();
    Ok(NonuniformConfig {
        s,
        radius: params.radius,
        terms: params.terms,
        x_star,
        base_potential,
        bump_potentials,
        u_star,
        w_star,
        m_star,
        radii,
        constants,
        cfl: params.cfl,
        cutoff_radius: params.cutoff_radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonuniformRow {
    pub k: usize,
    pub input_dist_hs: f64,
    pub output_gap_hs: f64,
    pub sdiv_gap_hsm1: f64,
    pub separation: f64,
    pub r_k: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<NonuniformRow>,
    pub constants: MeasuredConstants,
    pub m_star: f64,
    pub x_star: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub u_star_hs: f64,
    /// `min_k` of the output gap.
    pub floor: f64,
    /// `floor` over the `k = 1` gap.
    pub floor_ratio: f64,
    /// Least-squares slope of `ln gap` against `ln k`, with its standard error.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `m_*/(2k) ≤ separation ≤ 3m_*/k` for every row.
    pub separation_ok: bool,
    /// Largest `max_{|x−x_*|≥r_k} |v_k| / max|v_k|`; the potentials
    /// themselves vanish exactly outside the balls.
    pub support_leak: f64,
    /// Largest `|H_k|` at grid points outside `B_{r_k}(x_*)`.
    pub potential_leak: f64,
    /// `R_*` from `max(C_3C_5R_*, C_3C_5R_*²/4) = m_*/16`; unbounded when `C_3 = 0`.
    pub admissible_radius: Option<f64>,
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// The report without its rows, as pretty JSON.
    pub fn sidecar_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("rows");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    /// The headline requirement: positive floor and separation bounds.
    pub fn passes(&self) -> bool {
        let k1 = self.rows.first().map_or(0.0, |r| r.output_gap_hs);
        let decays_like_input = self.slope - 2.0 * self.slope_stderr <= -1.0;
        self.floor > 0.0 && self.floor >= 0.05 * k1 && !decays_like_input && self.separation_ok
    }
}

fn slope_fit(rows: &[NonuniformRow]) -> (f64, f64) {
    let n = rows.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.k as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.output_gap_hs.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    if n < 3 {
        return (slope, 0.0);
    }
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ym - slope * (x - xm)).powi(2))
        .sum();
    (slope, (rss / (n as f64 - 2.0) / sxx).sqrt())
}

fn run_once(u0: &VectorField, x_star: &[f64], opts: &SolverOptions, cfl: f64) -> Result<(VectorField, Vec<f64>)> {
    let dt = cfl_time_step(u0, 1.0, cfl);
    let run = integrate_with(u0, 1.0, dt, opts, &[x_star.to_vec()], |_, _| {})?;
    Ok((run.state.u, run.tracers.into_iter().next().unwrap()))
}

/// Runs the `K` pairs of time-1 Eulerian solves and assembles the report.
pub fn run_nonuniform(config: &NonuniformConfig) -> Result<ExperimentReport> {
    let grid = config.u_star.grid().clone();
    let len = grid.length();
    let s = config.s;
    let opts = SolverOptions {
        s,
        cutoff_radius: config.cutoff_radius,
        diag_every: usize::MAX,
        ..SolverOptions::default()
    };
    let mut rows = Vec::with_capacity(config.terms);
    let mut support_leak: f64 = 0.0;
    let mut potential_leak: f64 = 0.0;
    for (idx, h) in config.bump_potentials.iter().enumerate() {
        let k = idx + 1;
        let r_k = config.radii[idx];
        // The solver evolves the two-thirds truncation of its data, so the
        // bump is truncated before it is normalized.
        let mut vs = sympl_grad_spec(&h.spectrum());
        vs.dealias();
        let mut v = vs.to_field();
        let vn = v.sobolev_norm(s)?;
        v.scale(0.5 * config.radius / vn);
        let vmax = v.max_magnitude();
        for p in 0..grid.len() {
            if torus_distance(&grid.coords(p), &config.x_star, len) >= r_k {
                potential_leak = potential_leak.max(h.values()[p].abs());
                let mag = (0..grid.dim())
                    .map(|i| v.component(i).values()[p].powi(2))
                    .sum::<f64>()
                    .sqrt();
                support_leak = support_leak.max(mag / vmax);
            }
        }
        let mut u0 = config.u_star.clone();
        u0.axpy(1.0, &v)?;
        let mut ut = u0.clone();
        ut.axpy(1.0 / k as f64, &config.w_star)?;
        let input_dist_hs = ut.sub(&u0)?.sobolev_norm(s)?;
        let (u1, x1) = run_once(&u0, &config.x_star, &opts, config.cfl)?;
        let (ut1, xt1) = run_once(&ut, &config.x_star, &opts, config.cfl)?;
        let gap = ut1.sub(&u1)?;
        let mut zgap = sympl_div(&ut1);
        zgap.axpy(-1.0, &sympl_div(&u1))?;
        let separation = x1
            .iter()
            .zip(&xt1)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        rows.push(NonuniformRow {
            k,
            input_dist_hs,
            output_gap_hs: gap.sobolev_norm(s)?,
            sdiv_gap_hsm1: zgap.sobolev_norm(s - 1.0)?,
            separation,
            r_k,
        });
    }
    let floor = rows.iter().map(|r| r.output_gap_hs).fold(f64::INFINITY, f64::min);
    let floor_ratio = floor / rows[0].output_gap_hs;
    let (slope, slope_stderr) = slope_fit(&rows);
    let m = config.m_star;
    let separation_ok = rows.iter().all(|r| {
        let k = r.k as f64;
        r.separation >= m / (2.0 * k) && r.separation <= 3.0 * m / k
    });
    let c = config.constants;
    let a = c.c3 * c.c5;
    let admissible_radius = (a > 0.0).then(|| (m / (16.0 * a)).min((m / (4.0 * a)).sqrt()));
    Ok(ExperimentReport {
        rows,
        constants: c,
        m_star: m,
        x_star: config.x_star.clone(),
        radius: config.radius,
        u_star_hs: config.u_star.sobolev_norm(s)?,
        floor,
        floor_ratio,
        slope,
        slope_stderr,
        separation_ok,
        support_leak,
        potential_leak,
        admissible_radius,
    })
}
