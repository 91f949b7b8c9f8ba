//! The acceptance suite: twelve numbered checks with tolerances and time budgets.
//!
//! Each check returns a [`CriterionResult`]; a check passes when its
//! numerical condition holds and it finishes within its budget.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::eulerian::{cfl_time_step, integrate_with, SolverOptions};
use crate::experiments::{oracle_2d_solve, prepare_nonuniform, run_nonuniform, run_probes, NonuniformParams};
use crate::field::{SkewMatrixField, VectorField};
use crate::grid::Grid;
use crate::lagrangian::{
    compose_scalar, eulerian_velocity, flow_from_velocity, geodesic_integrate, invert, symplectic_residual,
    GeodesicOptions,
};
use crate::random;
use crate::spectral::{self, Norms};
use crate::symplectic::{
    apply_p, apply_p_star, b_operator, divergence_rows, omega_two_form, p_high, p_low, q_term,
    reconstruct_velocity, sympl_div, sympl_grad,
};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    /// One-line summary starting with `PASS` or `FAIL`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

/// `(id, name, budget in seconds)` of every criterion.
pub const CRITERIA: [(u32, &str, f64); 12] = [
    (1, "operator identities", 30.0),
    (2, "velocity reconstruction", 5.0),
    (3, "conservation over T=1", 300.0),
    (4, "frozen symplectic divergence", 600.0),
    (5, "Eulerian-Lagrangian equivalence", 900.0),
    (6, "scaling law", 600.0),
    (7, "2D vorticity oracle", 600.0),
    (8, "symplectic residual dichotomy", 600.0),
    (9, "cutoff independence of B", 60.0),
    (10, "nonuniform dependence", 1800.0),
    (11, "probe suites", 300.0),
    (12, "n=2 smoke", 1200.0),
];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u32) -> Option<CriterionResult> {
    let (_, name, budget) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let res = match id {
        1 => identities(1, 32, 1.0),
        2 => reconstruction(1, 64, 1.0),
        3 => conservation(1, 256, 8, 1.0),
        4 => frozen_transport(),
        5 => equivalence(),
        6 => scaling(),
        7 => oracle(),
        8 => residual_dichotomy(),
        9 => cutoff_independence(),
        10 => nonuniform(),
        11 => probes(),
        12 => smoke(),
        _ => unreachable!(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match res {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CriterionResult {
        id,
        name: name.to_string(),
        passed: passed && seconds <= *budget,
        detail,
        seconds,
        budget_seconds: *budget,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0)).collect()
}

fn rel_vec(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

fn rel_skew(a: &SkewMatrixField, b: &SkewMatrixField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b).unwrap();
    d.max_frobenius() / b.max_frobenius().max(f64::MIN_POSITIVE)
}

fn scaled_skew(y: &SkewMatrixField, a: f64) -> SkewMatrixField {
    let mut out = y.clone();
    out.upper_mut().iter_mut().for_each(|e| e.scale(a));
    out
}

fn map_components(u: &VectorField, f: impl Fn(&crate::field::ScalarField) -> crate::field::ScalarField) -> VectorField {
    VectorField::from_components(u.components().iter().map(f).collect()).unwrap()
}

/// Worst relative error of each identity over 20 random inputs.
fn identity_errors(n: usize, points: usize) -> Result<[f64; 7]> {
    let g = Grid::periodic(n, points)?;
    let band = 32;
    let mut worst = [0.0f64; 7];
    for seed in 0..20u64 {
        let mut rng = random::seeded(1000 + seed);
        let x = random::vector(&g, &mut rng, 1.0, band);
        let y = random::skew(&g, &mut rng, 1.0, band);
        let h = random::scalar(&g, &mut rng, 1.0, band);
        let lhs = spectral::l2_inner_vector(&apply_p_star(&y), &x);
        let rhs = y.l2_inner(&apply_p(&x));
        let adj = (lhs - rhs).abs() / (apply_p_star(&y).sobolev_norm(0.0)? * x.sobolev_norm(0.0)?);
        let pps = rel_skew(&apply_p(&apply_p_star(&y)), &scaled_skew(&omega_two_form(&y), 2.0));
        let div_y = divergence_rows(&y);
        let lap = map_components(&div_y, |c| spectral::laplacian(c).map(|v| -v));
        let lapdiv = rel_vec(&lap, &divergence_rows(&omega_two_form(&y)));
        let direct = apply_p_star(&y);
        let chain = map_components(&apply_p_star(&apply_p(&direct)), |c| {
            spectral::inverse_laplacian(c).map(|v| -0.5 * v)
        });
        let delta = rel_vec(&chain, &direct);
        let mut low = p_low(&x);
        low.axpy(-1.0, &p_high(&x))?;
        let lq = rel_skew(&low, &q_term(&x));
        let u = sympl_grad(&h);
        let kernel = apply_p(&u).max_frobenius() / u.max_abs();
        let lap_h = spectral::laplacian(&h);
        let mut sd = sympl_div(&u);
        sd.axpy(-1.0, &lap_h)?;
        let divgrad = sd.max_abs() / lap_h.max_abs();
        for (w, e) in worst.iter_mut().zip([adj, pps, lapdiv, delta, lq, kernel, divgrad]) {
            *w = w.max(e);
        }
    }
    Ok(worst)
}

fn identities(n: usize, points: usize, relax: f64) -> Result<Outcome> {
    let worst = identity_errors(n, points)?;
    let max = worst.iter().cloned().fold(0.0, f64::max);
    outcome(
        max <= 1e-9 * relax,
        format!(
            "worst relative errors adj {:.1e}, PP* {:.1e}, lap-div {:.1e}, delta {:.1e}, P_L {:.1e}, P grad {:.1e}, div grad {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], worst[6]
        ),
    )
}

fn reconstruction(n: usize, points: usize, relax: f64) -> Result<Outcome> {
    let g = Grid::periodic(n, points)?;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut u = random::symplectic(&g, &mut random::seeded(2000 + seed), 1.0, 32);
        for (i, c) in u.components_mut().iter_mut().enumerate() {
            *c = c.map(|v| v + 0.1 * (i as f64 + 1.0));
        }
        let back = reconstruct_velocity(&sympl_div(&u));
        let centered = map_components(&u, spectral::remove_mean);
        worst = worst.max(back.sub(&centered)?.max_abs());
    }
    outcome(worst <= 1e-11 * relax, format!("max round-trip error {worst:.2e}"))
}

fn conservation(n: usize, points: usize, band: usize, relax: f64) -> Result<Outcome> {
    let g = Grid::periodic(n, points)?;
    let u0 = random::symplectic(&g, &mut random::seeded(3), 2.0, band);
    let dt = cfl_time_step(&u0, 1.0, 0.5);
    let opts = SolverOptions::default();
    let run = integrate_with(&u0, 1.0, dt, &opts, &[], |_, _| {})?;
    let first = &run.log[0];
    let l2 = run.log.iter().map(|r| (r.l2 - first.l2).abs()).fold(0.0, f64::max) / first.l2;
    let p = run.log.iter().map(|r| r.p_residual).fold(0.0, f64::max) / first.hs;
    let z = run.log.iter().map(|r| (r.sdiv_l2 - first.sdiv_l2).abs()).fold(0.0, f64::max) / first.sdiv_l2;
    outcome(
        l2 <= 1e-7 * relax && p <= 1e-7 * relax && z <= 1e-5 * relax,
        format!(
            "N={points}, {} steps: L2 drift {l2:.2e}, P residual/H^s {p:.2e}, sdiv drift {z:.2e}",
            run.steps
        ),
    )
}

/// Random symplectic data whose flow maps stay invertible by fixed point.
fn lagrangian_data(points: usize, seed: u64, amplitude: f64) -> Result<VectorField> {
    let g = Grid::periodic(1, points)?;
    Ok(random::symplectic(&g, &mut random::seeded(seed), 2.0, 4).scaled(amplitude))
}

fn frozen_transport() -> Result<Outcome> {
    let u0 = lagrangian_data(128, 40, 0.4)?;
    let dt = cfl_time_step(&u0, 1.0, 0.5);
    let mut traj = Vec::new();
    let run = integrate_with(&u0, 1.0, dt, &SolverOptions::default(), &[], |_, u| traj.push(u.to_field()))?;
    let phi = flow_from_velocity(&traj, dt)?;
    let inv = invert(&phi, 1e-12, 200)?;
    let z0 = sympl_div(&u0);
    let carried = compose_scalar(&z0, &inv);
    let mut diff = sympl_div(&run.state.u);
    diff.axpy(-1.0, &carried)?;
    let rel = diff.sobolev_norm(0.0)? / carried.sobolev_norm(0.0)?;
    outcome(rel <= 1e-3, format!("relative L2 error {rel:.2e}"))
}

fn equivalence() -> Result<Outcome> {
    let u0 = lagrangian_data(128, 41, 0.4)?;
    let dt = cfl_time_step(&u0, 1.0, 0.5);
    let opts = GeodesicOptions::default();
    let st = geodesic_integrate(&u0, 1.0, dt, &opts)?;
    let v = eulerian_velocity(&st, &opts)?;
    let run = integrate_with(&u0, 1.0, dt, &SolverOptions::default(), &[], |_, _| {})?;
    let err = v.sub(&run.state.u)?.sobolev_norm(2.0)?;
    let scale = u0.sobolev_norm(3.0)?;
    outcome(
        err <= 1e-3 * scale,
        format!("H^(s-1) discrepancy {err:.2e}, 1e-3 ||u0||_H^s = {:.2e}", 1e-3 * scale),
    )
}

fn scaling() -> Result<Outcome> {
    let u0 = lagrangian_data(64, 42, 0.4)?;
    let opts = GeodesicOptions::default();
    let (t, dt) = (0.5, 0.025);
    let mut worst = 0.0f64;
    for lambda in [0.5, 2.0] {
        let scaled = geodesic_integrate(&u0.scaled(lambda), t, dt, &opts)?;
        let stretched = geodesic_integrate(&u0, lambda * t, lambda * dt, &opts)?;
        worst = worst.max(scaled.phi.max_distance(&stretched.phi)?);
    }
    outcome(worst <= 1e-6, format!("max map discrepancy {worst:.2e}"))
}

fn oracle() -> Result<Outcome> {
    let g = Grid::periodic(1, 128)?;
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let u0 = random::symplectic(&g, &mut random::seeded(50 + seed), 2.0, 16);
        let dt = cfl_time_step(&u0, 1.0, 0.5);
        let run = integrate_with(&u0, 1.0, dt, &SolverOptions::default(), &[], |_, _| {})?;
        let o = oracle_2d_solve(&u0, 1.0, dt)?;
        worst = worst.max(run.state.u.sub(&o)?.sobolev_norm(0.0)? / u0.sobolev_norm(0.0)?);
    }
    outcome(worst <= 1e-6, format!("worst relative L2 discrepancy {worst:.2e} over 3 seeds"))
}

fn residual_dichotomy() -> Result<Outcome> {
    let opts = GeodesicOptions::default();
    let sym = lagrangian_data(128, 43, 0.4)?;
    let dt = cfl_time_step(&sym, 1.0, 0.5);
    let r_sym = symplectic_residual(&geodesic_integrate(&sym, 1.0, dt, &opts)?.phi);
    let g = sym.grid().clone();
    let raw = random::vector(&g, &mut random::seeded(44), 2.0, 4).scaled(0.05);
    let dt = cfl_time_step(&raw, 1.0, 0.5);
    let r_raw = symplectic_residual(&geodesic_integrate(&raw, 1.0, dt, &opts)?.phi);
    let p = apply_p(&raw).l2_norm();
    outcome(
        r_sym <= 1e-6 && r_raw >= 0.25 * p,
        format!("symplectic residual {r_sym:.2e}; non-symplectic residual {r_raw:.3e} vs ||P(u0)||/4 = {:.3e}", 0.25 * p),
    )
}

fn cutoff_independence() -> Result<Outcome> {
    let g = Grid::periodic(1, 128)?;
    let mut worst = 0.0f64;
    for seed in 0..4u64 {
        let u = random::symplectic(&g, &mut random::seeded(60 + seed), 1.0, 64);
        let bs = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&r| b_operator(&u, r))
            .collect::<Result<Vec<_>>>()?;
        for a in &bs {
            for b in &bs {
                worst = worst.max(a.sub(b)?.max_abs());
            }
        }
    }
    outcome(worst <= 1e-9, format!("max pairwise difference {worst:.2e}"))
}

fn nonuniform() -> Result<Outcome> {
    let report = run_nonuniform(&prepare_nonuniform(&NonuniformParams::default())?)?;
    let gaps: Vec<String> = report.rows.iter().map(|r| format!("{:.3}", r.output_gap_hs)).collect();
    let inputs_ok = report
        .rows
        .iter()
        .all(|r| (r.input_dist_hs - 1.0 / r.k as f64).abs() <= 1e-10);
    outcome(
        inputs_ok && report.passes(),
        format!(
            "gaps [{}], floor {:.3} = {:.2} x k=1 gap, slope {:.2} +- {:.2}, separations {}",
            gaps.join(", "),
            report.floor,
            report.floor_ratio,
            report.slope,
            report.slope_stderr,
            if report.separation_ok { "within bounds" } else { "OUT OF BOUNDS" }
        ),
    )
}

fn probes() -> Result<Outcome> {
    let r = run_probes(7)?;
    let s = [r.commutator.stability, r.disjoint.stability, r.log.stability];
    outcome(
        s.iter().all(|&x| x <= 1.2),
        format!(
            "constants commutator {:.3} (stability {:.3}), disjoint {:.4} ({:.4}), log {:.3} ({:.3})",
            r.commutator.constant, s[0], r.disjoint.constant, s[1], r.log.constant, s[2]
        ),
    )
}

fn smoke() -> Result<Outcome> {
    let parts = [identities(2, 16, 100.0)?, reconstruction(2, 16, 100.0)?, conservation(2, 16, 4, 100.0)?];
    outcome(
        parts.iter().all(|p| p.passed),
        parts.iter().map(|p| p.detail.as_str()).collect::<Vec<_>>().join("; "),
    )
}
