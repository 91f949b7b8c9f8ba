use std::f64::consts::E;

use proptest::prelude::*;
use symplab::eulerian::{integrate, SolverOptions};
use symplab::experiments::*;
use symplab::field::{ScalarField, VectorField};
use symplab::grid::{Grid, GridSpec};
use symplab::random;
use symplab::spectral::{self, Norms};
use symplab::symplectic::{sympl_div, sympl_grad};
use symplab::Error;

fn boxed(points: usize, length: f64) -> Grid {
    Grid::new(GridSpec::new(1, points, length).unwrap()).unwrap()
}

fn normalized(mut w: VectorField, s: f64) -> VectorField {
    let n = w.sobolev_norm(s).unwrap();
    w.scale(1.0 / n);
    w
}

/// Shifts a field by `cells` grid points along axis 0.
fn roll(u: &VectorField, cells: usize) -> VectorField {
    let g = u.grid().clone();
    let npts = g.points();
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let mut idx = vec![0; g.dim()];
            let vals = (0..g.len())
                .map(|p| {
                    g.unflatten(p, &mut idx);
                    idx[0] = (idx[0] + npts - cells) % npts;
                    c.values()[g.flatten(&idx)]
                })
                .collect();
            ScalarField::from_values(&g, vals).unwrap()
        })
        .collect();
    VectorField::from_components(comps).unwrap()
}

#[test]
fn bump_has_value_e_inverse_at_center_and_compact_support() {
    let g = boxed(64, 4.0);
    let c = [2.0, 2.0];
    let r = 0.6;
    let h = build_bump_potential(&c, r, &g).unwrap();
    let center = g.flatten(&[32, 32]);
    assert_eq!(h.values()[center], (-1.0f64).exp());
    assert!((h.values()[center] - 1.0 / E).abs() < 1e-16);
    for p in 0..g.len() {
        let x = g.coords(p);
        let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        if d >= r {
            assert_eq!(h.values()[p], 0.0);
        }
    }
}

#[test]
fn bump_is_symmetric_about_its_center() {
    let g = boxed(64, 4.0);
    let h = build_bump_potential(&[2.0, 1.5], 0.9, &g).unwrap();
    let mut idx = vec![0; 2];
    for p in 0..g.len() {
        g.unflatten(p, &mut idx);
        let mirror = g.flatten(&[(64 - idx[0]) % 64, (48 + 64 - idx[1]) % 64]);
        assert!((h.values()[p] - h.values()[mirror]).abs() < 1e-15);
    }
}

#[test]
fn bump_rejects_large_radius() {
    let g = boxed(32, 4.0);
    assert!(matches!(build_bump_potential(&[2.0, 2.0], 1.0, &g), Err(Error::InvalidArgument(_))));
    assert!(build_bump_potential(&[2.0, 2.0], 0.99, &g).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bump_is_bounded_and_wraps(cx in 0.0..4.0f64, cy in 0.0..4.0f64, r in 0.2..0.99f64) {
        let g = boxed(32, 4.0);
        let h = build_bump_potential(&[cx, cy], r, &g).unwrap();
        prop_assert!(h.values().iter().all(|&v| (0.0..=1.0 / E).contains(&v)));
        // Translating the center by a full period gives the same field.
        let h2 = build_bump_potential(&[cx + 4.0, cy - 4.0], r, &g).unwrap();
        for (a, b) in h.values().iter().zip(h2.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn probe_at_zero_is_the_identity_derivative() {
    let g = Grid::periodic(1, 16).unwrap();
    let w = normalized(random::symplectic(&g, &mut random::seeded(5), 2.0, 3), 3.0);
    let p = find_probe_direction(&VectorField::zeros(&g), &[w.clone()], 1e-3).unwrap();
    let wmax = w.max_magnitude();
    assert!((p.m_star - wmax).abs() < 1e-6 * wmax, "{} vs {}", p.m_star, wmax);
    let flat = (0..g.len())
        .find(|&q| g.coords(q) == p.x_star)
        .unwrap();
    let at = w.at(flat);
    assert!(((at[0].powi(2) + at[1].powi(2)).sqrt() - wmax).abs() < 1e-12);
}

#[test]
fn probe_estimate_converges_under_epsilon_refinement() {
    let g = Grid::periodic(1, 16).unwrap();
    let u = random::symplectic(&g, &mut random::seeded(6), 2.0, 3).scaled(0.2);
    let w = normalized(random::symplectic(&g, &mut random::seeded(7), 2.0, 3), 3.0);
    let cands = [w];
    let a = find_probe_direction(&u, &cands, 2e-2).unwrap();
    let b = find_probe_direction(&u, &cands, 1e-2).unwrap();
    let c = find_probe_direction(&u, &cands, 5e-3).unwrap();
    let d1 = (a.m_star - b.m_star).abs();
    let d2 = (b.m_star - c.m_star).abs();
    assert!(d1 < 1e-3 * b.m_star, "{d1:e}");
    // Halving epsilon cuts the difference roughly fourfold.
    assert!(d2 < 0.4 * d1, "{d1:e} {d2:e}");
}

#[test]
fn probe_is_translation_equivariant() {
    let g = Grid::periodic(1, 16).unwrap();
    let u = random::symplectic(&g, &mut random::seeded(8), 2.0, 3).scaled(0.2);
    let w = normalized(random::symplectic(&g, &mut random::seeded(9), 2.0, 3), 3.0);
    let a = find_probe_direction(&u, &[w.clone()], 1e-3).unwrap();
    let b = find_probe_direction(&roll(&u, 5), &[roll(&w, 5)], 1e-3).unwrap();
    assert!((a.m_star - b.m_star).abs() < 1e-9 * a.m_star);
    let shifted = (a.x_star[0] + 5.0 * g.dx()).rem_euclid(g.length());
    assert!((b.x_star[0] - shifted).abs() < 1e-12);
    assert!((b.x_star[1] - a.x_star[1]).abs() < 1e-12);
}

#[test]
fn probe_fails_without_a_useful_direction() {
    let g = Grid::periodic(1, 16).unwrap();
    let w = normalized(random::symplectic(&g, &mut random::seeded(1), 2.0, 3), 3.0);
    assert!(find_probe_direction(&VectorField::zeros(&g), &[w.scaled(1e-8)], 1e-3).is_err());
    assert!(matches!(
        find_probe_direction(&VectorField::zeros(&g), &[], 1e-3),
        Err(Error::ProbeFailed(_))
    ));
}

fn small_params(terms: usize) -> NonuniformParams {
    NonuniformParams {
        points: 96,
        probe_points: 48,
        terms,
        ..NonuniformParams::default()
    }
}

#[test]
fn nonuniform_two_terms_keep_their_gap() {
    let cfg = prepare_nonuniform(&small_params(2)).unwrap();
    assert!((cfg.w_star.sobolev_norm(3.0).unwrap() - 1.0).abs() < 1e-10);
    for (k, r) in cfg.radii.iter().enumerate() {
        let expect = cfg.m_star / (8.0 * (k + 1) as f64 * cfg.constants.c2);
        assert_eq!(*r, expect);
    }
    let report = run_nonuniform(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert!((row.input_dist_hs - 1.0 / row.k as f64).abs() < 1e-10);
    }
    assert_eq!(report.potential_leak, 0.0);
    assert!(report.separation_ok);
    assert!(report.floor > 0.5, "{}", report.floor);
    assert!(report.passes());
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("k,input_dist_hs,output_gap_hs,sdiv_gap_hsm1,separation,r_k\n"));
    assert_eq!(text.lines().count(), 3);
    let side: serde_json::Value = serde_json::from_str(&report.sidecar_json()).unwrap();
    for key in ["constants", "m_star", "x_star", "R"] {
        assert!(side.get(key).is_some(), "{key}");
    }
}

#[test]
fn nonuniform_single_term_has_unit_input_distance() {
    let cfg = prepare_nonuniform(&small_params(1)).unwrap();
    let report = run_nonuniform(&cfg).unwrap();
    assert!((report.rows[0].input_dist_hs - 1.0).abs() < 1e-10);
}

#[test]
fn nonuniform_refuses_underresolved_bumps() {
    assert!(matches!(prepare_nonuniform(&small_params(6)), Err(Error::ResolutionGuard(_))));
    let bad = NonuniformParams {
        s: 2.0,
        ..small_params(2)
    };
    assert!(prepare_nonuniform(&bad).is_err());
}

fn shear(g: &Grid) -> VectorField {
    VectorField::from_fn(g, |x, o| {
        o[0] = x[1].sin();
        o[1] = 0.0;
    })
}

#[test]
fn oracle_keeps_shear_steady() {
    let g = Grid::periodic(1, 32).unwrap();
    let u = shear(&g);
    let out = oracle_2d_solve(&u, 1.0, 0.05).unwrap();
    assert!(out.sub(&u).unwrap().max_abs() < 1e-10);
}

#[test]
fn oracle_conserves_enstrophy() {
    let g = Grid::periodic(1, 32).unwrap();
    let h = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].sin());
    let u = sympl_grad(&h);
    let z0 = sympl_div(&u).sobolev_norm(0.0).unwrap();
    let out = oracle_2d_solve(&u, 1.0, 0.05).unwrap();
    let z1 = sympl_div(&out).sobolev_norm(0.0).unwrap();
    assert!((z1 - z0).abs() < 1e-10 * z0);
}

#[test]
fn oracle_maps_zero_to_zero() {
    let g = Grid::periodic(1, 16).unwrap();
    let out = oracle_2d_solve(&VectorField::zeros(&g), 1.0, 0.25).unwrap();
    assert_eq!(out.max_abs(), 0.0);
}

#[test]
fn oracle_rejects_bad_input() {
    let g2 = Grid::periodic(2, 8).unwrap();
    assert!(oracle_2d_solve(&VectorField::zeros(&g2), 1.0, 0.5).is_err());
    let g = Grid::periodic(1, 16).unwrap();
    let u = VectorField::from_fn(&g, |x, o| {
        o[0] = x[0].sin();
        o[1] = 0.0;
    });
    assert!(oracle_2d_solve(&u, 1.0, 0.5).is_err());
}

#[test]
fn oracle_matches_symplectic_solver() {
    let g = Grid::periodic(1, 32).unwrap();
    for seed in 0..3 {
        let mut u0 = random::symplectic(&g, &mut random::seeded(seed), 2.0, 6);
        let mean = VectorField::from_fn(&g, |_, o| {
            o[0] = 0.3;
            o[1] = -0.2;
        });
        u0.axpy(1.0, &mean).unwrap();
        let (state, _) = integrate(&u0, 1.0, 0.05, &SolverOptions::default()).unwrap();
        let oracle = oracle_2d_solve(&u0, 1.0, 0.05).unwrap();
        let err = state.u.sub(&oracle).unwrap().sobolev_norm(0.0).unwrap();
        assert!(err <= 1e-6 * u0.sobolev_norm(0.0).unwrap(), "seed {seed}: {err:e}");
    }
}

#[test]
fn symplectic_divergence_is_minus_vorticity() {
    let g = Grid::periodic(1, 32).unwrap();
    let u = random::vector(&g, &mut random::seeded(4), 1.0, 10);
    let zeta = {
        let mut a = spectral::partial_derivative(u.component(1), 0).unwrap();
        a.axpy(-1.0, &spectral::partial_derivative(u.component(0), 1).unwrap()).unwrap();
        a
    };
    let z = sympl_div(&u);
    for (a, b) in z.values().iter().zip(zeta.values()) {
        assert!((a + b).abs() < 1e-12);
    }
}

#[test]
fn disjoint_ratio_edge_cases() {
    let g = boxed(128, 8.0);
    let f = build_bump_potential(&[3.0, 4.0], 0.5, &g).unwrap();
    let h = build_bump_potential(&[5.0, 4.0], 0.5, &g).unwrap();
    let zero = ScalarField::zeros(&g);
    assert!((disjoint_ratio(&f, &zero, 1.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((disjoint_ratio(&f, &h, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn disjoint_probe_constant_is_stable_across_distances() {
    let g = boxed(256, 8.0);
    let sweep = disjoint_support_sweep(1.5, &[0.5, 1.0, 2.0], &g).unwrap();
    assert!(sweep.stability <= 1.2, "{:?}", sweep.ratios);
    assert!(sweep.ratios.iter().all(|&r| r > 1.0 && r < 2.0));
    let s0 = disjoint_support_probe(0.0, 1.0, &g).unwrap();
    assert!((s0 - 2f64.sqrt()).abs() < 1e-12);
    assert!(disjoint_support_probe(1.5, 2.5, &g).is_err());
    assert!(matches!(disjoint_support_probe(1.5, 0.3, &g), Err(Error::ResolutionGuard(_))));
}

#[test]
fn log_probe_basics() {
    let g = Grid::periodic(1, 64).unwrap();
    let zero = log_estimate_probe(&ScalarField::zeros(&g), 3.0).unwrap();
    assert_eq!(zero.lhs, 0.0);
    let f = ScalarField::from_fn(&g, |x| (3.0 * x[0] + 2.0 * x[1]).cos());
    let est = log_estimate_probe(&f, 3.0).unwrap();
    assert!(est.lhs <= f.max_abs() + 1e-12);
    // R_1R_2 has symbol -ξ_1ξ_2/|ξ|² = -6/13 on this mode.
    assert!((est.lhs - 6.0 / 13.0).abs() < 1e-12);
}

#[test]
fn log_probe_constant_is_stable_on_the_lacunary_family() {
    let sweep = log_estimate_sweep(&Grid::periodic(1, 256).unwrap(), 3.0, 6).unwrap();
    assert!(sweep.stability <= 1.2, "{:?}", sweep.constants);
    let lhs: Vec<f64> = sweep.estimates.iter().map(|e| e.lhs).collect();
    assert!(lhs.windows(2).all(|w| w[1] > w[0]), "{lhs:?}");
    assert!(lacunary_family(&Grid::periodic(1, 32).unwrap(), 4).is_err());
}

#[test]
fn commutator_ratios_stay_bounded() {
    let g = Grid::periodic(1, 64).unwrap();
    let u = random::symplectic(&g, &mut random::seeded(2), 2.0, 4);
    let sweep = commutator_sweep(&u, 0, 3.0).unwrap();
    assert_eq!(sweep.ratios.len(), 21);
    assert!(sweep.stability <= 1.2, "{:?}", sweep.ratios);
    assert!(sweep.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
}
