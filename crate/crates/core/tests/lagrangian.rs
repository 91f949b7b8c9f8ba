use symplab::eulerian::{cfl_time_step, integrate_with, SolverOptions};
use symplab::field::{ScalarField, VectorField};
use symplab::grid::Grid;
use symplab::lagrangian::*;
use symplab::random;
use symplab::spectral::Norms;
use symplab::symplectic::{b_operator, sympl_div};
use symplab::Error;

fn shear(g: &Grid) -> VectorField {
    VectorField::from_fn(g, |x, o| {
        o[0] = x[1].sin();
        o[1] = 0.0;
    })
}

fn small_map(g: &Grid, seed: u64, amp: f64) -> DiffeoMap {
    DiffeoMap::from_displacement(random::vector(g, &mut random::seeded(seed), 3.0, 3).scaled(amp))
}

#[test]
fn composition_basics() {
    let g = Grid::periodic(1, 128).unwrap();
    let c = ScalarField::from_fn(&g, |_| 1.75);
    let phi = small_map(&g, 3, 0.2);
    assert!(compose_scalar(&c, &phi).values().iter().all(|v| (v - 1.75).abs() < 1e-13));
    let f = ScalarField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).cos());
    let same = compose_scalar(&f, &DiffeoMap::identity(&g));
    assert!(same.values().iter().zip(f.values()).all(|(a, b)| (a - b).abs() < 1e-14));
    let a = 0.37;
    let s = ScalarField::from_fn(&g, |x| x[0].sin());
    let moved = compose_scalar(&s, &DiffeoMap::translation(&g, &[a, 0.0]));
    let want = ScalarField::from_fn(&g, |x| (x[0] + a).sin());
    let err = moved.values().iter().zip(want.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn inversion_contract() {
    let g = Grid::periodic(1, 32).unwrap();
    let id = DiffeoMap::identity(&g);
    assert_eq!(invert(&id, 1e-10, 200).unwrap().displacement().max_abs(), 0.0);
    let tr = DiffeoMap::translation(&g, &[0.4, -1.3]);
    let back = invert(&tr, 1e-10, 200).unwrap();
    assert!(back.max_distance(&DiffeoMap::translation(&g, &[-0.4, 1.3])).unwrap() < 1e-10);
    for seed in 0..3 {
        let phi = small_map(&g, seed, 0.3);
        assert!(phi.jacobian_determinant().values().iter().all(|&d| d > 0.0));
        let inv = invert(&phi, 1e-10, 200).unwrap();
        let round = compose_maps(&phi, &inv, Default::default());
        assert!(round.displacement().max_abs() <= 1e-9);
    }
    let wild = small_map(&g, 1, 5.0);
    assert!(matches!(invert(&wild, 1e-10, 200), Err(Error::NotContractive { .. })));
    let slow = small_map(&g, 2, 0.3);
    assert!(matches!(invert(&slow, 1e-10, 2), Err(Error::InversionFailed { .. })));
}

#[test]
fn geodesic_spray_special_cases() {
    let g = Grid::periodic(1, 32).unwrap();
    let phi = small_map(&g, 4, 0.2);
    let (dphi, dv) = geodesic_rhs(&phi, &VectorField::zeros(&g), 1.0).unwrap();
    assert_eq!(dphi.max_abs(), 0.0);
    assert!(dv.max_abs() < 1e-15);
    let v = random::vector(&g, &mut random::seeded(8), 2.0, 6);
    let (_, f) = geodesic_rhs(&DiffeoMap::identity(&g), &v, 1.0).unwrap();
    assert!(f.sub(&b_operator(&v, 1.0).unwrap()).unwrap().max_abs() < 1e-12);
    let s = shear(&g);
    let (dphi, dv) = geodesic_rhs(&DiffeoMap::identity(&g), &s, 1.0).unwrap();
    assert!(dphi.sub(&s).unwrap().max_abs() == 0.0);
    assert!(dv.max_abs() < 1e-13);
}

#[test]
fn zero_velocity_geodesic_stays_at_identity() {
    let g = Grid::periodic(1, 16).unwrap();
    let st = geodesic_integrate(&VectorField::zeros(&g), 1.0, 0.25, &GeodesicOptions::default()).unwrap();
    assert_eq!(st.phi.displacement().max_abs(), 0.0);
    assert_eq!(st.v.max_abs(), 0.0);
    assert_eq!(exp_map(&VectorField::zeros(&g), 0.5, &GeodesicOptions::default()).unwrap().displacement().max_abs(), 0.0);
}

#[test]
fn shear_characteristics() {
    let g = Grid::periodic(1, 32).unwrap();
    let u0 = shear(&g).scaled(0.5);
    let t = 1.0;
    let st = geodesic_integrate(&u0, t, 0.05, &GeodesicOptions::default()).unwrap();
    let want = VectorField::from_fn(&g, |x, o| {
        o[0] = 0.5 * t * x[1].sin();
        o[1] = 0.0;
    });
    assert!(st.phi.displacement().sub(&want).unwrap().max_abs() < 1e-10);
    assert!(st.v.sub(&u0).unwrap().max_abs() < 1e-10);
    let traj = vec![u0.clone(); 21];
    let flow = flow_from_velocity(&traj, 0.05).unwrap();
    assert!(flow.displacement().sub(&want).unwrap().max_abs() < 1e-10);
    assert_eq!(flow_from_velocity(&vec![VectorField::zeros(&g); 3], 0.5).unwrap().displacement().max_abs(), 0.0);
}

#[test]
fn exp_derivative_at_zero_is_identity() {
    let g = Grid::periodic(1, 32).unwrap();
    let w = random::symplectic(&g, &mut random::seeded(2), 2.0, 4);
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let phi = exp_map(&w.scaled(eps), 0.1, &GeodesicOptions::default()).unwrap();
            phi.displacement().scaled(1.0 / eps).sub(&w).unwrap().max_abs()
        })
        .collect();
    for pair in errs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(ratio > 1.8 && ratio < 2.2, "{errs:?}");
    }
}

#[test]
fn exp_of_scaled_velocity_is_the_geodesic_at_that_time() {
    let g = Grid::periodic(1, 32).unwrap();
    let u0 = random::symplectic(&g, &mut random::seeded(6), 2.0, 4).scaled(0.5);
    let opts = GeodesicOptions::default();
    let half = geodesic_integrate(&u0, 0.5, 0.05, &opts).unwrap();
    let e = exp_map(&u0.scaled(0.5), 0.1, &opts).unwrap();
    assert!(e.max_distance(&half.phi).unwrap() <= 1e-6);
}

#[test]
fn group_scaling_law() {
    let g = Grid::periodic(1, 32).unwrap();
    let u0 = random::symplectic(&g, &mut random::seeded(12), 2.0, 4).scaled(0.25);
    let opts = GeodesicOptions::default();
    let base = geodesic_integrate(&u0, 1.0, 0.1, &opts).unwrap();
    for lambda in [0.5, 2.0] {
        let st = geodesic_integrate(&u0.scaled(lambda), 1.0 / lambda, 0.1 / lambda, &opts).unwrap();
        assert!(st.phi.max_distance(&base.phi).unwrap() <= 1e-6);
    }
}

#[test]
fn flows_of_symplectic_fields_preserve_volume_and_divergence() {
    let g = Grid::periodic(1, 48).unwrap();
    let u0 = random::symplectic(&g, &mut random::seeded(30), 2.0, 4).scaled(0.25);
    let dt = cfl_time_step(&u0, 1.0, 0.5);
    let mut traj = Vec::new();
    integrate_with(&u0, 1.0, dt, &SolverOptions::default(), &[], |_, u| traj.push(u.to_field())).unwrap();
    let phi = flow_from_velocity(&traj, dt).unwrap();
    let det = phi.jacobian_determinant();
    let worst = det.values().iter().fold(0.0f64, |m, d| m.max((d - 1.0).abs()));
    assert!(worst <= 1e-6, "{worst:e}");

    let opts = GeodesicOptions::default();
    let st = geodesic_integrate(&u0, 1.0, dt, &opts).unwrap();
    let u1 = eulerian_velocity(&st, &opts).unwrap();
    let carried = compose_scalar(&sympl_div(&u1), &st.phi);
    let mut diff = carried.clone();
    diff.axpy(-1.0, &sympl_div(&u0)).unwrap();
    let rel = diff.sobolev_norm(0.0).unwrap() / sympl_div(&u0).sobolev_norm(0.0).unwrap();
    assert!(rel <= 1e-3, "{rel:e}");
    assert!(st.phi.max_distance(&phi).unwrap() <= 1e-3);
}

#[test]
fn residual_vanishes_on_isometries() {
    let g = Grid::periodic(1, 16).unwrap();
    assert_eq!(symplectic_residual(&DiffeoMap::identity(&g)), 0.0);
    assert!(symplectic_residual(&DiffeoMap::translation(&g, &[0.3, 0.9])) < 1e-14);
}
