use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use symplab::field::{ScalarField, SkewMatrixField, VectorField};
use symplab::grid::Grid;
use symplab::random;
use symplab::spectral::{self, Norms};
use symplab::symplectic::*;

fn grid(n: usize) -> Grid {
    if n == 1 {
        Grid::periodic(1, 24).unwrap()
    } else {
        Grid::periodic(2, 8).unwrap()
    }
}

fn vec_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_abs()
}

fn skew_diff(a: &SkewMatrixField, b: &SkewMatrixField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b).unwrap();
    d.max_frobenius()
}

fn stream_field(g: &Grid, seed: u64) -> VectorField {
    let psi = random::scalar(g, &mut random::seeded(seed), 2.0, 32);
    sympl_grad(&psi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn p_star_is_the_adjoint_of_p(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let mut rng = random::seeded(seed);
        let x = random::vector(&g, &mut rng, 1.0, 32);
        let y = random::skew(&g, &mut rng, 1.0, 32);
        let lhs = spectral::l2_inner_vector(&apply_p_star(&y), &x);
        let rhs = y.l2_inner(&apply_p(&x));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn p_p_star_is_twice_omega(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let y = random::skew(&g, &mut random::seeded(seed), 1.0, 32);
        let lhs = apply_p(&apply_p_star(&y));
        let mut rhs = omega_two_form(&y);
        for e in rhs.upper_mut() { e.scale(2.0); }
        prop_assert!(skew_diff(&lhs, &rhs) <= 1e-10 * rhs.max_frobenius().max(1.0));
    }

    #[test]
    fn laplacian_of_divergence_matches_divergence_of_omega(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let y = random::skew(&g, &mut random::seeded(seed), 1.0, 32);
        let div_y = divergence_rows(&y);
        let lhs = VectorField::from_components(
            div_y.components().iter().map(|c| spectral::laplacian(c).map(|v| -v)).collect(),
        ).unwrap();
        let rhs = divergence_rows(&omega_two_form(&y));
        prop_assert!(vec_diff(&lhs, &rhs) <= 1e-10 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn p_star_factors_through_the_laplacian(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let y = random::skew(&g, &mut random::seeded(seed), 1.0, 32);
        let direct = apply_p_star(&y);
        let chain = apply_p_star(&apply_p(&direct));
        let chain = VectorField::from_components(
            chain.components().iter().map(|c| spectral::inverse_laplacian(c).map(|v| -0.5 * v)).collect(),
        ).unwrap();
        prop_assert!(vec_diff(&direct, &chain) <= 1e-9 * direct.max_abs());
    }

    #[test]
    fn low_form_is_high_form_plus_q(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let u = random::vector(&g, &mut random::seeded(seed), 1.0, 32);
        let mut lhs = p_low(&u);
        lhs.axpy(-1.0, &p_high(&u)).unwrap();
        let q = q_term(&u);
        prop_assert!(skew_diff(&lhs, &q) <= 1e-10 * q.max_frobenius().max(1.0));
    }

    #[test]
    fn symplectic_gradients_are_symplectic(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let h = random::scalar(&g, &mut random::seeded(seed), 1.0, 32);
        let u = sympl_grad(&h);
        prop_assert!(apply_p(&u).max_frobenius() <= 1e-12 * u.max_abs().max(1.0) * 10.0);
        let lap = spectral::laplacian(&h);
        let sd = sympl_div(&u);
        let err = sd.values().iter().zip(lap.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err <= 1e-11 * lap.max_abs().max(1.0));
    }

    #[test]
    fn high_form_is_p_of_advection_on_symplectic_fields(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let u = random::symplectic(&g, &mut random::seeded(seed), 1.0, 32);
        let lhs = p_high(&u);
        let rhs = apply_p(&advection(&u));
        prop_assert!(skew_diff(&lhs, &rhs) <= 1e-9 * rhs.max_frobenius().max(1.0));
    }

    #[test]
    fn b_is_orthogonal_to_symplectic_fields(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let mut rng = random::seeded(seed);
        let u = random::vector(&g, &mut rng, 1.0, 32);
        let w = random::symplectic(&g, &mut rng, 1.0, 32);
        let b = b_operator(&u, 1.0).unwrap();
        let ip = spectral::l2_inner_vector(&b, &w);
        let scale = b.sobolev_norm(0.0).unwrap() * w.sobolev_norm(0.0).unwrap();
        prop_assert!(ip.abs() <= 1e-9 * scale);
        prop_assert!(sympl_div(&b).max_abs() <= 1e-9 * b.max_abs().max(1.0));
    }

    #[test]
    fn b_ignores_the_cutoff_on_symplectic_fields(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let u = random::symplectic(&g, &mut random::seeded(seed), 1.0, 32);
        let radii = [0.5, 1.0, 2.0, 4.0];
        let bs: Vec<VectorField> = radii.iter().map(|&r| b_operator(&u, r).unwrap()).collect();
        for a in &bs {
            for b in &bs {
                prop_assert!(vec_diff(a, b) <= 1e-9);
            }
        }
    }

    #[test]
    fn trace_form_vanishes_on_symplectic_fields(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let u = random::symplectic(&g, &mut random::seeded(seed), 1.0, 32);
        prop_assert!(trace_form(&u).max_abs() <= 1e-9);
    }

    #[test]
    fn reconstruction_inverts_symplectic_divergence(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let mut u = random::symplectic(&g, &mut random::seeded(seed), 1.0, 32);
        for c in u.components_mut() {
            *c = c.map(|v| v + 0.25);
        }
        let back = reconstruct_velocity(&sympl_div(&u));
        let want = VectorField::from_components(u.components().iter().map(spectral::remove_mean).collect()).unwrap();
        prop_assert!(vec_diff(&back, &want) <= 1e-11);
    }

    #[test]
    fn projection_is_idempotent_and_lands_in_kernel(seed in any::<u64>(), n in 1usize..3) {
        let g = grid(n);
        let u = random::vector(&g, &mut random::seeded(seed), 1.0, 32);
        let p1 = project_symplectic(&u);
        prop_assert!(apply_p(&p1).max_frobenius() <= 1e-9);
        let p2 = project_symplectic(&p1);
        prop_assert!(vec_diff(&p1, &p2) <= 1e-10);
    }

    #[test]
    fn divergence_free_fields_have_no_q(seed in any::<u64>()) {
        let g = grid(1);
        let u = stream_field(&g, seed);
        prop_assert!(q_term(&u).max_frobenius() <= 1e-11 * 10.0);
        prop_assert!(skew_diff(&p_low(&u), &p_high(&u)) <= 1e-9 * p_high(&u).max_frobenius().max(1.0));
    }
}

#[test]
fn constants_are_in_every_kernel() {
    for n in [1, 2] {
        let g = grid(n);
        let c = VectorField::from_fn(&g, |_, o| o.iter_mut().enumerate().for_each(|(i, v)| *v = 0.3 + i as f64));
        assert!(apply_p(&c).max_frobenius() < 1e-12);
        assert!(sympl_div(&c).max_abs() < 1e-12);
        let mut y = SkewMatrixField::zeros(&g);
        for e in y.upper_mut() {
            *e = e.map(|_| 1.5);
        }
        assert!(apply_p_star(&y).max_abs() < 1e-12);
        assert!(omega_two_form(&y).max_frobenius() < 1e-12);
        let zero = VectorField::zeros(&g);
        assert_eq!(p_high(&zero).max_frobenius(), 0.0);
        assert_eq!(p_low(&zero).max_frobenius(), 0.0);
        assert_eq!(q_term(&zero).max_frobenius(), 0.0);
        assert_eq!(b_operator(&zero, 1.0).unwrap().max_abs(), 0.0);
        assert!(b_operator(&zero, 0.0).is_err());
        assert_eq!(reconstruct_velocity(&ScalarField::zeros(&g)).max_abs(), 0.0);
        assert!(sympl_grad(&ScalarField::from_fn(&g, |_| 2.0)).max_abs() < 1e-12);
    }
}

#[test]
fn symplectic_fields_pass_through_projection() {
    let g = grid(1);
    let u = random::symplectic(&g, &mut random::seeded(5), 1.0, 32);
    assert!(vec_diff(&project_symplectic(&u), &u) < 1e-12);
}

#[test]
fn compression_difference_equals_q_for_a_single_mode() {
    let g = grid(1);
    let u = VectorField::from_fn(&g, |x, o| {
        o[0] = x[0].sin();
        o[1] = 0.0;
    });
    let mut diff = p_low(&u);
    diff.axpy(-1.0, &p_high(&u)).unwrap();
    let q = q_term(&u);
    assert!(q.max_frobenius() > 0.1);
    assert!(skew_diff(&diff, &q) < 1e-10);
}

/// Orthogonal projection onto ker P computed from the assembled matrix of P
/// on an N=8 grid, by SVD.
#[test]
fn projection_matches_least_squares_oracle() {
    let g = Grid::periodic(1, 8).unwrap();
    let dim = g.dim();
    let m = dim * g.len();
    let unit = |col: usize| {
        let mut u = VectorField::zeros(&g);
        u.components_mut()[col / g.len()].values_mut()[col % g.len()] = 1.0;
        u
    };
    let rows = g.len();
    let mut pm = DMatrix::<f64>::zeros(rows, m);
    for col in 0..m {
        let p = apply_p(&unit(col));
        for (r, v) in p.upper()[0].values().iter().enumerate() {
            pm[(r, col)] = *v;
        }
    }
    let svd = pm.svd(false, true);
    let vt = svd.v_t.unwrap();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9).count();
    for seed in 0..3 {
        let u = random::vector(&g, &mut random::seeded(seed), 0.0, 8);
        let x = DVector::from_iterator(m, u.components().iter().flat_map(|c| c.values().to_vec()));
        // x minus its component in the row space of P.
        let mut proj = x.clone();
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > 1e-9 {
                let row = vt.row(i).transpose();
                proj -= &row * row.dot(&x);
            }
        }
        assert!(rank > 0);
        let ours = project_symplectic(&u);
        let ours = DVector::from_iterator(m, ours.components().iter().flat_map(|c| c.values().to_vec()));
        assert!((ours - proj).amax() < 1e-12);
    }
}

#[test]
fn commutator_probe_edge_cases() {
    let g = grid(1);
    let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin());
    let zero = VectorField::zeros(&g);
    assert_eq!(riesz_commutator_probe(&zero, &f, 0, 3.0).unwrap(), 0.0);
    let u = random::symplectic(&g, &mut random::seeded(1), 2.0, 4);
    let c = ScalarField::from_fn(&g, |_| 1.0);
    assert!(riesz_commutator_probe(&u, &c, 0, 3.0).unwrap() < 1e-15);
    assert!(riesz_commutator_probe(&u, &ScalarField::zeros(&g), 0, 3.0).is_err());
    assert!(riesz_commutator_probe(&u, &f, 0, 3.0).unwrap() > 0.0);
}
