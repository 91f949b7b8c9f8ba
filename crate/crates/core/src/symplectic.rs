//! Operator calculus of the standard symplectic form on `R^{2n}`.
//!
//! Index conventions are 0-based: `ω` has blocks `[[0, 1], [-1, 0]]` on
//! axes `(2m, 2m+1)`. For an axis `a` its partner is `a ^ 1` and
//! `ω_{partner(a), a} = sign(a)` with `sign(a) = -1` for even `a`.
//! With that notation every `ω^⊤ M − M^⊤ ω` entry reads
//! `sign(a) M_{p(a) b} − sign(b) M_{p(b) a}`.
//!
//! Quadratic operators truncate their input to the two-thirds band and
//! truncate every product, so identities between them hold to roundoff
//! on the retained band.

use crate::error::{Error, Result};
use crate::field::{
    pair_index, pairs, ScalarField, SkewMatrixField, SkewSpectrum, Spectrum, VectorField,
    VectorSpectrum,
};
use crate::grid::Grid;
use crate::spectral::Norms;

#[inline]
pub(crate) fn partner(a: usize) -> usize {
    a ^ 1
}

#[inline]
pub(crate) fn sign(a: usize) -> f64 {
    if a % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// The constant matrix `ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticMatrix {
    pub dim: usize,
}

impl SymplecticMatrix {
    pub fn new(n: usize) -> Self {
        SymplecticMatrix { dim: 2 * n }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j == partner(i) {
            sign(j)
        } else {
            0.0
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

fn d(s: &Spectrum, axis: usize) -> Spectrum {
    s.derivative(axis).expect("axis within grid dimension")
}

fn truncated(u: &VectorSpectrum) -> VectorSpectrum {
    let mut u = u.clone();
    u.dealias();
    u
}

/// `P(X) = ω^⊤J − J^⊤ω` with `J_ij = ∂_j X_i`.
pub fn p_spec(x: &VectorSpectrum) -> SkewSpectrum {
    let grid = x.grid().clone();
    let dim = grid.dim();
    let upper = pairs(dim)
        .map(|(a, b)| {
            let mut e = d(x.component(partner(a)), b);
            e.scale(sign(a));
            e.axpy(-sign(b), &d(x.component(partner(b)), a)).unwrap();
            e
        })
        .collect();
    SkewSpectrum::from_upper(&grid, upper).unwrap()
}

/// Row divergence `div(Y)_m = Σ_i ∂_i Y_im`.
pub fn div_spec(y: &SkewSpectrum) -> VectorSpectrum {
    let grid = y.grid().clone();
    let dim = grid.dim();
    let comps = (0..dim)
        .map(|m| {
            let mut acc = Spectrum::zeros(&grid);
            for i in (0..dim).filter(|&i| i != m) {
                let mut e = y.upper()[pair_index(dim, i.min(m), i.max(m))].clone();
                if i > m {
                    e.scale(-1.0);
                }
                acc.axpy(1.0, &d(&e, i)).unwrap();
            }
            acc
        })
        .collect();
    VectorSpectrum::from_components(comps).unwrap()
}

/// `P*(Y) = −2 div(Y)·ω`.
pub fn p_star_spec(y: &SkewSpectrum) -> VectorSpectrum {
    let dv = div_spec(y);
    let comps = (0..y.grid().dim())
        .map(|k| {
            let mut c = dv.component(partner(k)).clone();
            c.scale(-2.0 * sign(k));
            c
        })
        .collect();
    VectorSpectrum::from_components(comps).unwrap()
}

/// `Ω_kl = ∂_l div(Y)_k − ∂_k div(Y)_l`.
pub fn omega_spec(y: &SkewSpectrum) -> SkewSpectrum {
    let grid = y.grid().clone();
    let dv = div_spec(y);
    let upper = pairs(grid.dim())
        .map(|(k, l)| {
            let mut e = d(dv.component(k), l);
            e.axpy(-1.0, &d(dv.component(l), k)).unwrap();
            e
        })
        .collect();
    SkewSpectrum::from_upper(&grid, upper).unwrap()
}

/// Physical samples of `u` and `J_ij = ∂_j u_i` from a truncated spectrum,
/// shared by every quadratic operator.
pub struct Kinematics {
    grid: Grid,
    u: Vec<Vec<f64>>,
    jac: Vec<Vec<f64>>,
}

impl Kinematics {
    /// `u` is truncated to the two-thirds band first.
    pub fn new(u: &VectorSpectrum) -> Self {
        let u = truncated(u);
        let grid = u.grid().clone();
        let dim = grid.dim();
        let phys = u.components().iter().map(|c| c.to_field().into_values()).collect();
        let mut jac = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                jac.push(d(u.component(i), j).to_field().into_values());
            }
        }
        Kinematics { grid, u: phys, jac }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    fn j(&self, i: usize, k: usize) -> &[f64] {
        &self.jac[i * self.grid.dim() + k]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    pub fn jacobian(&self, i: usize, j: usize) -> &[f64] {
        self.j(i, j)
    }

    fn product(&self, values: Vec<f64>) -> Spectrum {
        let mut s = ScalarField::from_values(&self.grid, values).unwrap().spectrum();
        s.dealias();
        s
    }

    /// `((u·∇)u)_i = Σ_k u_k ∂_k u_i`.
    pub fn advection(&self) -> VectorSpectrum {
        let dim = self.grid.dim();
        let comps = (0..dim)
            .map(|i| {
                let mut v = vec![0.0; self.grid.len()];
                for k in 0..dim {
                    for ((o, a), b) in v.iter_mut().zip(&self.u[k]).zip(self.j(i, k)) {
                        *o += a * b;
                    }
                }
                self.product(v)
            })
            .collect();
        VectorSpectrum::from_components(comps).unwrap()
    }

    /// `P_H(u)`: skew part of `M = J²`.
    pub fn p_high(&self) -> SkewSpectrum {
        let dim = self.grid.dim();
        let npts = self.grid.len();
        let m_entry = |i: usize, j: usize, p: usize| -> f64 {
            (0..dim).map(|k| self.j(i, k)[p] * self.j(k, j)[p]).sum()
        };
        let upper = pairs(dim)
            .map(|(a, b)| {
                let (pa, pb) = (partner(a), partner(b));
                let v = (0..npts)
                    .map(|p| sign(a) * m_entry(pa, b, p) - sign(b) * m_entry(pb, a, p))
                    .collect();
                self.product(v)
            })
            .collect();
        SkewSpectrum::from_upper(&self.grid, upper).unwrap()
    }

    /// `P_L(u)`: skew part of `M̃_ij = Σ_k ∂_k(∂_j u_k u_i)`, in conservative form.
    pub fn p_low(&self) -> SkewSpectrum {
        let dim = self.grid.dim();
        let npts = self.grid.len();
        let upper = pairs(dim)
            .map(|(a, b)| {
                let (ua, ub) = (&self.u[partner(a)], &self.u[partner(b)]);
                let mut acc = Spectrum::zeros(&self.grid);
                for k in 0..dim {
                    let (jkb, jka) = (self.j(k, b), self.j(k, a));
                    let v = (0..npts)
                        .map(|p| sign(a) * ua[p] * jkb[p] - sign(b) * ub[p] * jka[p])
                        .collect();
                    acc.axpy(1.0, &d(&self.product(v), k)).unwrap();
                }
                acc
            })
            .collect();
        SkewSpectrum::from_upper(&self.grid, upper).unwrap()
    }

    /// `Q(u)`: skew part of `u_i ∂_j div u`.
    pub fn q_term(&self) -> SkewSpectrum {
        let dim = self.grid.dim();
        let npts = self.grid.len();
        let div: Vec<f64> = (0..npts).map(|p| (0..dim).map(|k| self.j(k, k)[p]).sum()).collect();
        let div = ScalarField::from_values(&self.grid, div).unwrap().spectrum();
        let grad_div: Vec<Vec<f64>> = (0..dim).map(|j| d(&div, j).to_field().into_values()).collect();
        let upper = pairs(dim)
            .map(|(a, b)| {
                let (ua, ub) = (&self.u[partner(a)], &self.u[partner(b)]);
                let v = (0..npts)
                    .map(|p| sign(a) * ua[p] * grad_div[b][p] - sign(b) * ub[p] * grad_div[a][p])
                    .collect();
                self.product(v)
            })
            .collect();
        SkewSpectrum::from_upper(&self.grid, upper).unwrap()
    }

    /// `B(u) = −½Δ^{-1} P*[(1−χ)P_H + χP_L]` with `χ` the ball of `cutoff_radius`.
    pub fn b_operator(&self, cutoff_radius: f64) -> VectorSpectrum {
        let grid = self.grid.clone();
        let xi_sq = grid.xi_sq();
        let r2 = cutoff_radius * cutoff_radius;
        let mut z = self.p_high();
        // The zero mode is annihilated by P*, so χP_L only matters if the
        // ball holds another lattice frequency.
        if xi_sq.iter().any(|&x| x > 0.0 && x <= r2) {
            let low = self.p_low();
            for (zh, zl) in z.upper_mut().iter_mut().zip(low.upper()) {
                for ((c, l), &x) in zh.coeffs_mut().iter_mut().zip(zl.coeffs()).zip(xi_sq) {
                    if x <= r2 {
                        *c = *l;
                    }
                }
            }
        }
        let mut out = p_star_spec(&z);
        for c in out.components_mut() {
            *c = c.inverse_laplacian();
            c.scale(-0.5);
        }
        out
    }
}

fn check_cutoff(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("cutoff radius must be positive, got {r}")))
    }
}

pub fn apply_p(x: &VectorField) -> SkewMatrixField {
    p_spec(&x.spectrum()).to_field()
}

pub fn apply_p_star(y: &SkewMatrixField) -> VectorField {
    p_star_spec(&y.spectrum()).to_field()
}

pub fn omega_two_form(y: &SkewMatrixField) -> SkewMatrixField {
    omega_spec(&y.spectrum()).to_field()
}

pub fn divergence_rows(y: &SkewMatrixField) -> VectorField {
    div_spec(&y.spectrum()).to_field()
}

pub fn p_high(u: &VectorField) -> SkewMatrixField {
    Kinematics::new(&u.spectrum()).p_high().to_field()
}

pub fn p_low(u: &VectorField) -> SkewMatrixField {
    Kinematics::new(&u.spectrum()).p_low().to_field()
}

pub fn q_term(u: &VectorField) -> SkewMatrixField {
    Kinematics::new(&u.spectrum()).q_term().to_field()
}

pub fn advection(u: &VectorField) -> VectorField {
    Kinematics::new(&u.spectrum()).advection().to_field()
}

pub fn b_operator(u: &VectorField, cutoff_radius: f64) -> Result<VectorField> {
    check_cutoff(cutoff_radius)?;
    Ok(Kinematics::new(&u.spectrum()).b_operator(cutoff_radius).to_field())
}

/// `(∇_ω H)_{2m} = ∂_{2m+1}H`, `(∇_ω H)_{2m+1} = −∂_{2m}H`.
pub fn sympl_grad_spec(h: &Spectrum) -> VectorSpectrum {
    let comps = (0..h.grid().dim())
        .map(|k| {
            let mut c = d(h, partner(k));
            c.scale(-sign(k));
            c
        })
        .collect();
    VectorSpectrum::from_components(comps).unwrap()
}

/// `∇_ω·u = Σ_m ∂_{2m+1}u_{2m} − ∂_{2m}u_{2m+1}`.
pub fn sympl_div_spec(u: &VectorSpectrum) -> Spectrum {
    let mut acc = Spectrum::zeros(u.grid());
    for k in 0..u.grid().dim() {
        acc.axpy(-sign(k), &d(u.component(k), partner(k))).unwrap();
    }
    acc
}

pub fn sympl_grad(h: &ScalarField) -> VectorField {
    sympl_grad_spec(&h.spectrum()).to_field()
}

pub fn sympl_div(u: &VectorField) -> ScalarField {
    sympl_div_spec(&u.spectrum()).to_field()
}

/// `u = −(−Δ)^{-1}∇_ω ζ`; the zero mode of `ζ` is discarded.
pub fn reconstruct_velocity_spec(zeta: &Spectrum) -> VectorSpectrum {
    sympl_grad_spec(&zeta.inverse_laplacian())
}

pub fn reconstruct_velocity(zeta: &ScalarField) -> VectorField {
    reconstruct_velocity_spec(&zeta.spectrum()).to_field()
}

/// `u + ½Δ^{-1}P*P(u)`; the zero mode passes through.
pub fn project_symplectic_spec(u: &VectorSpectrum) -> VectorSpectrum {
    let corr = p_star_spec(&p_spec(u));
    let mut out = u.clone();
    for (o, c) in out.components_mut().iter_mut().zip(corr.components()) {
        o.axpy(0.5, &c.inverse_laplacian()).unwrap();
    }
    out
}

pub fn project_symplectic(u: &VectorField) -> VectorField {
    project_symplectic_spec(&u.spectrum()).to_field()
}

/// `‖[u·∇, R_j]f‖_{L²} / (‖u‖_{H^s} ‖f‖_{L²})` with truncated products.
///
/// Returns 0 for `u = 0`; a vanishing `f` is an error.
pub fn riesz_commutator_probe(u: &VectorField, f: &ScalarField, axis: usize, s: f64) -> Result<f64> {
    f.grid().check_axis(axis)?;
    let fnorm = f.sobolev_norm(0.0)?;
    if fnorm == 0.0 {
        return Err(Error::invalid("commutator probe needs a nonzero f"));
    }
    let unorm = u.sobolev_norm(s)?;
    if unorm == 0.0 {
        return Ok(0.0);
    }
    let fs = f.spectrum();
    let mut comm = transport(u, &fs.riesz(axis)?);
    comm.axpy(-1.0, &transport(u, &fs).riesz(axis)?)?;
    Ok(comm.sobolev_norm_sq(0.0)?.sqrt() / (unorm * fnorm))
}

/// Truncated `u·∇g`.
fn transport(u: &VectorField, g: &Spectrum) -> Spectrum {
    let grid = g.grid().clone();
    let mut g = g.clone();
    g.dealias();
    let mut us = u.spectrum();
    us.dealias();
    let mut v = vec![0.0; grid.len()];
    for k in 0..grid.dim() {
        let uk = us.component(k).to_field();
        let gk = d(&g, k).to_field();
        for ((o, a), b) in v.iter_mut().zip(uk.values()).zip(gk.values()) {
            *o += a * b;
        }
    }
    let mut s = ScalarField::from_values(&grid, v).unwrap().spectrum();
    s.dealias();
    s
}

/// Pointwise `tr(ω · (du)^⊤ · (du)^⊤)` with `(du)_ij = ∂_j u_i`.
pub fn trace_form(u: &VectorField) -> ScalarField {
    let k = Kinematics::new(&u.spectrum());
    let dim = u.grid().dim();
    let om = SymplecticMatrix { dim };
    let vals = (0..u.grid().len())
        .map(|p| {
            // (J^⊤J^⊤)_ba = Σ_c J_cb J_ac
            let mut tr = 0.0;
            for a in 0..dim {
                let b = partner(a);
                let jtjt: f64 = (0..dim).map(|c| k.j(c, b)[p] * k.j(a, c)[p]).sum();
                tr += om.entry(a, b) * jtjt;
            }
            tr
        })
        .collect();
    ScalarField::from_values(u.grid(), vals).unwrap()
}
