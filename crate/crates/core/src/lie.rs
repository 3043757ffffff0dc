//! The compact group `K = SU(2) × iℝ` inside `G = SL₂(ℂ) × ℂ`.
//!
//! Group law `(A, z)(B, w) = (AB, z + w)`. The Lagrangian subgroups are
//! `G₋ = {([[e^{iz}, w], [0, e^{−iz}]], z)}` and
//! `G₊ = {([[e^{−iz}, 0], [w, e^{iz}]], z)}`; `G = G±·K` globally.
//! Tangent vectors are right-trivialized: `ξ = ġ g⁻¹`.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector4};
use serde::Serialize;

use crate::chart::{self, FdConfig, MatrixField};
use crate::point::BihermitianPoint;
use crate::rng::{normal, normal_c, Stream};
use crate::{Error, Result, C64, RMat};

pub type M2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I_UNIT: C64 = C64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> M2 {
    M2::new(a, b, cc, d)
}

fn inv2(a: &M2) -> M2 {
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    m2(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]) / det
}

fn max_abs2(a: &M2) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Which Lagrangian subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Element of the Lie algebra `𝔤 = 𝔰𝔩₂(ℂ) ⊕ ℂ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgVec {
    pub x: M2,
    pub u: C64,
}

impl AlgVec {
    pub fn new(x: M2, u: C64) -> Result<Self> {
        let tr = (x[(0, 0)] + x[(1, 1)]).norm();
        if tr > 1e-12 * max_abs2(&x).max(1.0) {
            return Err(Error::InvalidArgument(format!("trace {tr:.3e} is not zero")));
        }
        Ok(Self { x, u })
    }

    pub fn zero() -> Self {
        Self { x: M2::zeros(), u: ZERO }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            x: self.x + o.x,
            u: self.u + o.u,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            x: self.x - o.x,
            u: self.u - o.u,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            x: self.x * s,
            u: self.u * s,
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn bracket(&self, o: &Self) -> Self {
        Self {
            x: self.x * o.x - o.x * self.x,
            u: ZERO,
        }
    }

    pub fn norm(&self) -> f64 {
        max_abs2(&self.x).max(self.u.norm())
    }

    /// Distance from `𝔨 = 𝔰𝔲(2) ⊕ iℝ`.
    pub fn k_residual(&self) -> f64 {
        max_abs2(&(self.x + self.x.adjoint())).max(self.u.re.abs())
    }

    /// `dΘ(X, u) = (−X†, −ū)`.
    pub fn d_theta(&self) -> Self {
        Self {
            x: -self.x.adjoint(),
            u: -self.u.conj(),
        }
    }

    /// Distance from the subalgebra `𝔤±`.
    pub fn subalgebra_residual(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.x[(1, 0)].norm().max((self.x[(0, 0)] - I_UNIT * self.u).norm()),
            Side::Plus => self.x[(0, 1)].norm().max((self.x[(0, 0)] + I_UNIT * self.u).norm()),
        }
    }

    /// Real coordinates `(Re X₁₁, Im X₁₁, Re X₁₂, Im X₁₂, Re X₂₁, Im X₂₁, Re u, Im u)`.
    pub fn to_real(&self) -> [f64; 8] {
        [
            self.x[(0, 0)].re,
            self.x[(0, 0)].im,
            self.x[(0, 1)].re,
            self.x[(0, 1)].im,
            self.x[(1, 0)].re,
            self.x[(1, 0)].im,
            self.u.re,
            self.u.im,
        ]
    }

    pub fn from_real(p: &[f64]) -> Self {
        let d = c(p[0], p[1]);
        Self {
            x: m2(d, c(p[2], p[3]), c(p[4], p[5]), -d),
            u: c(p[6], p[7]),
        }
    }

    pub fn random(rng: &mut Stream) -> Self {
        let d = normal_c(rng);
        Self {
            x: m2(d, normal_c(rng), normal_c(rng), -d),
            u: normal_c(rng),
        }
    }
}

/// `s_ℂ((X,u),(Y,v)) = −½ tr(XY) − uv`.
pub fn pairing(a: &AlgVec, b: &AlgVec) -> C64 {
    -(a.x * b.x).trace() * 0.5 - a.u * b.u
}

pub fn s_real(a: &AlgVec, b: &AlgVec) -> f64 {
    pairing(a, b).re
}

pub fn s_imag(a: &AlgVec, b: &AlgVec) -> f64 {
    pairing(a, b).im
}

/// Basis `(u₁, u₂, u₃, v)` of `𝔨`; orthonormal for `s_R`.
pub fn k_basis() -> [AlgVec; 4] {
    [
        AlgVec { x: m2(ZERO, I_UNIT, I_UNIT, ZERO), u: ZERO },
        AlgVec { x: m2(ZERO, -ONE, ONE, ZERO), u: ZERO },
        AlgVec { x: m2(I_UNIT, ZERO, ZERO, -I_UNIT), u: ZERO },
        AlgVec { x: M2::zeros(), u: I_UNIT },
    ]
}

/// Real basis of `𝔤±`: `H, iH, E, iE` with `H = (∓diag(i,−i), 1)` and `E`
/// the off-diagonal generator.
pub fn subalgebra_basis(side: Side) -> [AlgVec; 4] {
    let (h, e) = match side {
        Side::Minus => (
            AlgVec { x: m2(I_UNIT, ZERO, ZERO, -I_UNIT), u: ONE },
            AlgVec { x: m2(ZERO, ONE, ZERO, ZERO), u: ZERO },
        ),
        Side::Plus => (
            AlgVec { x: m2(-I_UNIT, ZERO, ZERO, I_UNIT), u: ONE },
            AlgVec { x: m2(ZERO, ZERO, ONE, ZERO), u: ZERO },
        ),
    };
    [h, h.scale(I_UNIT), e, e.scale(I_UNIT)]
}

/// Linear combination of a real basis.
pub fn combo(basis: &[AlgVec], coeffs: &[f64]) -> AlgVec {
    basis
        .iter()
        .zip(coeffs)
        .fold(AlgVec::zero(), |acc, (b, s)| acc.add(&b.scale_re(*s)))
}

/// Coordinates of `a ∈ 𝔨` in [`k_basis`].
pub fn k_coords(a: &AlgVec) -> Vector4<f64> {
    let b = k_basis();
    Vector4::new(s_real(a, &b[0]), s_real(a, &b[1]), s_real(a, &b[2]), s_real(a, &b[3]))
}

pub fn from_k_coords(v: &[f64]) -> AlgVec {
    combo(&k_basis(), v)
}

/// Matrix of the complex structure on `𝔨` in [`k_basis`]:
/// `I u₁ = u₂`, `I u₂ = −u₁`, `I u₃ = v`, `I v = −u₃`.
pub fn algebra_i_matrix() -> RMat {
    let mut m = RMat::zeros(4, 4);
    m[(1, 0)] = 1.0;
    m[(0, 1)] = -1.0;
    m[(3, 2)] = 1.0;
    m[(2, 3)] = -1.0;
    m
}

/// The complex structure on `𝔨`.
pub fn algebra_i(a: &AlgVec) -> Result<AlgVec> {
    let r = a.k_residual();
    if r > 1e-10 {
        return Err(Error::NotInSubgroup(r));
    }
    let v = k_coords(a);
    let w = algebra_i_matrix() * nalgebra::DVector::from_column_slice(v.as_slice());
    Ok(from_k_coords(w.as_slice()))
}

/// `ad_a` on `𝔨` in [`k_basis`].
pub fn ad_matrix(a: &AlgVec) -> RMat {
    let b = k_basis();
    RMat::from_fn(4, 4, |i, j| k_coords(&a.bracket(&b[j]))[i])
}

/// Closed-form `exp` of a traceless 2×2 matrix: `cosh(s) + sinh(s)/s · X`
/// with `s² = −det X`, and a series for small `s`.
pub fn exp_sl2(x: &M2) -> M2 {
    let d = -(x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]);
    let (ch, sh) = if d.norm() < 1e-4 {
        let mut ch = ZERO;
        let mut sh = ZERO;
        let mut term = ONE;
        for k in 0..10 {
            ch += term / fact(2 * k);
            sh += term / fact(2 * k + 1);
            term *= d;
        }
        (ch, sh)
    } else {
        let s = d.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    M2::identity() * ch + x * sh
}

fn fact(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Element of `G = SL₂(ℂ) × ℂ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GElem {
    pub a: M2,
    pub z: C64,
}

impl GElem {
    pub fn new(a: M2, z: C64) -> Result<Self> {
        let r = (a.determinant() - ONE).norm();
        if r > 1e-12 * max_abs2(&a).max(1.0).powi(2) {
            return Err(Error::InvalidArgument(format!("det A − 1 = {r:.3e}")));
        }
        Ok(Self { a, z })
    }

    pub fn identity() -> Self {
        Self {
            a: M2::identity(),
            z: ZERO,
        }
    }

    pub fn exp(v: &AlgVec) -> Self {
        Self {
            a: exp_sl2(&v.x),
            z: v.u,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            a: self.a * o.a,
            z: self.z + o.z,
        }
    }

    pub fn inv(&self) -> Self {
        Self {
            a: inv2(&self.a),
            z: -self.z,
        }
    }

    pub fn dist(&self, o: &Self) -> f64 {
        max_abs2(&(self.a - o.a)).max((self.z - o.z).norm())
    }

    /// `Θ(A, z) = ((A†)⁻¹, −z̄)`.
    pub fn theta(&self) -> Self {
        Self {
            a: inv2(&self.a.adjoint()),
            z: -self.z.conj(),
        }
    }

    pub fn ad(&self, v: &AlgVec) -> AlgVec {
        AlgVec {
            x: self.a * v.x * inv2(&self.a),
            u: v.u,
        }
    }

    /// `G₋ ∋ ([[e^{iz}, w], [0, e^{−iz}]], z)`.
    pub fn g_minus(z: C64, w: C64) -> Self {
        Self {
            a: m2((I_UNIT * z).exp(), w, ZERO, (-I_UNIT * z).exp()),
            z,
        }
    }

    /// `G₊ ∋ ([[e^{−iz}, 0], [w, e^{iz}]], z)`.
    pub fn g_plus(z: C64, w: C64) -> Self {
        Self {
            a: m2((-I_UNIT * z).exp(), ZERO, w, (I_UNIT * z).exp()),
            z,
        }
    }

    pub fn in_subgroup(side: Side, z: C64, w: C64) -> Self {
        match side {
            Side::Minus => Self::g_minus(z, w),
            Side::Plus => Self::g_plus(z, w),
        }
    }

    /// Membership equations of `G±`, as complex residuals.
    pub fn subgroup_equations(&self, side: Side) -> [C64; 2] {
        match side {
            Side::Minus => [self.a[(1, 0)], self.a[(0, 0)] * (-I_UNIT * self.z).exp() - ONE],
            Side::Plus => [self.a[(0, 1)], self.a[(0, 0)] * (I_UNIT * self.z).exp() - ONE],
        }
    }

    pub fn subgroup_residual(&self, side: Side) -> f64 {
        let [p, q] = self.subgroup_equations(side);
        p.norm().max(q.norm())
    }

    pub fn random(rng: &mut Stream, scale: f64) -> Self {
        Self::exp(&AlgVec::random(rng).scale_re(scale))
    }
}

/// Element of `K = SU(2) × iℝ`; `t` is the real coordinate, `z = it`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KElem {
    pub u: M2,
    pub t: f64,
}

impl KElem {
    pub fn new(u: M2, t: f64) -> Result<Self> {
        let r = max_abs2(&(u * u.adjoint() - M2::identity())).max((u.determinant() - ONE).norm());
        if r > 1e-12 {
            return Err(Error::NotInSubgroup(r));
        }
        Ok(Self { u, t })
    }

    pub fn identity() -> Self {
        Self {
            u: M2::identity(),
            t: 0.0,
        }
    }

    pub fn to_g(&self) -> GElem {
        GElem {
            a: self.u,
            z: c(0.0, self.t),
        }
    }

    /// Projection of a `G` element lying in `K`.
    pub fn from_g(g: &GElem) -> Result<Self> {
        let r = max_abs2(&(g.a * g.a.adjoint() - M2::identity())).max(g.z.re.abs());
        if r > 1e-9 {
            return Err(Error::NotInSubgroup(r));
        }
        Ok(Self { u: g.a, t: g.z.im })
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            u: self.u * o.u,
            t: self.t + o.t,
        }
    }

    pub fn inv(&self) -> Self {
        Self {
            u: self.u.adjoint(),
            t: -self.t,
        }
    }

    /// Uniform `SU(2)` factor from a random unit quaternion.
    pub fn random(rng: &mut Stream) -> Self {
        let mut q = [normal(rng), normal(rng), normal(rng), normal(rng)];
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.iter_mut().for_each(|x| *x /= n);
        Self {
            u: m2(c(q[0], q[1]), c(-q[2], q[3]), c(q[2], q[3]), c(q[0], -q[1])),
            t: normal(rng),
        }
    }

    /// `Ad_k` on `𝔨` in [`k_basis`].
    pub fn ad_matrix(&self) -> RMat {
        let b = k_basis();
        let g = self.to_g();
        RMat::from_fn(4, 4, |i, j| k_coords(&g.ad(&b[j]))[i])
    }
}

/// Phase matrix `diag(e^{iθ}, e^{−iθ})`.
fn phase(theta: f64) -> M2 {
    m2(c(0.0, theta).exp(), ZERO, ZERO, c(0.0, -theta).exp())
}

/// `g = b·k` with `b ∈ G±` and `k ∈ K`.
pub fn factorize(g: &GElem, side: Side) -> (GElem, KElem) {
    let a = g.a;
    match side {
        Side::Minus => {
            // A = R U with R upper triangular, positive diagonal (RQ by Gram–Schmidt on rows from the bottom)
            let r2 = a.row(1).into_owned();
            let n2 = r2.norm();
            let q2 = r2 / c(n2, 0.0);
            let r1 = a.row(0).into_owned();
            let p = (r1 * q2.adjoint())[(0, 0)];
            let v1 = r1 - q2 * p;
            let n1 = v1.norm();
            let q1 = v1 / c(n1, 0.0);
            let r = m2(c(n1, 0.0), p, ZERO, c(n2, 0.0));
            let u = M2::from_rows(&[q1, q2]);
            let zb = c(g.z.re, -n1.ln());
            let d = phase(g.z.re);
            let b = GElem { a: r * d, z: zb };
            let k = KElem {
                u: phase(-g.z.re) * u,
                t: (g.z - zb).im,
            };
            (b, k)
        }
        Side::Plus => {
            // A = L U with L lower triangular, positive diagonal
            let r1 = a.row(0).into_owned();
            let n1 = r1.norm();
            let q1 = r1 / c(n1, 0.0);
            let r2 = a.row(1).into_owned();
            let p = (r2 * q1.adjoint())[(0, 0)];
            let v2 = r2 - q1 * p;
            let n2 = v2.norm();
            let q2 = v2 / c(n2, 0.0);
            let l = m2(c(n1, 0.0), ZERO, p, c(n2, 0.0));
            let u = M2::from_rows(&[q1, q2]);
            let za = c(g.z.re, n1.ln());
            let d = phase(-g.z.re);
            let b = GElem { a: l * d, z: za };
            let k = KElem {
                u: phase(g.z.re) * u,
                t: (g.z - za).im,
            };
            (b, k)
        }
    }
}

/// Dressing `x·k = ˣk · xᵏ` for `x ∈ G±`; returns `(ˣk, xᵏ)`.
pub fn dressing(x: &GElem, k: &KElem, side: Side) -> (KElem, GElem) {
    let (b, kk) = factorize(&x.mul(&k.to_g()).inv(), side);
    (kk.inv(), b.inv())
}

/// Right-trivialized derivative `ġ g⁻¹` of a curve at 0 (4th-order stencil).
pub fn right_tangent(f: impl Fn(f64) -> GElem, h: f64) -> AlgVec {
    let g0 = f(0.0).inv();
    let at = |t: f64| f(t).mul(&g0);
    let (p1, m1, p2, m2_) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
    let x = ((p1.a - m1.a) * c(8.0, 0.0) - (p2.a - m2_.a)) / c(12.0 * h, 0.0);
    let u = ((p1.z - m1.z) * 8.0 - (p2.z - m2_.z)) / (12.0 * h);
    AlgVec { x, u }
}

/// Step for group-curve finite differences.
pub const GROUP_FD_STEP: f64 = 1e-3;

/// `I^l = Ad_k I Ad_k⁻¹` in [`k_basis`].
pub fn left_invariant_i(k: &KElem) -> RMat {
    let ad = k.ad_matrix();
    &ad * algebra_i_matrix() * ad.transpose()
}

/// Bihermitian point of `(g, I^r, I^l)` at `k` in the right-invariant frame.
pub fn invariant_gk_at(k: &KElem) -> BihermitianPoint {
    BihermitianPoint::new(RMat::identity(4, 4), algebra_i_matrix(), left_invariant_i(k))
        .expect("Ad is s_R-orthogonal")
}

/// `π_Z = ½(I^l − I^r) g⁻¹` at `k`.
pub fn pi_z(k: &KElem) -> RMat {
    (left_invariant_i(k) - algebra_i_matrix()) * 0.5
}

/// Tangent to `G₋ × K` (or `G₊ × K`) as right-trivialized algebra pair.
#[derive(Debug, Clone, Copy)]
pub struct PairTangent {
    pub beta: AlgVec,
    pub kappa: AlgVec,
}

fn curve(b: &GElem, k: &KElem, v: &PairTangent, t: f64) -> (GElem, GElem) {
    (
        GElem::exp(&v.beta.scale_re(t)).mul(b),
        GElem::exp(&v.kappa.scale_re(t)).mul(&k.to_g()),
    )
}

/// `Ω_Z|_(b,k) = s_I((ᵇk)*θ^l, (bᵏ)*θ^r) − s_I(b*θ^l, k*θ^r)` on two tangents.
pub fn omega_z_eval(b: &GElem, k: &KElem, v1: &PairTangent, v2: &PairTangent, side: Side) -> Result<f64> {
    let r = b.subgroup_residual(side);
    if r > 1e-9 {
        return Err(Error::NotInSubgroup(r));
    }
    let comps = |t: f64, v: &PairTangent| -> [GElem; 4] {
        let (bb, kk) = curve(b, k, v, t);
        let kk = KElem { u: kk.a, t: kk.z.im };
        let (kd, bd) = dressing(&bb, &kk, side);
        [kd.to_g(), bd, bb, kk.to_g()]
    };
    let base = comps(0.0, v1);
    let tangents = |v: &PairTangent| -> Vec<AlgVec> {
        (0..4)
            .map(|i| right_tangent(|t| comps(t, v)[i], GROUP_FD_STEP))
            .collect()
    };
    let t1 = tangents(v1);
    let t2 = tangents(v2);
    let theta_l = |i: usize, x: &AlgVec| base[i].inv().ad(x);
    let w = |i: usize, j: usize| s_imag(&theta_l(i, &t1[i]), &t2[j]) - s_imag(&theta_l(i, &t2[i]), &t1[j]);
    Ok(w(0, 1) - w(2, 3))
}

/// Infinitesimal dressing `d/dt ^{exp(tβ)}k` in [`k_basis`].
pub fn dressing_vector(beta: &AlgVec, k: &KElem, side: Side) -> Vector4<f64> {
    let tan = right_tangent(
        |t| dressing(&GElem::exp(&beta.scale_re(t)), k, side).0.to_g(),
        GROUP_FD_STEP,
    );
    k_coords(&tan)
}

/// IM-form check: `μ(β) = ι_{(β,0)} Ω_Z` restricted to `𝔨` at `(1, k)` and
/// compared with `c·π_Z μ(β) = ρ(β)`; returns `(c, residual)`.
pub fn im_form_check(k: &KElem) -> Result<(f64, f64)> {
    let kb = k_basis();
    let pz = pi_z(k);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = Vec::new();
    for beta in subalgebra_basis(Side::Minus) {
        let v1 = PairTangent {
            beta,
            kappa: AlgVec::zero(),
        };
        let mut mu = nalgebra::DVector::zeros(4);
        for (j, e) in kb.iter().enumerate() {
            let v2 = PairTangent {
                beta: AlgVec::zero(),
                kappa: *e,
            };
            mu[j] = omega_z_eval(&GElem::identity(), k, &v1, &v2, Side::Minus)?;
        }
        let lhs = &pz * mu;
        let rho = dressing_vector(&beta, k, Side::Minus);
        let rho = nalgebra::DVector::from_column_slice(rho.as_slice());
        num += lhs.dot(&rho);
        den += lhs.dot(&lhs);
        pairs.push((lhs, rho));
    }
    let cz = if den > 0.0 { num / den } else { 0.0 };
    let resid = pairs
        .iter()
        .map(|(l, r)| (l * cz - r).amax())
        .fold(0.0, f64::max);
    Ok((cz, resid))
}

/// Right-trivialized frame of the exponential chart `x ↦ exp(Σxᵢeᵢ)k₀`:
/// column `i` is `dexp_X(eᵢ) = Σ adₓⁿ eᵢ/(n+1)!`.
pub fn dexp_frame(x: &[f64]) -> RMat {
    let ad = ad_matrix(&from_k_coords(x));
    let mut term = RMat::identity(4, 4);
    let mut acc = RMat::identity(4, 4);
    for n in 1..40 {
        term = &ad * term / (n as f64 + 1.0);
        acc += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    acc
}

/// Exponential chart of `K` around `k₀` carrying `(g, I₊ = I^r, I₋ = I^l)` in
/// coordinates.
#[derive(Clone)]
pub struct GroupChart {
    pub base: KElem,
    pub g: MatrixField,
    pub i_plus: MatrixField,
    pub i_minus: MatrixField,
}

pub fn chart_point(base: &KElem, x: &[f64]) -> KElem {
    let e = GElem::exp(&from_k_coords(x)).mul(&base.to_g());
    KElem { u: e.a, t: e.z.im }
}

pub fn exp_chart(base: KElem) -> GroupChart {
    let g: MatrixField = Arc::new(|x: &[f64]| {
        let m = dexp_frame(x);
        m.transpose() * m
    });
    let i_plus: MatrixField = Arc::new(|x: &[f64]| {
        let m = dexp_frame(x);
        let mi = m.clone().try_inverse().expect("dexp is invertible near 0");
        mi * algebra_i_matrix() * m
    });
    let i_minus: MatrixField = Arc::new(move |x: &[f64]| {
        let m = dexp_frame(x);
        let mi = m.clone().try_inverse().expect("dexp is invertible near 0");
        mi * left_invariant_i(&chart_point(&base, x)) * m
    });
    GroupChart {
        base,
        g,
        i_plus,
        i_minus,
    }
}

/// `s_R([eₐ, e_b], e_c)` on [`k_basis`].
pub fn cartan_tensor() -> chart::Form {
    let b = k_basis();
    chart::Form::from_fn(4, 3, |ix| s_real(&b[ix[0]].bracket(&b[ix[1]]), &b[ix[2]]))
}

/// Fit of `d^c₊ω₊ = c · s_R([·,·],·)` at chart origins.
#[derive(Debug, Clone, Serialize)]
pub struct CartanReport {
    /// Fitted constant at each base point.
    pub constants: Vec<f64>,
    pub c: f64,
    /// `max |c_i − c| / |c|`.
    pub spread: f64,
    /// `max |d^c₊ω₊ − c_i · s_R([·,·],·)|`.
    pub fit_residual: f64,
    /// `max |d^c₊ω₊ + d^c₋ω₋|`.
    pub dc_sum: f64,
    pub alternation: f64,
}

pub fn cartan_form_check(bases: &[KElem], cfg: &FdConfig) -> Result<CartanReport> {
    let reference = cartan_tensor();
    let rr: f64 = reference.coeffs.iter().map(|v| v * v).sum();
    let origin = [0.0; 4];
    let mut constants = Vec::with_capacity(bases.len());
    let mut fit_residual: f64 = 0.0;
    let mut dc_sum: f64 = 0.0;
    let mut alternation: f64 = 0.0;
    for base in bases {
        let ch = exp_chart(*base);
        let wp = chart::hermitian_form(4, &ch.g, &ch.i_plus);
        let wm = chart::hermitian_form(4, &ch.g, &ch.i_minus);
        let hp = chart::dc_op(&wp, &ch.i_plus, &origin, cfg)?;
        let hm = chart::dc_op(&wm, &ch.i_minus, &origin, cfg)?;
        let ci = hp.coeffs.iter().zip(&reference.coeffs).map(|(a, b)| a * b).sum::<f64>() / rr;
        fit_residual = fit_residual.max(hp.sub(&reference.scale(ci)).max_abs());
        dc_sum = dc_sum.max(hp.add(&hm).max_abs());
        alternation = alternation.max(hp.alternation_residual());
        constants.push(ci);
    }
    let c = constants.iter().sum::<f64>() / constants.len().max(1) as f64;
    let spread = constants.iter().map(|v| (v - c).abs() / c.abs().max(1e-300)).fold(0.0, f64::max);
    Ok(CartanReport {
        constants,
        c,
        spread,
        fit_residual,
        dc_sum,
        alternation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{gk_axioms_check, gualtieri_map, poisson_tensors};
    use crate::rng::stream;
    use proptest::prelude::*;

    fn rand_minus(rng: &mut Stream, scale: f64) -> GElem {
        GElem::g_minus(normal_c(rng) * scale, normal_c(rng) * scale)
    }

    fn rand_plus(rng: &mut Stream, scale: f64) -> GElem {
        GElem::g_plus(normal_c(rng) * scale, normal_c(rng) * scale)
    }

    #[test]
    fn pairing_values() {
        let b = k_basis();
        assert!((pairing(&b[0], &b[0]) - ONE).norm() < 1e-15);
        assert!((pairing(&b[3], &b[3]) - ONE).norm() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s_real(&b[i], &b[j]) - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lagrangian_subalgebras_are_isotropic() {
        let mut rng = stream(1, 0);
        for side in [Side::Plus, Side::Minus] {
            let basis = subalgebra_basis(side);
            for _ in 0..10 {
                let a = combo(&basis, &crate::rng::normal_vec(&mut rng, 4));
                let b = combo(&basis, &crate::rng::normal_vec(&mut rng, 4));
                assert!(pairing(&a, &b).norm() < 1e-12);
                assert!(a.subalgebra_residual(side) < 1e-12);
            }
        }
    }

    #[test]
    fn complex_structure_on_k() {
        let b = k_basis();
        assert!(algebra_i(&b[0]).unwrap().sub(&b[1]).norm() < 1e-15);
        let ii = algebra_i(&algebra_i(&b[3]).unwrap()).unwrap();
        assert!(ii.add(&b[3]).norm() < 1e-15);
        let m = algebra_i_matrix();
        assert!((&m * &m + RMat::identity(4, 4)).amax() == 0.0);
        assert!((m.transpose() * &m - RMat::identity(4, 4)).amax() == 0.0);
        assert!(matches!(algebra_i(&subalgebra_basis(Side::Minus)[2]), Err(Error::NotInSubgroup(_))));
    }

    #[test]
    fn eigenspaces_are_lagrangian_subalgebras() {
        for e in k_basis() {
            let ie = algebra_i(&e).unwrap();
            let plus = e.sub(&ie.scale(I_UNIT));
            let minus = e.add(&ie.scale(I_UNIT));
            assert!(plus.subalgebra_residual(Side::Minus) < 1e-15);
            assert!(minus.subalgebra_residual(Side::Plus) < 1e-15);
        }
    }

    #[test]
    fn closed_form_exponential() {
        let mut rng = stream(2, 0);
        for scale in [1e-6, 1e-3, 0.5, 2.0] {
            let v = AlgVec::random(&mut rng).scale_re(scale);
            let reference = v.x.exp();
            assert!(max_abs2(&(exp_sl2(&v.x) - reference)) < 1e-12 * max_abs2(&reference).max(1.0));
        }
        // nilpotent: exp = 1 + X
        let n = m2(ZERO, c(2.0, 1.0), ZERO, ZERO);
        assert!(max_abs2(&(exp_sl2(&n) - M2::identity() - n)) < 1e-15);
    }

    #[test]
    fn factorize_identity() {
        for side in [Side::Plus, Side::Minus] {
            let (b, k) = factorize(&GElem::identity(), side);
            assert!(b.dist(&GElem::identity()) < 1e-15);
            assert!(k.to_g().dist(&GElem::identity()) < 1e-15);
        }
    }

    #[test]
    fn factorize_recovers_factors() {
        let mut rng = stream(3, 0);
        for _ in 0..20 {
            let k0 = KElem::random(&mut rng);
            let b0 = rand_minus(&mut rng, 0.7);
            let (b, k) = factorize(&b0.mul(&k0.to_g()), Side::Minus);
            assert!(b.dist(&b0) < 1e-12 && k.to_g().dist(&k0.to_g()) < 1e-12);
            let a0 = rand_plus(&mut rng, 0.7);
            let (a, k) = factorize(&a0.mul(&k0.to_g()), Side::Plus);
            assert!(a.dist(&a0) < 1e-12 && k.to_g().dist(&k0.to_g()) < 1e-12);
        }
    }

    #[test]
    fn factorize_roundtrip_many_seeds() {
        for seed in 0..200 {
            let mut rng = stream(4, seed);
            let g = GElem::random(&mut rng, 0.8);
            for side in [Side::Plus, Side::Minus] {
                let (b, k) = factorize(&g, side);
                assert!(b.mul(&k.to_g()).dist(&g) < 1e-12);
                assert!(b.subgroup_residual(side) < 1e-12);
                assert!(KElem::new(k.u, k.t).is_ok());
            }
        }
    }

    #[test]
    fn dressing_by_identity() {
        let k = KElem::random(&mut stream(5, 0));
        for side in [Side::Plus, Side::Minus] {
            let (kk, x) = dressing(&GElem::identity(), &k, side);
            assert!(kk.to_g().dist(&k.to_g()) < 1e-14 && x.dist(&GElem::identity()) < 1e-14);
        }
    }

    #[test]
    fn dressing_action_and_cocycle_laws() {
        for seed in 0..50 {
            let mut rng = stream(6, seed);
            let k = KElem::random(&mut rng);
            for side in [Side::Plus, Side::Minus] {
                let (a, b) = match side {
                    Side::Minus => (rand_minus(&mut rng, 0.6), rand_minus(&mut rng, 0.6)),
                    Side::Plus => (rand_plus(&mut rng, 0.6), rand_plus(&mut rng, 0.6)),
                };
                let (bk, b_k) = dressing(&b, &k, side);
                let (abk, a_bk) = dressing(&a, &bk, side);
                let (ab_k_left, ab_k) = dressing(&a.mul(&b), &k, side);
                assert!(abk.to_g().dist(&ab_k_left.to_g()) < 1e-10);
                assert!(ab_k.dist(&a_bk.mul(&b_k)) < 1e-10);
                // defining identity a·k = ᵃk·aᵏ
                assert!(b.mul(&k.to_g()).dist(&bk.to_g().mul(&b_k)) < 1e-12);
            }
        }
    }

    #[test]
    fn theta_properties() {
        let mut rng = stream(7, 0);
        for _ in 0..20 {
            let g = GElem::random(&mut rng, 1.0);
            assert!(g.theta().theta().dist(&g) < 1e-13);
            let k = KElem::random(&mut rng).to_g();
            assert!(k.theta().dist(&k) < 1e-14);
            let a = rand_plus(&mut rng, 0.8);
            assert!(a.theta().subgroup_residual(Side::Minus) < 1e-12);
            let x = AlgVec::random(&mut rng);
            let y = AlgVec::random(&mut rng);
            assert!((pairing(&x.d_theta(), &y.d_theta()) - pairing(&x, &y).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn invariant_structure_is_gk_pointwise() {
        let p = invariant_gk_at(&KElem::identity());
        assert_eq!(p.i_plus(), p.i_minus());
        for seed in 0..100 {
            let k = KElem::random(&mut stream(8, seed));
            let p = invariant_gk_at(&k);
            let r = gk_axioms_check(&gualtieri_map(&p).unwrap());
            assert!(r.is_gk(1e-12), "{r:?}");
            let pt = poisson_tensors(&p);
            assert!((pt.pi_a + pi_z(&k)).amax() < 1e-14);
        }
    }

    #[test]
    fn omega_z_basic_properties() {
        let mut rng = stream(9, 0);
        let zero = PairTangent {
            beta: AlgVec::zero(),
            kappa: AlgVec::zero(),
        };
        let tangent = |rng: &mut Stream| PairTangent {
            beta: combo(&subalgebra_basis(Side::Minus), &crate::rng::normal_vec(rng, 4)),
            kappa: combo(&k_basis(), &crate::rng::normal_vec(rng, 4)),
        };
        for _ in 0..10 {
            let b = rand_minus(&mut rng, 0.5);
            let k = KElem::random(&mut rng);
            let v = tangent(&mut rng);
            let w = tangent(&mut rng);
            assert_eq!(omega_z_eval(&b, &k, &v, &zero, Side::Minus).unwrap(), 0.0);
            let a = omega_z_eval(&b, &k, &v, &w, Side::Minus).unwrap();
            let s = omega_z_eval(&b, &k, &w, &v, Side::Minus).unwrap();
            assert!((a + s).abs() < 1e-9);
        }
        let off = rand_plus(&mut rng, 0.5);
        assert!(omega_z_eval(&off, &KElem::identity(), &zero, &zero, Side::Minus).is_err());
    }

    #[test]
    fn im_form_reproduces_dressing_poisson_tensor() {
        for seed in 0..5 {
            let k = KElem::random(&mut stream(10, seed));
            let (cz, resid) = im_form_check(&k).unwrap();
            assert!((cz - 1.0).abs() < 1e-6, "{cz}");
            assert!(resid < 1e-7, "{resid}");
        }
    }

    #[test]
    fn dexp_frame_matches_group_curves() {
        let x = [0.3, -0.2, 0.5, 0.1];
        let m = dexp_frame(&x);
        for i in 0..4 {
            let tan = right_tangent(
                |t| {
                    let mut y = x;
                    y[i] += t;
                    GElem::exp(&from_k_coords(&y))
                },
                1e-3,
            );
            let col = k_coords(&tan);
            for r in 0..4 {
                assert!((col[r] - m[(r, i)]).abs() < 1e-10);
            }
        }
    }

    fn bases(n: u64) -> Vec<KElem> {
        (0..n).map(|s| KElem::random(&mut stream(11, s))).collect()
    }

    #[test]
    fn cartan_constant_is_stable() {
        let r = cartan_form_check(&bases(20), &FdConfig::default()).unwrap();
        assert!(r.alternation < 1e-8);
        assert!(r.dc_sum < 1e-5, "{r:?}");
        assert!(r.spread < 1e-4, "{r:?}");
        assert!(r.fit_residual < 1e-6, "{r:?}");
        assert!(r.c.abs() > 1e-2);
    }

    #[test]
    fn group_charts_are_gk() {
        let pts = vec![vec![0.0; 4], vec![0.1, -0.05, 0.2, 0.3], vec![-0.2, 0.1, 0.0, -0.1]];
        for base in bases(3) {
            let ch = exp_chart(base);
            let r = chart::verify_gk_chart(&ch.g, &ch.i_plus, &ch.i_minus, &pts, &FdConfig::default()).unwrap();
            assert!(r.max() < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn group_chart_residual_converges() {
        let pts = vec![vec![0.1, -0.05, 0.2, 0.3]];
        let ch = exp_chart(bases(1)[0]);
        let res = |h: f64| {
            let cfg = FdConfig::new(h, chart::Scheme::Central2).unwrap();
            chart::verify_gk_chart(&ch.g, &ch.i_plus, &ch.i_minus, &pts, &cfg).unwrap().dc_sum
        };
        let ratio = res(0.2) / res(0.1);
        assert!(ratio >= 4.0 * 0.9, "{ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn factorization_roundtrip(seed in 0u64..100_000) {
            let g = GElem::random(&mut stream(seed, 3), 1.0);
            for side in [Side::Plus, Side::Minus] {
                let (b, k) = factorize(&g, side);
                prop_assert!(b.mul(&k.to_g()).dist(&g) < 1e-11);
            }
        }
    }
}
