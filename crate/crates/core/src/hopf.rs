//! The Hopf-surface example: `X± = ℂ² − {0}` as quotients of
//! `SL₂(ℂ) × ℂ`, the affine groupoid actions, the Hitchin Poisson structure,
//! the diffeomorphism `ψ` in logarithmic coordinates and its generating
//! function `f`.
//!
//! Branches: `log(−1) = iπ`; the lower limit of the integral term is `−∞`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::lie::{pairing, AlgVec, GElem, Side, M2};
use crate::{Error, Result, C64};

const I_UNIT: C64 = C64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Point of `ℂ² − {0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfPoint {
    pub z1: C64,
    pub z2: C64,
}

impl SurfPoint {
    pub fn new(z1: C64, z2: C64) -> Result<Self> {
        if z1.norm() == 0.0 && z2.norm() == 0.0 {
            return Err(Error::InvalidArgument("origin is excluded".into()));
        }
        Ok(Self { z1, z2 })
    }

    /// In `O_A = {z₁ ≠ 0}`.
    pub fn in_o_a(&self) -> bool {
        self.z1.norm() > 0.0
    }

    /// In `O_B = {z₂ ≠ 0}`.
    pub fn in_o_b(&self) -> bool {
        self.z2.norm() > 0.0
    }

    pub fn dist(&self, o: &Self) -> f64 {
        (self.z1 - o.z1).norm().max((self.z2 - o.z2).norm())
    }
}

/// `p₋(A, z) = A·(e^{−iz}, 0)ᵀ`.
pub fn project_minus(g: &GElem) -> SurfPoint {
    let s = (-I_UNIT * g.z).exp();
    SurfPoint {
        z1: g.a[(0, 0)] * s,
        z2: g.a[(1, 0)] * s,
    }
}

/// `p₊(A, u) = (e^{iu}, 0)·A`.
pub fn project_plus(g: &GElem) -> SurfPoint {
    let s = (I_UNIT * g.z).exp();
    SurfPoint {
        z1: g.a[(0, 0)] * s,
        z2: g.a[(0, 1)] * s,
    }
}

/// Element `(a, b)` of `ℂ ⋉ ℂ` with `(a,b)(c,d) = (a + c, e^c b + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: C64,
    pub b: C64,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            a: c(0.0, 0.0),
            b: c(0.0, 0.0),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            a: self.a + o.a,
            b: o.a.exp() * self.b + o.b,
        }
    }

    /// Product in the opposite group.
    pub fn mul_op(&self, o: &Self) -> Self {
        o.mul(self)
    }

    pub fn dist(&self, o: &Self) -> f64 {
        (self.a - o.a).norm().max((self.b - o.b).norm())
    }
}

/// `G± → ℂ ⋉ ℂ`: `(·, z) ↦ (−2iz, e^{−iz}w)` with `w` the off-diagonal entry.
pub fn to_affine(g: &GElem, side: Side) -> Result<Affine> {
    let r = g.subgroup_residual(side);
    if r > 1e-9 {
        return Err(Error::NotInSubgroup(r));
    }
    let w = match side {
        Side::Minus => g.a[(0, 1)],
        Side::Plus => g.a[(1, 0)],
    };
    Ok(Affine {
        a: -I_UNIT * g.z * 2.0,
        b: (-I_UNIT * g.z).exp() * w,
    })
}

/// The four action groupoids on `X±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Action {
    AMinus,
    BMinus,
    APlus,
    BPlus,
}

impl Action {
    fn is_a(self) -> bool {
        matches!(self, Action::AMinus | Action::APlus)
    }

    /// Left action for the minus side; right action of the opposite group on the plus side.
    pub fn is_plus(self) -> bool {
        matches!(self, Action::APlus | Action::BPlus)
    }
}

/// `(a,b)·(z₁,z₂) = (e^a z₁, b z₁ + z₂)` for `A`, `(z₁ + b z₂, e^a z₂)` for `B`.
pub fn groupoid_action(g: &Affine, p: &SurfPoint, which: Action) -> SurfPoint {
    if which.is_a() {
        SurfPoint {
            z1: g.a.exp() * p.z1,
            z2: g.b * p.z1 + p.z2,
        }
    } else {
        SurfPoint {
            z1: p.z1 + g.b * p.z2,
            z2: g.a.exp() * p.z2,
        }
    }
}

/// `|(gh)·p − g·(h·p)|`, with the product of the side's group.
pub fn action_law_residual(g: &Affine, h: &Affine, p: &SurfPoint, which: Action) -> f64 {
    let (prod, nested) = if which.is_plus() {
        (g.mul_op(h), groupoid_action(h, &groupoid_action(g, p, which), which))
    } else {
        (g.mul(h), groupoid_action(g, &groupoid_action(h, p, which), which))
    };
    groupoid_action(&prod, p, which).dist(&nested)
}

/// Infinitesimal generators of `∂_a, ∂_b` as columns over `(∂₁, ∂₂)`.
pub fn generators(p: &SurfPoint, which: Action) -> [[C64; 2]; 2] {
    let zero = c(0.0, 0.0);
    if which.is_a() {
        [[p.z1, zero], [zero, p.z1]]
    } else {
        [[zero, p.z2], [p.z2, zero]]
    }
}

/// Complex rank of the infinitesimal generators at `p`.
pub fn orbit_rank(p: &SurfPoint, which: Action) -> usize {
    let [u, v] = generators(p, which);
    let det = u[0] * v[1] - u[1] * v[0];
    if det.norm() > 1e-14 {
        2
    } else if u.iter().chain(v.iter()).any(|x| x.norm() > 1e-14) {
        1
    } else {
        0
    }
}

/// Coefficient of `σ± = ±2z₁z₂ ∂₁∧∂₂`.
pub fn hitchin_sigma(p: &SurfPoint, side: Side) -> C64 {
    let s = p.z1 * p.z2 * 2.0;
    match side {
        Side::Minus => s,
        Side::Plus => -s,
    }
}

/// Basis `(∂_a, ∂_b)` of `𝔤±` under [`to_affine`].
fn affine_basis(side: Side) -> [AlgVec; 2] {
    let zero = c(0.0, 0.0);
    let half_i = c(0.0, 0.5);
    match side {
        Side::Minus => [
            AlgVec {
                x: M2::new(I_UNIT, zero, zero, -I_UNIT) * half_i,
                u: half_i,
            },
            AlgVec {
                x: M2::new(zero, c(1.0, 0.0), zero, zero),
                u: zero,
            },
        ],
        Side::Plus => [
            AlgVec {
                x: M2::new(-I_UNIT, zero, zero, I_UNIT) * half_i,
                u: half_i,
            },
            AlgVec {
                x: M2::new(zero, zero, c(1.0, 0.0), zero),
                u: zero,
            },
        ],
    }
}

/// `σ₋^♯ = ρ_{A₋} ∘ s⁻¹ ∘ ρ_{B₋}^*` as a 2×2 matrix `P` with
/// `σ(α, β) = αᵀ P β`; `G₊` drives `A₋` and `G₋` drives `B₋`.
pub fn sigma_from_pairing(p: &SurfPoint) -> [[C64; 2]; 2] {
    let (ep, em) = (affine_basis(Side::Plus), affine_basis(Side::Minus));
    let s = nalgebra::Matrix2::from_fn(|j, k| pairing(&ep[j], &em[k]));
    let ga = generators(p, Action::AMinus);
    let gb = generators(p, Action::BMinus);
    let ra = nalgebra::Matrix2::from_fn(|i, j| ga[j][i]);
    let rb = nalgebra::Matrix2::from_fn(|i, j| gb[j][i]);
    let m = ra * s.transpose().try_inverse().expect("pairing is nondegenerate") * rb.transpose();
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Real dilogarithm `Li₂(x)` for `x ≤ 1`: power series on `[0, ½]`, Landen
/// on `[−1, 0)`, inversion below `−1`, reflection on `(½, 1]`.
pub fn li2(x: f64) -> f64 {
    const ZETA2: f64 = PI * PI / 6.0;
    if x.is_nan() || x > 1.0 {
        return f64::NAN;
    }
    if x == 1.0 {
        return ZETA2;
    }
    if x < -1.0 {
        let l = (-x).ln();
        return -ZETA2 - 0.5 * l * l - li2(1.0 / x);
    }
    if x < 0.0 {
        let l = (1.0 - x).ln();
        return -li2_series(x / (x - 1.0)) - 0.5 * l * l;
    }
    if x > 0.5 {
        return ZETA2 - x.ln() * (1.0 - x).ln() - li2_series(1.0 - x);
    }
    li2_series(x)
}

fn li2_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut p = x;
    for k in 1..200 {
        let term = p / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        p *= x;
    }
    sum
}

/// `∫_{−∞}^{s} log(1 + eᵗ) dt = −Li₂(−eˢ)`.
pub fn softplus_integral(s: f64) -> f64 {
    -li2(-s.exp())
}

/// Wraps the imaginary part into `(−π, π]`.
pub fn wrap_imag(z: C64) -> C64 {
    let mut im = z.im.rem_euclid(2.0 * PI);
    if im > PI {
        im -= 2.0 * PI;
    }
    c(z.re, im)
}

/// `ψ(v₁, v₂) = (log(R⁻²e^{v₁}), log(−R⁻²e^{v̄₂}))`, principal branches.
pub fn psi_map(v1: C64, v2: C64) -> (C64, C64) {
    let r2 = (2.0 * v1.re).exp() + (2.0 * v2.re).exp();
    let w1 = v1.exp() / r2;
    let w2 = -v2.conj().exp() / r2;
    (w1.ln(), w2.ln())
}

/// `x₁ = u₂ − u₁ − iπ`, `x₂ = u₂ − iπ`.
pub fn shear_coords(u1: C64, u2: C64) -> (C64, C64) {
    (u2 - u1 - I_UNIT * PI, u2 - I_UNIT * PI)
}

/// `Gr(ψ) ∋ (v₁, x̄₁ + v̄₁, x₁, x₁ − v̄₁ − log(1 + e^{x₁+x̄₁}))`.
pub fn graph_psi(v1: C64, x1: C64) -> [C64; 4] {
    let s = 2.0 * x1.re;
    [v1, x1.conj() + v1.conj(), x1, x1 - v1.conj() - c(s.exp().ln_1p(), 0.0)]
}

/// `|Δv₂| + |Δx₂|` between [`psi_map`] through [`shear_coords`] and
/// [`graph_psi`], imaginary parts compared modulo `2π`.
pub fn psi_graph_consistency(v1: C64, x1: C64) -> f64 {
    let g = graph_psi(v1, x1);
    let (u1, u2) = psi_map(v1, g[1]);
    let (sx1, sx2) = shear_coords(u1, u2);
    wrap_imag(sx1 - x1).norm().max(wrap_imag(sx2 - g[3]).norm())
}

/// Closed-form combination `½(v₁v̄₁ + v̄₁x₁ + x̄₁v₁ − ½(x₁² + x̄₁²) + I(x₁+x̄₁))`
/// in complex arithmetic.
pub fn potential_complex(v1: C64, x1: C64) -> C64 {
    let (vb, xb) = (v1.conj(), x1.conj());
    let s = (x1 + xb).re;
    (v1 * vb + vb * x1 + xb * v1 - (x1 * x1 + xb * xb) * 0.5 + softplus_integral(s)) * 0.5
}

/// Generalized Kähler potential `f(v₁, x₁)`.
pub fn potential_f(v1: C64, x1: C64) -> f64 {
    potential_complex(v1, x1).re
}

/// `Re α = Re(v₂dv₁ − x₂dx₁)` on `Gr(ψ)`, as coefficients on
/// `(Re v₁, Im v₁, Re x₁, Im x₁)`.
pub fn re_alpha_coeffs(v1: C64, x1: C64) -> [f64; 4] {
    let g = graph_psi(v1, x1);
    [g[1].re, -g[1].im, -g[3].re, g[3].im]
}

fn point4(v1: C64, x1: C64) -> [f64; 4] {
    [v1.re, v1.im, x1.re, x1.im]
}

fn from4(p: &[f64; 4]) -> (C64, C64) {
    (c(p[0], p[1]), c(p[2], p[3]))
}

/// Central-difference gradient of `f` in the four real coordinates.
pub fn potential_gradient(v1: C64, x1: C64, h: f64) -> [f64; 4] {
    let p = point4(v1, x1);
    std::array::from_fn(|i| {
        let mut a = p;
        let mut b = p;
        a[i] += h;
        b[i] -= h;
        let (av, ax) = from4(&a);
        let (bv, bx) = from4(&b);
        (potential_f(av, ax) - potential_f(bv, bx)) / (2.0 * h)
    })
}

/// Max `|∇f − Re α|` over the points.
pub fn generating_check(points: &[(C64, C64)], h: f64) -> f64 {
    points
        .iter()
        .map(|(v, x)| {
            let grad = potential_gradient(*v, *x, h);
            let coeffs = re_alpha_coeffs(*v, *x);
            grad.iter().zip(coeffs.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `∫ Re α` along `γ(t) = P + t(Q − P) + t(1 − t)W` in `(v₁, x₁)`, composite Simpson.
pub fn path_integral(p: [C64; 2], q: [C64; 2], bend: [C64; 2], intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let at = |t: f64| -> ([C64; 2], [C64; 2]) {
        let pos = std::array::from_fn(|i| p[i] + (q[i] - p[i]) * t + bend[i] * (t * (1.0 - t)));
        let vel = std::array::from_fn(|i| (q[i] - p[i]) + bend[i] * (1.0 - 2.0 * t));
        (pos, vel)
    };
    let integrand = |t: f64| {
        let (pos, vel) = at(t);
        let coeff = re_alpha_coeffs(pos[0], pos[1]);
        let dv = [vel[0].re, vel[0].im, vel[1].re, vel[1].im];
        coeff.iter().zip(dv.iter()).map(|(a, b)| a * b).sum::<f64>()
    };
    let h = 1.0 / n as f64;
    let mut sum = integrand(0.0) + integrand(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * h);
    }
    sum * h / 3.0
}

/// Tangent of `Gr(ψ)` at `x₁` along `(δv₁, δx₁)`, in `(v₁, v₂, x₁, x₂)`.
pub fn graph_tangent(x1: C64, dv1: C64, dx1: C64) -> [C64; 4] {
    let s = 2.0 * x1.re;
    let sigmoid = 1.0 / (1.0 + (-s).exp());
    let ds = 2.0 * dx1.re;
    [dv1, dx1.conj() + dv1.conj(), dx1, dx1 - dv1.conj() - c(sigmoid * ds, 0.0)]
}

/// `ω = dv₂∧dv₁ − dx₂∧dx₁` on two tangents `(v₁, v₂, x₁, x₂)`.
pub fn omega_hopf(a: &[C64; 4], b: &[C64; 4]) -> C64 {
    (a[1] * b[0] - b[1] * a[0]) - (a[3] * b[2] - b[3] * a[2])
}

/// Max `|Re ω|` and max `|Im ω|` over pairs of graph tangents.
pub fn graph_lagrangian_check(samples: &[(C64, C64, [C64; 2], [C64; 2])]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(re, im), (_, x, d, e)| {
        let a = graph_tangent(*x, d[0], d[1]);
        let b = graph_tangent(*x, e[0], e[1]);
        let w = omega_hopf(&a, &b);
        (f64::max(re, w.re.abs()), f64::max(im, w.im.abs()))
    })
}

/// One row of the potential grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub v1_re: f64,
    pub v1_im: f64,
    pub x1_re: f64,
    pub x1_im: f64,
    pub f: f64,
    pub gradient_residual: f64,
    pub realness_residual: f64,
}

/// `n × n` grid on `[−r, r]²`: node `(sᵢ, tⱼ)` is `v₁ = sᵢ + ½ i tⱼ`, `x₁ = tⱼ + ½ i sᵢ`.
pub fn grid_points(n: usize, r: f64) -> Vec<(C64, C64)> {
    let node = |i: usize| if n == 1 { 0.0 } else { -r + 2.0 * r * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (node(i), node(j));
            out.push((c(s, 0.5 * t), c(t, 0.5 * s)));
        }
    }
    out
}

/// Evaluates `f` and its residuals on [`grid_points`].
pub fn potential_grid(n: usize, r: f64, h: f64) -> Vec<GridRow> {
    grid_points(n, r)
        .into_iter()
        .map(|(v, x)| GridRow {
            v1_re: v.re,
            v1_im: v.im,
            x1_re: x.re,
            x1_im: x.im,
            f: potential_f(v, x),
            gradient_residual: generating_check(&[(v, x)], h),
            realness_residual: potential_complex(v, x).im.abs(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{GElem, Side};
    use crate::rng::{normal, normal_c, stream, Stream};
    use proptest::prelude::*;

    fn rand_point(rng: &mut Stream) -> SurfPoint {
        SurfPoint::new(normal_c(rng), normal_c(rng)).unwrap()
    }

    fn rand_affine(rng: &mut Stream) -> Affine {
        Affine {
            a: normal_c(rng) * 0.5,
            b: normal_c(rng),
        }
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn projections_at_identity() {
        let one = SurfPoint::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(project_minus(&GElem::identity()), one);
        assert_eq!(project_plus(&GElem::identity()), one);
        assert!(SurfPoint::new(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn projections_are_invariant() {
        let mut rng = stream(50, 0);
        let g = GElem::random(&mut rng, 0.7);
        for _ in 0..20 {
            let b = GElem::g_minus(normal_c(&mut rng) * 0.5, normal_c(&mut rng));
            assert!(project_minus(&g.mul(&b)).dist(&project_minus(&g)) < 1e-12);
            let a = GElem::g_plus(normal_c(&mut rng) * 0.5, normal_c(&mut rng));
            assert!(project_plus(&a.mul(&g)).dist(&project_plus(&g)) < 1e-12);
        }
    }

    #[test]
    fn affine_charts_are_homomorphisms() {
        let mut rng = stream(51, 0);
        for side in [Side::Minus, Side::Plus] {
            for _ in 0..10 {
                let g = GElem::in_subgroup(side, normal_c(&mut rng) * 0.5, normal_c(&mut rng));
                let h = GElem::in_subgroup(side, normal_c(&mut rng) * 0.5, normal_c(&mut rng));
                let lhs = to_affine(&g.mul(&h), side).unwrap();
                let rhs = to_affine(&g, side).unwrap().mul(&to_affine(&h, side).unwrap());
                assert!(lhs.dist(&rhs) < 1e-12);
            }
        }
    }

    #[test]
    fn actions_match_group_translation() {
        let mut rng = stream(52, 0);
        for _ in 0..10 {
            let h = GElem::random(&mut rng, 0.6);
            let a = GElem::g_plus(normal_c(&mut rng) * 0.5, normal_c(&mut rng));
            let b = GElem::g_minus(normal_c(&mut rng) * 0.5, normal_c(&mut rng));
            let p = project_minus(&h);
            let via_a = groupoid_action(&to_affine(&a, Side::Plus).unwrap(), &p, Action::AMinus);
            assert!(project_minus(&a.mul(&h)).dist(&via_a) < 1e-12);
            let via_b = groupoid_action(&to_affine(&b, Side::Minus).unwrap(), &p, Action::BMinus);
            assert!(project_minus(&b.mul(&h)).dist(&via_b) < 1e-12);
        }
    }

    #[test]
    fn action_laws() {
        let mut rng = stream(53, 0);
        let p = rand_point(&mut rng);
        for which in [Action::AMinus, Action::BMinus, Action::APlus, Action::BPlus] {
            assert_eq!(groupoid_action(&Affine::identity(), &p, which), p);
            for _ in 0..50 {
                let (g, h, p) = (rand_affine(&mut rng), rand_affine(&mut rng), rand_point(&mut rng));
                assert!(action_law_residual(&g, &h, &p, which) < 1e-12);
            }
        }
    }

    #[test]
    fn orbit_ranks_follow_leaves() {
        let p = SurfPoint::new(c(1.0, 0.5), c(-0.3, 2.0)).unwrap();
        assert_eq!(orbit_rank(&p, Action::AMinus), 2);
        assert_eq!(orbit_rank(&p, Action::BMinus), 2);
        let axis1 = SurfPoint::new(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(!axis1.in_o_a() && axis1.in_o_b());
        assert_eq!(orbit_rank(&axis1, Action::AMinus), 0);
        assert_eq!(orbit_rank(&axis1, Action::BMinus), 2);
        let axis2 = SurfPoint::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(orbit_rank(&axis2, Action::BMinus), 0);
    }

    #[test]
    fn hitchin_sigma_values() {
        let p = SurfPoint::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(hitchin_sigma(&p, Side::Minus), c(2.0, 0.0));
        let q = SurfPoint::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(hitchin_sigma(&q, Side::Minus), c(0.0, 0.0));
        let mut rng = stream(54, 0);
        for _ in 0..20 {
            let p = rand_point(&mut rng);
            assert!((hitchin_sigma(&p, Side::Minus) + hitchin_sigma(&p, Side::Plus)).norm() == 0.0);
            let m = sigma_from_pairing(&p);
            let s = hitchin_sigma(&p, Side::Minus);
            assert!((m[0][1] - s).norm() < 1e-10 * s.norm().max(1.0));
            assert!((m[1][0] + s).norm() < 1e-10 * s.norm().max(1.0));
            assert!(m[0][0].norm() + m[1][1].norm() < 1e-12);
        }
    }

    #[test]
    fn dilogarithm_values() {
        assert!((softplus_integral(0.0) - PI * PI / 12.0).abs() < 1e-12);
        assert!((-li2(-1.0) - PI * PI / 12.0).abs() < 1e-14);
        assert!((li2(0.5) - (PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2))).abs() < 1e-14);
        assert!((li2(1.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!(li2(1.5).is_nan());
        for s in [-5.0, -1.0, 0.0, 0.7, 2.0, 6.0] {
            let quad = simpson(|t| t.exp().ln_1p(), -60.0, s, 200_000);
            assert!((softplus_integral(s) - quad).abs() < 1e-10, "{s}");
        }
    }

    #[test]
    fn psi_examples() {
        let (u1, u2) = psi_map(c(0.0, 0.0), c(0.0, 0.0));
        let l2 = 2f64.ln();
        assert!((u1 - c(-l2, 0.0)).norm() < 1e-15);
        assert!((u2 - c(-l2, PI)).norm() < 1e-15);
        let mut rng = stream(55, 0);
        for _ in 0..50 {
            let (v1, v2) = (normal_c(&mut rng), normal_c(&mut rng));
            let (u1, u2) = psi_map(v1, v2);
            let r2 = (2.0 * v1.re).exp() + (2.0 * v2.re).exp();
            let n = u1.exp().norm_sqr() + u2.exp().norm_sqr();
            assert!((n - 1.0 / r2).abs() < 1e-12 * (1.0 / r2).max(1.0));
        }
    }

    #[test]
    fn graph_examples_and_consistency() {
        let g = graph_psi(c(0.0, 0.0), c(0.0, 0.0));
        assert!((g[3] - c(-2f64.ln(), 0.0)).norm() < 1e-15);
        assert!(g[0].norm() + g[1].norm() + g[2].norm() == 0.0);
        let mut rng = stream(56, 0);
        for _ in 0..50 {
            let (v1, x1) = (normal_c(&mut rng), normal_c(&mut rng));
            assert!(psi_graph_consistency(v1, x1) < 1e-9);
        }
    }

    #[test]
    fn potential_values() {
        assert!((potential_f(c(0.0, 0.0), c(0.0, 0.0)) - PI * PI / 24.0).abs() < 1e-14);
        let mut rng = stream(57, 0);
        for _ in 0..1000 {
            let (v1, x1) = (normal_c(&mut rng), normal_c(&mut rng));
            assert!(potential_complex(v1, x1).im.abs() < 1e-12);
        }
        for _ in 0..20 {
            let (v1, x1) = (normal_c(&mut rng), normal_c(&mut rng));
            let diff = potential_f(v1, x1) - potential_f(c(0.0, 0.0), x1);
            let exact = 0.5 * (v1 * v1.conj() + v1.conj() * x1 + x1.conj() * v1).re;
            assert!((diff - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn generating_property_on_grid() {
        let pts = grid_points(10, 1.5);
        assert_eq!(pts.len(), 100);
        assert!(generating_check(&pts, 1e-5) < 1e-6);
        // imaginary directions of v₁ alone
        let imag: Vec<(C64, C64)> = (0..10).map(|i| (c(0.0, i as f64 * 0.3 - 1.5), c(0.2, 0.0))).collect();
        assert!(generating_check(&imag, 1e-5) < 1e-6);
    }

    #[test]
    fn path_integrals_match_potential_differences() {
        let mut rng = stream(58, 0);
        for _ in 0..5 {
            let p = [normal_c(&mut rng), normal_c(&mut rng)];
            let q = [normal_c(&mut rng), normal_c(&mut rng)];
            let w = [normal_c(&mut rng), normal_c(&mut rng)];
            let line = path_integral(p, q, w, 2000);
            assert!((line - (potential_f(q[0], q[1]) - potential_f(p[0], p[1]))).abs() < 1e-6);
        }
    }

    #[test]
    fn graph_is_re_lagrangian() {
        let mut rng = stream(59, 0);
        let samples: Vec<_> = (0..50)
            .map(|_| {
                (
                    normal_c(&mut rng),
                    normal_c(&mut rng),
                    [normal_c(&mut rng), normal_c(&mut rng)],
                    [normal_c(&mut rng), normal_c(&mut rng)],
                )
            })
            .collect();
        let (re, im) = graph_lagrangian_check(&samples);
        assert!(re < 1e-7, "{re}");
        assert!(im > 1e-2);
        let (v, x, d, _) = samples[0];
        let t = graph_tangent(x, d[0], d[1]);
        assert_eq!(omega_hopf(&t, &t), c(0.0, 0.0));
        // finite-difference tangents agree with the closed form
        let h = 1e-6;
        let fd: Vec<C64> = (0..4)
            .map(|i| (graph_psi(v + d[0] * h, x + d[1] * h)[i] - graph_psi(v - d[0] * h, x - d[1] * h)[i]) / (2.0 * h))
            .collect();
        for i in 0..4 {
            assert!((fd[i] - t[i]).norm() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn potential_is_real(seed in 0u64..100_000) {
            let mut rng = stream(seed, 60);
            let v1 = c(normal(&mut rng) * 3.0, normal(&mut rng) * 3.0);
            let x1 = c(normal(&mut rng) * 3.0, normal(&mut rng) * 3.0);
            prop_assert!(potential_complex(v1, x1).im.abs() < 1e-12 * (1.0 + v1.norm_sqr() + x1.norm_sqr()));
        }
    }
}
