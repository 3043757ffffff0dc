//! Representations of the decorated annulus on eight free generators and
//! their quasi-symplectic 2-forms.
//!
//! Vertices are indexed `0..8` as the four outer corners `a, b, c, d`
//! followed by the inner vertices `e₁..e₄`. Edge incidences (`s → t`):
//! `g₁: a→d`, `g₂: b→a`, `g₃: b→c`, `g₄: c→d`, `kᵢ: (a,b,c,d)ᵢ → eᵢ`.
//! Tangents are right-trivialized: `δg = ξ·g`.

use nalgebra::{DVector, SVD};
use serde::Serialize;

use crate::lie::{
    combo, dressing, k_basis, pairing, right_tangent, subalgebra_basis, AlgVec, GElem, KElem, PairTangent, Side,
    GROUP_FD_STEP,
};
use crate::lie::omega_z_eval;
use crate::rng::{normal_c, normal_vec, Stream};
use crate::split::real_nullspace;
use crate::{Error, Result, C64, RMat};

/// Im of the annulus-form pullback to `Λ_Z` divided by `Ω_Z`.
pub const C_Z: f64 = 1.0;

/// Source and target vertex of each generator `g₁..g₄, k₁..k₄`.
pub const GENERATOR_INCIDENCE: [(usize, usize); 8] = [(0, 3), (1, 0), (1, 2), (2, 3), (0, 4), (1, 5), (2, 6), (3, 7)];

/// Source and target vertex of each moment-map component.
pub const MOMENT_INCIDENCE: [(usize, usize); 8] = [(1, 0), (0, 3), (2, 3), (1, 2), (5, 4), (5, 6), (6, 7), (4, 7)];

/// Representation on the free generators `(g₁..g₄, k₁..k₄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusRep {
    pub g: [GElem; 4],
    pub k: [GElem; 4],
}

/// Tangent to a representation, one algebra vector per generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentRep {
    pub xi: [AlgVec; 8],
}

impl AnnulusRep {
    pub fn from_gens(v: [GElem; 8]) -> Self {
        Self {
            g: [v[0], v[1], v[2], v[3]],
            k: [v[4], v[5], v[6], v[7]],
        }
    }

    pub fn gens(&self) -> [GElem; 8] {
        [self.g[0], self.g[1], self.g[2], self.g[3], self.k[0], self.k[1], self.k[2], self.k[3]]
    }

    pub fn identity() -> Self {
        Self::from_gens([GElem::identity(); 8])
    }

    pub fn random(rng: &mut Stream, scale: f64) -> Self {
        Self::from_gens(std::array::from_fn(|_| GElem::random(rng, scale)))
    }

    pub fn dist(&self, o: &Self) -> f64 {
        self.gens().iter().zip(o.gens().iter()).map(|(a, b)| a.dist(b)).fold(0.0, f64::max)
    }
}

impl TangentRep {
    pub fn zero() -> Self {
        Self { xi: [AlgVec::zero(); 8] }
    }

    pub fn random(rng: &mut Stream) -> Self {
        Self {
            xi: std::array::from_fn(|_| AlgVec::random(rng)),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            xi: std::array::from_fn(|i| self.xi[i].add(&o.xi[i])),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self {
            xi: std::array::from_fn(|i| self.xi[i].scale_re(s)),
        }
    }
}

/// `θ^r(δ(a·b·c⁻¹))`.
fn word_tangent(a: &GElem, b: &GElem, cc: &GElem, xa: &AlgVec, xb: &AlgVec, xc: &AlgVec) -> AlgVec {
    let w = a.mul(b).mul(&cc.inv());
    xa.add(&a.ad(xb)).sub(&w.ad(xc))
}

/// Inner arcs `w₅ = k₁g₂k₂⁻¹`, `w₆ = k₃g₃k₂⁻¹`, `w₇ = k₄g₄k₃⁻¹`, `w₈ = k₄g₁k₁⁻¹`.
pub fn inner_arc_holonomies(r: &AnnulusRep) -> [GElem; 4] {
    let [g1, g2, g3, g4] = r.g;
    let [k1, k2, k3, k4] = r.k;
    [
        k1.mul(&g2).mul(&k2.inv()),
        k3.mul(&g3).mul(&k2.inv()),
        k4.mul(&g4).mul(&k3.inv()),
        k4.mul(&g1).mul(&k1.inv()),
    ]
}

/// Boundary values in the `L₁..L₈` order `(g₂, g₁, g₄, g₃, w₅, w₆, w₇, w₈)`.
pub fn moment_map(r: &AnnulusRep) -> [GElem; 8] {
    let w = inner_arc_holonomies(r);
    [r.g[1], r.g[0], r.g[3], r.g[2], w[0], w[1], w[2], w[3]]
}

/// Right-trivialized derivative of [`moment_map`].
pub fn moment_tangent(r: &AnnulusRep, d: &TangentRep) -> [AlgVec; 8] {
    let [g1, g2, g3, g4] = r.g;
    let [k1, k2, k3, k4] = r.k;
    let x = &d.xi;
    [
        x[1],
        x[0],
        x[3],
        x[2],
        word_tangent(&k1, &g2, &k2, &x[4], &x[1], &x[5]),
        word_tangent(&k3, &g3, &k2, &x[6], &x[2], &x[5]),
        word_tangent(&k4, &g4, &k3, &x[7], &x[3], &x[6]),
        word_tangent(&k4, &g1, &k1, &x[7], &x[0], &x[4]),
    ]
}

/// The nine boundary decorations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryName {
    DMinus,
    DPlus,
    Z,
    W,
    C,
    DBarMinus,
    DBarPlus,
    ZBar,
    WBar,
}

impl BoundaryName {
    pub const ALL: [BoundaryName; 9] = [
        BoundaryName::DMinus,
        BoundaryName::DPlus,
        BoundaryName::Z,
        BoundaryName::W,
        BoundaryName::C,
        BoundaryName::DBarMinus,
        BoundaryName::DBarPlus,
        BoundaryName::ZBar,
        BoundaryName::WBar,
    ];
}

/// A decoration with its Lagrangian subgroups `L₁..L₈`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryLabel {
    pub name: BoundaryName,
    pub row: [Side; 8],
}

fn row(s: &str) -> [Side; 8] {
    let b = s.as_bytes();
    std::array::from_fn(|i| if b[i] == b'+' { Side::Plus } else { Side::Minus })
}

impl BoundaryLabel {
    pub fn of(name: BoundaryName) -> Self {
        use BoundaryName::*;
        let r = match name {
            DMinus => "-----+-+",
            DPlus => "+-+-++++",
            Z => "--+--+++",
            W => "+-+++++-",
            C => "--++-++-",
            DBarMinus => "+++++-+-",
            DBarPlus => "-+-+----",
            ZBar => "-+++--+-",
            WBar => "---+-+--",
        };
        Self { name, row: row(r) }
    }

    pub fn all() -> Vec<Self> {
        BoundaryName::ALL.iter().map(|n| Self::of(*n)).collect()
    }
}

/// Per-arc subgroup residuals of a boundary check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub ok: bool,
    pub residuals: [f64; 8],
}

impl BoundaryCheck {
    pub fn max(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn boundary_check(r: &AnnulusRep, label: &BoundaryLabel, tol: f64) -> BoundaryCheck {
    let mu = moment_map(r);
    let residuals = std::array::from_fn(|i| mu[i].subgroup_residual(label.row[i]));
    BoundaryCheck {
        ok: residuals.iter().all(|x: &f64| *x <= tol),
        residuals,
    }
}

/// `(φ·ρ)(γ) = φ_{t(γ)} ρ(γ) φ_{s(γ)}⁻¹`.
pub fn gauge_act(phi: &[GElem; 8], r: &AnnulusRep) -> AnnulusRep {
    let gens = r.gens();
    AnnulusRep::from_gens(std::array::from_fn(|i| {
        let (s, t) = GENERATOR_INCIDENCE[i];
        phi[t].mul(&gens[i]).mul(&phi[s].inv())
    }))
}

/// `Ω_{P₃} = ½ s_ℂ(g₂*θ^l, g₁*θ^r)` as a wedge on `δ = (ξ₁, ξ₂)`.
pub fn omega_triangle(_g1: &GElem, g2: &GElem, d: &[AlgVec; 2], e: &[AlgVec; 2]) -> C64 {
    let l = |x: &AlgVec| g2.inv().ad(x);
    (pairing(&l(&d[1]), &e[0]) - pairing(&l(&e[1]), &d[0])) * 0.5
}

/// `Ω_{P₄}(g₁,g₂,g₃) = ½[s(g₄*θ^l, g₁*θ^r) − s(g₃*θ^l, g₂*θ^r)]`, `g₄ = g₃g₂g₁⁻¹`.
pub fn omega_square(g: &[GElem; 3], d: &[AlgVec; 3], e: &[AlgVec; 3]) -> C64 {
    let [g1, g2, g3] = *g;
    let g4 = g3.mul(&g2).mul(&g1.inv());
    let x4 = |x: &[AlgVec; 3]| word_tangent(&g3, &g2, &g1, &x[2], &x[1], &x[0]);
    let l4 = |x: &[AlgVec; 3]| g4.inv().ad(&x4(x));
    let l3 = |x: &AlgVec| g3.inv().ad(x);
    let a = pairing(&l4(d), &e[0]) - pairing(&l4(e), &d[0]);
    let b = pairing(&l3(&d[2]), &e[1]) - pairing(&l3(&e[2]), &d[1]);
    (a - b) * 0.5
}

/// Signed sum of four squares cut along the dashed arcs.
pub fn omega_annulus(r: &AnnulusRep, d: &TangentRep, e: &TangentRep) -> C64 {
    const TERMS: [(f64, [usize; 3]); 4] = [(1.0, [6, 3, 7]), (1.0, [5, 2, 6]), (-1.0, [4, 0, 7]), (-1.0, [5, 1, 4])];
    let gens = r.gens();
    TERMS.iter().fold(C64::new(0.0, 0.0), |acc, (sign, idx)| {
        let g = idx.map(|i| gens[i]);
        acc + omega_square(&g, &idx.map(|i| d.xi[i]), &idx.map(|i| e.xi[i])) * *sign
    })
}

/// Direction of a cut-and-glue composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

/// Generator indices shared by a composable pair `(ρ, ρ′)`: `ρ′[i] = ρ[j]`.
pub fn shared_generators(dir: Direction) -> [(usize, usize); 3] {
    match dir {
        Direction::Horizontal => [(0, 2), (4, 5), (7, 6)],
        Direction::Vertical => [(1, 3), (4, 7), (5, 6)],
    }
}

/// Largest mismatch of the shared generators.
pub fn composability_residual(dir: Direction, r: &AnnulusRep, q: &AnnulusRep) -> f64 {
    let (a, b) = (r.gens(), q.gens());
    shared_generators(dir).iter().map(|(i, j)| b[*i].dist(&a[*j])).fold(0.0, f64::max)
}

const COMPOSABLE_TOL: f64 = 1e-10;

fn check_composable(dir: Direction, r: &AnnulusRep, q: &AnnulusRep) -> Result<()> {
    let res = composability_residual(dir, r, q);
    if res > COMPOSABLE_TOL {
        return Err(Error::NotComposable(res));
    }
    Ok(())
}

/// Horizontal gluing `(g₁, g₂g₂′, g₃′, g₄g₄′, k₁, k₂′, k₃′, k₄)`.
pub fn mult_h(r: &AnnulusRep, q: &AnnulusRep) -> Result<AnnulusRep> {
    check_composable(Direction::Horizontal, r, q)?;
    Ok(AnnulusRep {
        g: [r.g[0], r.g[1].mul(&q.g[1]), q.g[2], r.g[3].mul(&q.g[3])],
        k: [r.k[0], q.k[1], q.k[2], r.k[3]],
    })
}

/// Vertical gluing `(g₁′g₁, g₂, g₃′g₃, g₄′, k₁, k₂, k₃′, k₄′)`.
pub fn mult_v(r: &AnnulusRep, q: &AnnulusRep) -> Result<AnnulusRep> {
    check_composable(Direction::Vertical, r, q)?;
    Ok(AnnulusRep {
        g: [q.g[0].mul(&r.g[0]), r.g[1], q.g[2].mul(&r.g[2]), q.g[3]],
        k: [r.k[0], r.k[1], q.k[2], q.k[3]],
    })
}

pub fn mult(dir: Direction, r: &AnnulusRep, q: &AnnulusRep) -> Result<AnnulusRep> {
    match dir {
        Direction::Horizontal => mult_h(r, q),
        Direction::Vertical => mult_v(r, q),
    }
}

/// Tangent map of [`mult`] on `(δ, δ′)`.
pub fn mult_tangent(dir: Direction, r: &AnnulusRep, q: &AnnulusRep, d: &TangentRep, e: &TangentRep) -> TangentRep {
    let prod = |a: &GElem, xa: &AlgVec, xb: &AlgVec| xa.add(&a.ad(xb));
    let (x, y) = (&d.xi, &e.xi);
    let xi = match dir {
        Direction::Horizontal => [
            x[0],
            prod(&r.g[1], &x[1], &y[1]),
            y[2],
            prod(&r.g[3], &x[3], &y[3]),
            x[4],
            y[5],
            y[6],
            x[7],
        ],
        Direction::Vertical => [
            prod(&q.g[0], &y[0], &x[0]),
            x[1],
            prod(&q.g[2], &y[2], &x[2]),
            y[3],
            x[4],
            x[5],
            y[6],
            y[7],
        ],
    };
    TangentRep { xi }
}

/// Boundary data `(edge, k_low, k_high)` on the source side of `ρ`.
pub fn source(dir: Direction, r: &AnnulusRep) -> [GElem; 3] {
    let gens = r.gens();
    shared_generators(dir).map(|(_, j)| gens[j])
}

/// Boundary data on the target side of `ρ`, matched against [`source`].
pub fn target(dir: Direction, r: &AnnulusRep) -> [GElem; 3] {
    let gens = r.gens();
    shared_generators(dir).map(|(i, _)| gens[i])
}

/// Unit over boundary data `(edge, k_low, k_high)`.
pub fn unit(dir: Direction, data: &[GElem; 3]) -> AnnulusRep {
    let one = GElem::identity();
    let [g, ka, kb] = *data;
    match dir {
        Direction::Horizontal => AnnulusRep::from_gens([g, one, g, one, ka, ka, kb, kb]),
        Direction::Vertical => AnnulusRep::from_gens([one, g, one, g, ka, kb, kb, ka]),
    }
}

/// Derivative of [`unit`] along boundary tangents `(ξ_edge, ξ_low, ξ_high)`.
pub fn unit_tangent(dir: Direction, data: &[AlgVec; 3]) -> TangentRep {
    let zero = AlgVec::zero();
    let [g, ka, kb] = *data;
    let xi = match dir {
        Direction::Horizontal => [g, zero, g, zero, ka, ka, kb, kb],
        Direction::Vertical => [zero, g, zero, g, ka, kb, kb, ka],
    };
    TangentRep { xi }
}

/// `|Ω(m_*(δ,δ′), m_*(η,η′)) − Ω(δ,η) − Ω(δ′,η′)|`.
pub fn multiplicativity_residual(
    dir: Direction,
    r: &AnnulusRep,
    q: &AnnulusRep,
    first: (&TangentRep, &TangentRep),
    second: (&TangentRep, &TangentRep),
) -> Result<f64> {
    let m = mult(dir, r, q)?;
    let lhs = omega_annulus(
        &m,
        &mult_tangent(dir, r, q, first.0, first.1),
        &mult_tangent(dir, r, q, second.0, second.1),
    );
    let rhs = omega_annulus(r, first.0, second.0) + omega_annulus(q, first.1, second.1);
    Ok((lhs - rhs).norm())
}

/// `(gᵢ,kᵢ) ↦ (Θ(g₃⁻¹), Θ(g₄⁻¹), Θ(g₁⁻¹), Θ(g₂⁻¹), Θ(k₃), Θ(k₄), Θ(k₁), Θ(k₂))`.
pub fn tau_real_structure(r: &AnnulusRep) -> AnnulusRep {
    let t = |g: &GElem| g.inv().theta();
    AnnulusRep {
        g: [t(&r.g[2]), t(&r.g[3]), t(&r.g[0]), t(&r.g[1])],
        k: [r.k[2].theta(), r.k[3].theta(), r.k[0].theta(), r.k[1].theta()],
    }
}

/// Pushforward of a tangent along [`tau_real_structure`].
pub fn tau_tangent(r: &AnnulusRep, d: &TangentRep) -> TangentRep {
    let inv = |i: usize| r.g[i].inv().ad(&d.xi[i]).scale_re(-1.0).d_theta();
    TangentRep {
        xi: [
            inv(2),
            inv(3),
            inv(0),
            inv(1),
            d.xi[6].d_theta(),
            d.xi[7].d_theta(),
            d.xi[4].d_theta(),
            d.xi[5].d_theta(),
        ],
    }
}

/// `|Ω(dτδ, dτδ′) − conj Ω(δ, δ′)|`.
pub fn tau_residual(r: &AnnulusRep, d: &TangentRep, e: &TangentRep) -> f64 {
    let lhs = omega_annulus(&tau_real_structure(r), &tau_tangent(r, d), &tau_tangent(r, e));
    (lhs - omega_annulus(r, d, e).conj()).norm()
}

/// `h = U·L` with `U ∈ G₋`, `L ∈ G₊`; needs `h₂₂ ≠ 0`.
pub fn gauss_split(h: &GElem) -> Result<(GElem, GElem)> {
    let i = C64::new(0.0, 1.0);
    let h22 = h.a[(1, 1)];
    if h22.norm() < 1e-12 {
        return Err(Error::InvalidArgument("Gauss split needs a nonzero (2,2) entry".into()));
    }
    let d = i * h22.ln();
    let ze = (h.z + d) * 0.5;
    let zp = (h.z - d) * 0.5;
    let w = h.a[(0, 1)] * (-i * zp).exp();
    let wp = h.a[(1, 0)] * (i * ze).exp();
    Ok((GElem::g_minus(ze, w), GElem::g_plus(zp, wp)))
}

/// `D₋` element: `g = (1, z, 1, 1)`, `k = (ygz⁻¹, g, ug, g′)` with `g′ = y′ug = u′ygz⁻¹`;
/// `y′, u′` come from splitting `ugzg⁻¹y⁻¹`.
pub fn d_minus_element(z: &GElem, y: &GElem, u: &GElem, g: &GElem) -> Result<AnnulusRep> {
    for (x, side) in [(z, Side::Minus), (y, Side::Minus), (u, Side::Plus)] {
        let r = x.subgroup_residual(side);
        if r > 1e-9 {
            return Err(Error::NotInSubgroup(r));
        }
    }
    let h = u.mul(g).mul(z).mul(&g.inv()).mul(&y.inv());
    let (upper, _) = gauss_split(&h)?;
    let gp = upper.inv().mul(u).mul(g);
    let one = GElem::identity();
    Ok(AnnulusRep {
        g: [one, *z, one, one],
        k: [y.mul(g).mul(&z.inv()), *g, u.mul(g), gp],
    })
}

/// Distinguished bisection element `λ(k) = (1,1,1,1,k,k,k,k)`.
pub fn core_bisection_lambda(k: &KElem) -> AnnulusRep {
    let one = GElem::identity();
    let kg = k.to_g();
    AnnulusRep {
        g: [one; 4],
        k: [kg; 4],
    }
}

fn require(x: &GElem, side: Side) -> Result<()> {
    let r = x.subgroup_residual(side);
    if r > 1e-9 {
        return Err(Error::NotInSubgroup(r));
    }
    Ok(())
}

/// `Λ_Z(b,k) = (1, bᵏ, 1, Θ(bᵏ), ᵇk, k, k, ᵇk)` for `b ∈ G₋`.
pub fn lambda_z_element(b: &GElem, k: &KElem) -> Result<AnnulusRep> {
    require(b, Side::Minus)?;
    let (kk, bk) = dressing(b, k, Side::Minus);
    let one = GElem::identity();
    let (kk, k) = (kk.to_g(), k.to_g());
    Ok(AnnulusRep {
        g: [one, bk, one, bk.theta()],
        k: [kk, k, k, kk],
    })
}

/// `Λ_W̄(a,k) = (Θ(aᵏ), 1, aᵏ, 1, k, k, ᵃk, ᵃk)` for `a ∈ G₊`.
pub fn lambda_w_element(a: &GElem, k: &KElem) -> Result<AnnulusRep> {
    require(a, Side::Plus)?;
    let (kk, ak) = dressing(a, k, Side::Plus);
    let one = GElem::identity();
    let (kk, k) = (kk.to_g(), k.to_g());
    Ok(AnnulusRep {
        g: [ak.theta(), one, ak, one],
        k: [k, k, kk, kk],
    })
}

/// The three bisection families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bisection {
    Lambda,
    LambdaZ,
    LambdaWBar,
}

impl Bisection {
    pub fn side(self) -> Side {
        match self {
            Bisection::LambdaWBar => Side::Plus,
            _ => Side::Minus,
        }
    }

    pub fn label(self) -> BoundaryLabel {
        BoundaryLabel::of(match self {
            Bisection::Lambda => BoundaryName::C,
            Bisection::LambdaZ => BoundaryName::Z,
            Bisection::LambdaWBar => BoundaryName::WBar,
        })
    }

    pub fn element(self, x: &GElem, k: &KElem) -> Result<AnnulusRep> {
        match self {
            Bisection::Lambda => Ok(core_bisection_lambda(k)),
            Bisection::LambdaZ => lambda_z_element(x, k),
            Bisection::LambdaWBar => lambda_w_element(x, k),
        }
    }

    /// Reference Im profile: `Ω_Z`, `Ω_W̄ = −(…)` on `G₊ × K`, zero on `λ`.
    pub fn reference_im(self, x: &GElem, k: &KElem, v1: &PairTangent, v2: &PairTangent) -> Result<f64> {
        match self {
            Bisection::Lambda => Ok(0.0),
            Bisection::LambdaZ => omega_z_eval(x, k, v1, v2, Side::Minus),
            Bisection::LambdaWBar => Ok(-omega_z_eval(x, k, v1, v2, Side::Plus)?),
        }
    }
}

/// Pullback of [`omega_annulus`] along a bisection family at `(x, k)`.
pub fn bisection_pullback(fam: Bisection, x: &GElem, k: &KElem, v1: &PairTangent, v2: &PairTangent) -> Result<C64> {
    let base = fam.element(x, k)?;
    let tangent = |v: &PairTangent| -> Result<TangentRep> {
        let at = |t: f64| -> Result<[GElem; 8]> {
            let xx = GElem::exp(&v.beta.scale_re(t)).mul(x);
            let kk = GElem::exp(&v.kappa.scale_re(t)).mul(&k.to_g());
            let kk = KElem::from_g(&kk)?;
            Ok(fam.element(&xx, &kk)?.gens())
        };
        for t in [-2.0, -1.0, 1.0, 2.0] {
            at(t * GROUP_FD_STEP)?;
        }
        Ok(TangentRep {
            xi: std::array::from_fn(|i| right_tangent(|t| at(t).expect("checked above")[i], GROUP_FD_STEP)),
        })
    };
    Ok(omega_annulus(&base, &tangent(v1)?, &tangent(v2)?))
}

/// Random tangent to the parameter space `G± × K` of a family.
pub fn random_pair_tangent(fam: Bisection, rng: &mut Stream) -> PairTangent {
    let beta = match fam {
        Bisection::Lambda => AlgVec::zero(),
        _ => combo(&subalgebra_basis(fam.side()), &normal_vec(rng, 4)),
    };
    PairTangent {
        beta,
        kappa: combo(&k_basis(), &normal_vec(rng, 4)),
    }
}

/// Random subgroup element of moderate size.
pub fn random_subgroup_elem(side: Side, rng: &mut Stream, scale: f64) -> GElem {
    GElem::in_subgroup(side, normal_c(rng) * scale, normal_c(rng) * scale)
}

/// Real and imaginary pullback residuals of a bisection family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagrangianReport {
    pub family: Bisection,
    pub samples: usize,
    pub max_re: f64,
    pub max_im_mismatch: f64,
    pub max_boundary: f64,
}

/// Pulls [`omega_annulus`] back along `fam` at `samples` seeded points.
pub fn lagrangian_residual(fam: Bisection, seed: u64, samples: usize) -> Result<LagrangianReport> {
    let mut rep = LagrangianReport {
        family: fam,
        samples,
        max_re: 0.0,
        max_im_mismatch: 0.0,
        max_boundary: 0.0,
    };
    for s in 0..samples {
        let mut rng = crate::rng::stream(seed, s as u64);
        let x = random_subgroup_elem(fam.side(), &mut rng, 0.5);
        let k = KElem::random(&mut rng);
        let v1 = random_pair_tangent(fam, &mut rng);
        let v2 = random_pair_tangent(fam, &mut rng);
        let p = bisection_pullback(fam, &x, &k, &v1, &v2)?;
        let reference = fam.reference_im(&x, &k, &v1, &v2)?;
        let elem = fam.element(&x, &k)?;
        rep.max_re = rep.max_re.max(p.re.abs());
        rep.max_im_mismatch = rep.max_im_mismatch.max((p.im - C_Z * reference).abs());
        rep.max_boundary = rep.max_boundary.max(boundary_check(&elem, &fam.label(), 0.0).max());
    }
    Ok(rep)
}

/// Boundary residuals of the three parametrized families against their rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordTableReport {
    pub d_minus: f64,
    pub lambda_z: f64,
    pub lambda_wbar: f64,
}

impl WordTableReport {
    pub fn max(&self) -> f64 {
        self.d_minus.max(self.lambda_z).max(self.lambda_wbar)
    }
}

/// Validates the inner-arc word table on seeded parametrized families.
pub fn validate_word_table(seed: u64, samples: usize) -> Result<WordTableReport> {
    let mut rep = WordTableReport {
        d_minus: 0.0,
        lambda_z: 0.0,
        lambda_wbar: 0.0,
    };
    for s in 0..samples {
        let mut rng = crate::rng::stream(seed, s as u64);
        let z = random_subgroup_elem(Side::Minus, &mut rng, 0.5);
        let y = random_subgroup_elem(Side::Minus, &mut rng, 0.5);
        let u = random_subgroup_elem(Side::Plus, &mut rng, 0.5);
        let g = GElem::random(&mut rng, 0.5);
        let dm = d_minus_element(&z, &y, &u, &g)?;
        rep.d_minus = rep.d_minus.max(boundary_check(&dm, &BoundaryLabel::of(BoundaryName::DMinus), 0.0).max());
        let k = KElem::random(&mut rng);
        let b = random_subgroup_elem(Side::Minus, &mut rng, 0.5);
        let lz = lambda_z_element(&b, &k)?;
        rep.lambda_z = rep.lambda_z.max(boundary_check(&lz, &BoundaryLabel::of(BoundaryName::Z), 0.0).max());
        let a = random_subgroup_elem(Side::Plus, &mut rng, 0.5);
        let lw = lambda_w_element(&a, &k)?;
        rep.lambda_wbar = rep.lambda_wbar.max(boundary_check(&lw, &BoundaryLabel::of(BoundaryName::WBar), 0.0).max());
    }
    Ok(rep)
}

/// Composable pair on a boundary level set, with tangent pairs satisfying
/// the linearized constraints.
#[derive(Debug, Clone)]
pub struct ComposableSample {
    pub label: BoundaryLabel,
    pub dir: Direction,
    pub first: AnnulusRep,
    pub second: AnnulusRep,
    pub constraint_residual: f64,
    pub tangents: Vec<(TangentRep, TangentRep)>,
}

/// `13` generators: the eight of `ρ` and the five free generators of `ρ′`.
fn assemble(dir: Direction, p: &[GElem]) -> (AnnulusRep, AnnulusRep) {
    let r: [GElem; 8] = std::array::from_fn(|i| p[i]);
    let shared = shared_generators(dir);
    let mut free = 8;
    let q: [GElem; 8] = std::array::from_fn(|i| match shared.iter().find(|(a, _)| *a == i) {
        Some((_, j)) => r[*j],
        None => {
            free += 1;
            p[free - 1]
        }
    });
    (AnnulusRep::from_gens(r), AnnulusRep::from_gens(q))
}

fn assemble_tangent(dir: Direction, x: &[AlgVec]) -> (TangentRep, TangentRep) {
    let r: [AlgVec; 8] = std::array::from_fn(|i| x[i]);
    let shared = shared_generators(dir);
    let mut free = 8;
    let q: [AlgVec; 8] = std::array::from_fn(|i| match shared.iter().find(|(a, _)| *a == i) {
        Some((_, j)) => r[*j],
        None => {
            free += 1;
            x[free - 1]
        }
    });
    (TangentRep { xi: r }, TangentRep { xi: q })
}

/// Derivative of [`GElem::subgroup_equations`] along `δg = ξg`.
fn equation_derivative(g: &GElem, side: Side, xi: &AlgVec) -> [C64; 2] {
    let i = C64::new(0.0, 1.0);
    let xa = xi.x * g.a;
    match side {
        Side::Minus => [xa[(1, 0)], (xa[(0, 0)] - i * xi.u * g.a[(0, 0)]) * (-i * g.z).exp()],
        Side::Plus => [xa[(0, 1)], (xa[(0, 0)] + i * xi.u * g.a[(0, 0)]) * (i * g.z).exp()],
    }
}

fn push_complex(out: &mut Vec<f64>, vals: &[C64]) {
    for v in vals {
        out.push(v.re);
        out.push(v.im);
    }
}

fn level_residual(dir: Direction, label: &BoundaryLabel, p: &[GElem]) -> DVector<f64> {
    let (r, q) = assemble(dir, p);
    let mut out = Vec::with_capacity(64);
    for rep in [r, q] {
        for (m, side) in moment_map(&rep).iter().zip(label.row.iter()) {
            push_complex(&mut out, &m.subgroup_equations(*side));
        }
    }
    DVector::from_vec(out)
}

fn level_jacobian(dir: Direction, label: &BoundaryLabel, p: &[GElem]) -> RMat {
    let (r, q) = assemble(dir, p);
    let (mr, mq) = (moment_map(&r), moment_map(&q));
    let n = p.len() * 8;
    let mut jac = RMat::zeros(64, n);
    for col in 0..n {
        let mut x = vec![AlgVec::zero(); p.len()];
        let mut e = [0.0; 8];
        e[col % 8] = 1.0;
        x[col / 8] = AlgVec::from_real(&e);
        let (dr, dq) = assemble_tangent(dir, &x);
        let mut out = Vec::with_capacity(64);
        for (rep, mu, d) in [(&r, &mr, &dr), (&q, &mq, &dq)] {
            let t = moment_tangent(rep, d);
            for i in 0..8 {
                push_complex(&mut out, &equation_derivative(&mu[i], label.row[i], &t[i]));
            }
        }
        jac.set_column(col, &DVector::from_vec(out));
    }
    jac
}

fn retract(p: &[GElem], dx: &DVector<f64>) -> Vec<GElem> {
    p.iter()
        .enumerate()
        .map(|(i, g)| GElem::exp(&AlgVec::from_real(&dx.as_slice()[8 * i..8 * i + 8])).mul(g))
        .collect()
}

const MAX_STARTS: usize = 5;
const MAX_STEP: f64 = 0.5;

/// Damped Gauss-Newton projection onto the level set.
fn project_to_level_set(dir: Direction, label: &BoundaryLabel, mut p: Vec<GElem>) -> Result<(Vec<GElem>, f64)> {
    for _ in 0..60 {
        let f = level_residual(dir, label, &p);
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NoConvergence(f64::INFINITY));
        }
        if f.amax() < 1e-14 {
            break;
        }
        let svd = SVD::new(level_jacobian(dir, label, &p), true, true);
        let mut dx = svd
            .solve(&(-f), 1e-12)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let size = dx.amax();
        if size > MAX_STEP {
            dx *= MAX_STEP / size;
        }
        p = retract(&p, &dx);
    }
    let res = level_residual(dir, label, &p).amax();
    if !(res <= 1e-12) {
        return Err(Error::NoConvergence(res));
    }
    Ok((p, res))
}

/// Samples a composable pair in the level set of `label` by Gauss-Newton
/// projection from a random start, then `n_tangents` random tangent pairs
/// from the kernel of the linearized constraints.
pub fn sample_composable(
    label: &BoundaryLabel,
    dir: Direction,
    rng: &mut Stream,
    n_tangents: usize,
) -> Result<ComposableSample> {
    let mut last = f64::INFINITY;
    let mut found = None;
    for _ in 0..MAX_STARTS {
        let start: Vec<GElem> = (0..13).map(|_| GElem::random(rng, 0.3)).collect();
        match project_to_level_set(dir, label, start) {
            Ok((p, res)) => {
                found = Some((p, res));
                break;
            }
            Err(Error::NoConvergence(r)) => last = r,
            Err(e) => return Err(e),
        }
    }
    let (p, res) = found.ok_or(Error::NoConvergence(last))?;
    let jac = level_jacobian(dir, label, &p);
    let kernel = real_nullspace(&jac, 1e-9);
    let tangents = (0..n_tangents)
        .map(|_| {
            let c = DVector::from_vec(normal_vec(rng, kernel.ncols()));
            let x = &kernel * c;
            let algs: Vec<AlgVec> = (0..13).map(|i| AlgVec::from_real(&x.as_slice()[8 * i..8 * i + 8])).collect();
            assemble_tangent(dir, &algs)
        })
        .collect();
    let (first, second) = assemble(dir, &p);
    Ok(ComposableSample {
        label: *label,
        dir,
        first,
        second,
        constraint_residual: res,
        tangents,
    })
}
