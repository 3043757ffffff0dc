//! Pointwise generalized Kähler linear algebra.
//!
//! A [`BihermitianPoint`] holds a metric `g` and two compatible complex
//! structures `I₊, I₋` on `ℝ²ⁿ`. Hermitian forms are stored as the
//! covector maps `ω± = g I±`, so `ι_X ω± = ω± X`.

use serde::Serialize;

use crate::rng::{normal_mat, Stream};
use crate::split::{complexify, hstack, intersect, vstack, SplitSpace, Subspace};
use crate::{Error, Result, C64, CMat, RMat, DEFAULT_TOL};

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Metric signature class of a bihermitian point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Signature {
    Gk,
    PseudoGk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BihermitianPoint {
    n: usize,
    g: RMat,
    ip: RMat,
    im: RMat,
}

fn max_abs(a: &RMat) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn cmax_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// Residual of `I² = −Id`.
pub fn complex_structure_residual(i: &RMat) -> f64 {
    let m = i.nrows();
    max_abs(&(i * i + RMat::identity(m, m)))
}

/// Residual of `Iᵀ g I = g`.
pub fn orthogonality_residual(g: &RMat, i: &RMat) -> f64 {
    max_abs(&(i.transpose() * g * i - g))
}

impl BihermitianPoint {
    pub fn new(g: RMat, ip: RMat, im: RMat) -> Result<Self> {
        let m = g.nrows();
        if m % 2 != 0 || m == 0 {
            return Err(Error::InvalidArgument(format!("odd or empty dimension {m}")));
        }
        for a in [&g, &ip, &im] {
            if a.shape() != (m, m) {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: a.nrows(),
                });
            }
        }
        let scale = max_abs(&g).max(1.0);
        if max_abs(&(&g - g.transpose())) > DEFAULT_TOL * scale {
            return Err(Error::IncompatibleBihermitian("g is not symmetric".into()));
        }
        for i in [&ip, &im] {
            let r = complex_structure_residual(i);
            if r > 1e-8 {
                return Err(Error::NotComplexStructure(r));
            }
            if orthogonality_residual(&g, i) > 1e-8 * scale {
                return Err(Error::IncompatibleBihermitian(
                    "complex structure is not g-orthogonal".into(),
                ));
            }
        }
        if g.clone().try_inverse().is_none() {
            return Err(Error::DegenerateMetric);
        }
        Ok(Self { n: m / 2, g, ip, im })
    }

    /// Kähler point `I₊ = I₋ = I`.
    pub fn kahler(g: RMat, i: RMat) -> Result<Self> {
        Self::new(g, i.clone(), i)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    pub fn m(&self) -> usize {
        2 * self.n
    }

    pub fn g(&self) -> &RMat {
        &self.g
    }

    pub fn g_inv(&self) -> RMat {
        self.g.clone().try_inverse().expect("checked at construction")
    }

    pub fn i_plus(&self) -> &RMat {
        &self.ip
    }

    pub fn i_minus(&self) -> &RMat {
        &self.im
    }

    pub fn omega_plus(&self) -> RMat {
        &self.g * &self.ip
    }

    pub fn omega_minus(&self) -> RMat {
        &self.g * &self.im
    }

    pub fn signature(&self) -> Signature {
        classify(&self.g)
    }

    /// Same metric and `I₊`, with `I₋` replaced by `−I₋`.
    pub fn flip_minus(&self) -> Self {
        Self {
            n: self.n,
            g: self.g.clone(),
            ip: self.ip.clone(),
            im: -&self.im,
        }
    }
}

pub fn classify(g: &RMat) -> Signature {
    if g.clone().symmetric_eigenvalues().min() > 0.0 {
        Signature::Gk
    } else {
        Signature::PseudoGk
    }
}

/// Block-diagonal `J₀ = diag([[0,−1],[1,0]], …)` on `ℝ²ⁿ`.
pub fn standard_j(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// Frame `E` with `Eᵀ g E = Id` and `det E > 0`, by Gram–Schmidt of a
/// seeded Gaussian matrix against `g`.
pub fn g_orthonormal_frame(g: &RMat, rng: &mut Stream) -> RMat {
    let m = g.nrows();
    loop {
        let raw = normal_mat(rng, m, m);
        let mut e = RMat::zeros(m, m);
        let mut ok = true;
        for j in 0..m {
            let mut v = raw.column(j).into_owned();
            for k in 0..j {
                let ek = e.column(k).into_owned();
                let c = (ek.transpose() * g * &v)[(0, 0)];
                v -= ek * c;
            }
            let nrm2 = (v.transpose() * g * &v)[(0, 0)];
            if nrm2 <= 1e-12 {
                ok = false;
                break;
            }
            e.set_column(j, &(v / nrm2.sqrt()));
        }
        if !ok {
            continue;
        }
        if e.determinant() < 0.0 {
            let c0 = -e.column(0).into_owned();
            e.set_column(0, &c0);
        }
        return e;
    }
}

/// Seeded bihermitian point: `g = AᵀA + ½Id`, `I± = E± J₀ E±⁻¹` with `E±`
/// oriented `g`-orthonormal frames.
pub fn random_point(n: usize, rng: &mut Stream) -> BihermitianPoint {
    let m = 2 * n;
    let a = normal_mat(rng, m, m);
    let g = a.transpose() * &a + RMat::identity(m, m) * 0.5;
    let j0 = standard_j(n);
    let conj = |rng: &mut Stream| {
        let e = g_orthonormal_frame(&g, rng);
        let ei = e.clone().try_inverse().expect("frame is invertible");
        &e * &j0 * ei
    };
    let ip = conj(rng);
    let im = conj(rng);
    BihermitianPoint::new(g, ip, im).expect("construction is compatible")
}

/// Seeded point with an indefinite metric having `neg` negative complex
/// directions.
pub fn random_pseudo_point(n: usize, neg: usize, rng: &mut Stream) -> BihermitianPoint {
    let m = 2 * n;
    let split = 2 * (n - neg);
    let d = RMat::from_fn(m, m, |i, j| {
        if i != j {
            0.0
        } else if i < split {
            1.0
        } else {
            -1.0
        }
    });
    let e = normal_mat(rng, m, m) + RMat::identity(m, m) * 3.0;
    let ei = e.clone().try_inverse().expect("well-conditioned");
    let mut r = RMat::zeros(m, m);
    for (start, len) in [(0, split), (split, m - split)] {
        if len == 0 {
            continue;
        }
        let q = normal_mat(rng, len, len).qr().q();
        r.view_mut((start, start), (len, len)).copy_from(&q);
    }
    let j0 = standard_j(n);
    let g = ei.transpose() * &d * &ei;
    let g = (&g + g.transpose()) * 0.5;
    let ip = &e * &j0 * &ei;
    let im = &e * &r * &j0 * r.transpose() * &ei;
    BihermitianPoint::new(g, ip, im).expect("construction is compatible")
}

/// A pair of generalized complex structures on `T ⊕ T*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcPair {
    pub ja: RMat,
    pub jb: RMat,
}

fn blocks(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> RMat {
    let m = a.nrows();
    let mut out = RMat::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((0, m), (m, m)).copy_from(b);
    out.view_mut((m, 0), (m, m)).copy_from(c);
    out.view_mut((m, m), (m, m)).copy_from(d);
    out
}

/// The block formula for `(𝕁_A, 𝕁_B)` in terms of `(g, I₊, I₋)`.
pub fn gualtieri_map(b: &BihermitianPoint) -> Result<GcPair> {
    let scale = max_abs(b.g()).max(1.0);
    for i in [b.i_plus(), b.i_minus()] {
        if orthogonality_residual(b.g(), i) > 1e-8 * scale {
            return Err(Error::IncompatibleBihermitian(
                "complex structure is not g-orthogonal".into(),
            ));
        }
    }
    let (ip, im, g) = (b.i_plus(), b.i_minus(), b.g());
    let gi = b.g_inv();
    let sum = ip + im;
    let diff = ip - im;
    let ja = blocks(&sum, &(&diff * &gi), &(g * &diff), &(-sum.transpose())) * 0.5;
    let jb = blocks(&diff, &(&sum * &gi), &(g * &sum), &(-diff.transpose())) * 0.5;
    Ok(GcPair { ja, jb })
}

/// Residuals of the generalized Kähler axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub square: f64,
    pub commutator: f64,
    pub orthogonality: f64,
    pub metric_min_eig: f64,
}

impl AxiomReport {
    pub fn is_gk(&self, tol: f64) -> bool {
        self.square < tol && self.commutator < tol && self.orthogonality < tol && self.metric_min_eig > 0.0
    }
}

/// Generalized metric `⟨𝕁_A·, 𝕁_B·⟩` as a symmetric matrix.
pub fn generalized_metric(p: &GcPair) -> RMat {
    let space = SplitSpace::new(p.ja.nrows() / 2);
    let pm = space.pairing_matrix();
    let g = p.ja.transpose() * pm * &p.jb;
    (&g + g.transpose()) * 0.5
}

pub fn gk_axioms_check(p: &GcPair) -> AxiomReport {
    let dim = p.ja.nrows();
    let id = RMat::identity(dim, dim);
    let pm = SplitSpace::new(dim / 2).pairing_matrix();
    let square = max_abs(&(&p.ja * &p.ja + &id)).max(max_abs(&(&p.jb * &p.jb + &id)));
    let commutator = max_abs(&(&p.ja * &p.jb - &p.jb * &p.ja));
    let orthogonality = max_abs(&(p.ja.transpose() * &pm * &p.ja - &pm))
        .max(max_abs(&(p.jb.transpose() * &pm * &p.jb - &pm)));
    let metric_min_eig = generalized_metric(p).symmetric_eigenvalues().min();
    AxiomReport {
        square,
        commutator,
        orthogonality,
        metric_min_eig,
    }
}

/// Role of a Dirac subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiracLabel {
    LA,
    LB,
    EllPlus,
    EllMinus,
    APlus,
    AMinus,
    BPlus,
    BMinus,
    MatchedPair,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracData {
    pub label: DiracLabel,
    pub sub: Subspace,
}

/// `+i` eigenspace of `J`, the column span of `Id − iJ`.
pub fn plus_i_eigenspace(j: &RMat) -> Result<DiracData> {
    let dim = j.nrows();
    let r = complex_structure_residual(j);
    if j.ncols() != dim || r > 1e-8 {
        return Err(Error::NotComplexStructure(r));
    }
    let a = CMat::identity(dim, dim) - complexify(j) * I_UNIT;
    let sub = Subspace::from_columns(&a);
    if 2 * sub.rank() != dim {
        return Err(Error::NotComplexStructure(r));
    }
    Ok(DiracData {
        label: DiracLabel::Generic,
        sub,
    })
}

/// `T₁,₀ = ker(I − i)` as a subspace of `T_ℂ`.
pub fn t10(i: &RMat) -> Subspace {
    let m = i.nrows();
    Subspace::from_columns(&(CMat::identity(m, m) - complexify(i) * I_UNIT))
}

/// `T₀,₁ = ker(I + i)`.
pub fn t01(i: &RMat) -> Subspace {
    let m = i.nrows();
    Subspace::from_columns(&(CMat::identity(m, m) + complexify(i) * I_UNIT))
}

/// Embed a tangent subspace into `T_ℂ ⊕ T*_ℂ`.
pub fn tangent_embed(s: &Subspace) -> Subspace {
    let m = s.ambient_dim();
    Subspace::from_columns(&vstack(s.frame(), &CMat::zeros(m, s.rank())))
}

/// Embed a cotangent subspace into `T_ℂ ⊕ T*_ℂ`.
pub fn cotangent_embed(s: &Subspace) -> Subspace {
    let m = s.ambient_dim();
    Subspace::from_columns(&vstack(&CMat::zeros(m, s.rank()), s.frame()))
}

/// `𝕋₁,₀ = T₁,₀ ⊕ T*₁,₀` where `T*₁,₀ = ann(T₀,₁)`.
pub fn holomorphic_courant(i: &RMat) -> Subspace {
    let m = i.nrows();
    let cot = Subspace::from_columns(&(CMat::identity(m, m) - complexify(&i.transpose()) * I_UNIT));
    tangent_embed(&t10(i)).sum(&cotangent_embed(&cot))
}

/// Graph `{πξ + ξ}` of a bivector, as a subspace of `T ⊕ T*`.
pub fn bivector_graph(pi: &CMat) -> Subspace {
    let m = pi.nrows();
    Subspace::from_columns(&vstack(pi, &CMat::identity(m, m)))
}

/// Graph `{X + BX}` of a 2-form.
pub fn form_graph(b: &CMat) -> Subspace {
    let m = b.nrows();
    Subspace::from_columns(&vstack(&CMat::identity(m, m), b))
}

/// `X + α ↦ X + α + BX` for antisymmetric `B`.
pub fn gauge_transform(b: &CMat, l: &Subspace) -> Result<Subspace> {
    let m = b.nrows();
    let asym = cmax_abs(&(b + b.transpose()));
    if asym > 1e-9 * cmax_abs(b).max(1.0) {
        return Err(Error::NotAntisymmetric(asym));
    }
    if l.ambient_dim() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: 2 * m,
            got: l.ambient_dim(),
        });
    }
    let mut e = CMat::identity(2 * m, 2 * m);
    e.view_mut((m, 0), (m, m)).copy_from(b);
    Ok(l.map(&e))
}

fn gauge(b: &RMat, scale: C64, l: &Subspace) -> Subspace {
    gauge_transform(&(complexify(b) * scale), l).expect("forms are antisymmetric")
}

/// `ℓ±` and their residuals against the eigenspace intersections.
#[derive(Debug, Clone)]
pub struct EllDecomposition {
    pub plus: Subspace,
    pub minus: Subspace,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

pub fn ell_decomposition(b: &BihermitianPoint) -> Result<EllDecomposition> {
    let plus = gauge(&b.omega_plus(), -I_UNIT, &tangent_embed(&t10(b.i_plus())));
    let minus = gauge(&b.omega_minus(), I_UNIT, &tangent_embed(&t10(b.i_minus())));
    let gc = gualtieri_map(b)?;
    let la = plus_i_eigenspace(&gc.ja)?.sub;
    let lb = plus_i_eigenspace(&gc.jb)?.sub;
    let residual_plus = plus.principal_angle(&intersect(&la, &lb)?);
    let residual_minus = minus.principal_angle(&intersect(&la, &lb.conj())?);
    Ok(EllDecomposition {
        plus,
        minus,
        residual_plus,
        residual_minus,
    })
}

/// Possibly complex bivector, stored as the map `T* → T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bivector {
    pub pi: CMat,
}

impl Bivector {
    pub fn new(pi: CMat) -> Result<Self> {
        let r = cmax_abs(&(&pi + pi.transpose()));
        if r > 1e-9 * cmax_abs(&pi).max(1.0) {
            return Err(Error::NotAntisymmetric(r));
        }
        Ok(Self { pi })
    }

    pub fn real(&self) -> RMat {
        self.pi.map(|z| z.re)
    }

    pub fn imag(&self) -> RMat {
        self.pi.map(|z| z.im)
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        cmax_abs(&(&self.pi + self.pi.transpose()))
    }
}

/// Baer difference `{X + α − β : X+α ∈ A, X+β ∈ B}`.
pub fn baer_difference(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    let m = a.ambient_dim() / 2;
    if b.ambient_dim() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: 2 * m,
            got: b.ambient_dim(),
        });
    }
    let at = a.frame().rows(0, m).into_owned();
    let bt = b.frame().rows(0, m).into_owned();
    let ker = crate::split::nullspace(&hstack(&at, &(-&bt)), DEFAULT_TOL);
    let ca = ker.rows(0, a.rank()).into_owned();
    let cb = ker.rows(a.rank(), b.rank()).into_owned();
    let va = a.frame() * ca;
    let vb = b.frame() * cb;
    let x = va.rows(0, m).into_owned();
    let xi = va.rows(m, m) - vb.rows(m, m);
    Ok(Subspace::from_columns(&vstack(&x, &xi)))
}

/// Bivector whose graph is `d`, defined on `pr_{T*}(d)` and extended by zero
/// on `complement`.
fn graph_to_bivector(d: &Subspace, complement: Option<&Subspace>) -> Result<Bivector> {
    let m = d.ambient_dim() / 2;
    let x = d.frame().rows(0, m).into_owned();
    let xi = d.frame().rows(m, m).into_owned();
    if d.rank() == 0 || xi.clone().singular_values().min() < 1e-9 {
        return Err(Error::NotAGraph);
    }
    let (domain, image) = match complement {
        None => {
            if d.rank() != m {
                return Err(Error::NotAGraph);
            }
            (xi, x)
        }
        Some(c) => (hstack(&xi, c.frame()), hstack(&x, &CMat::zeros(m, c.rank()))),
    };
    if domain.ncols() != m {
        return Err(Error::NotAGraph);
    }
    let inv = domain.try_inverse().ok_or(Error::NotAGraph)?;
    Bivector::new(image * inv)
}

/// `σ` with `Gr(σ) = A − B`; requires the difference to be a graph over all
/// of `T*`.
pub fn dirac_difference(a: &Subspace, b: &Subspace) -> Result<Bivector> {
    graph_to_bivector(&baer_difference(a, b)?, None)
}

/// Holomorphic difference of two subspaces of `𝕋₁,₀`: the bivector is read
/// off on `T*₁,₀` and vanishes on `T*₀,₁`.
pub fn holomorphic_difference(a: &Subspace, b: &Subspace, i: &RMat) -> Result<Bivector> {
    let m = i.nrows();
    let d = baer_difference(a, b)?;
    let cot01 = Subspace::from_columns(&(CMat::identity(m, m) + complexify(&i.transpose()) * I_UNIT));
    graph_to_bivector(&d, Some(&cot01))
}

/// Holomorphic Manin triples `(𝒜₊, ℬ₊, 𝒜₋, ℬ₋)` in `𝕋_ℂ`.
#[derive(Debug, Clone)]
pub struct ManinTriples {
    pub a_plus: Subspace,
    pub b_plus: Subspace,
    pub a_minus: Subspace,
    pub b_minus: Subspace,
}

impl ManinTriples {
    /// `L_𝒜 = T₀,₁ ⊕ 𝒜` for the plus (`I₊`) or minus (`I₋`) side.
    pub fn matched_pair(sub: &Subspace, i: &RMat) -> Subspace {
        tangent_embed(&t01(i)).sum(sub)
    }
}

pub fn manin_triples(b: &BihermitianPoint) -> Result<ManinTriples> {
    let m = b.m();
    if b.g().clone().try_inverse().is_none() {
        return Err(Error::DegenerateMetric);
    }
    let id = CMat::identity(m, m);
    let ip = complexify(b.i_plus());
    let g = complexify(b.g());
    let p10 = (&id - &ip * I_UNIT) * C64::new(0.5, 0.0);
    let p01 = (&id + &ip * I_UNIT) * C64::new(0.5, 0.0);
    let explicit = |x: &Subspace| {
        let top = &p10 * x.frame();
        let bottom = &g * &p01 * x.frame() * C64::new(-2.0, 0.0);
        Subspace::from_columns(&vstack(&top, &bottom))
    };
    let a_plus = explicit(&t01(b.i_minus()));
    let b_plus = explicit(&t10(b.i_minus()));

    let gc = gualtieri_map(b)?;
    let la = plus_i_eigenspace(&gc.ja)?.sub;
    let lb = plus_i_eigenspace(&gc.jb)?.sub;
    let hol_minus = holomorphic_courant(b.i_minus());
    let a_minus = intersect(&hol_minus, &gauge(&b.omega_minus(), I_UNIT, &la.conj()))?;
    let b_minus = intersect(&hol_minus, &gauge(&b.omega_minus(), I_UNIT, &lb))?;
    Ok(ManinTriples {
        a_plus,
        b_plus,
        a_minus,
        b_minus,
    })
}

/// Structural residuals of the Manin triples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ManinReport {
    pub dims_ok: bool,
    pub isotropy: f64,
    pub direct_sum_ok: bool,
    pub matched_pair: f64,
}

pub fn manin_report(b: &BihermitianPoint, t: &ManinTriples) -> Result<ManinReport> {
    let n = b.n();
    let space = SplitSpace::new(b.m());
    let subs = [&t.a_plus, &t.b_plus, &t.a_minus, &t.b_minus];
    let dims_ok = subs.iter().all(|s| s.rank() == n);
    let isotropy = subs
        .iter()
        .map(|s| crate::split::isotropy_check(s, &space))
        .fold(0.0, f64::max);
    let direct_sum_ok = t.a_plus.sum(&t.b_plus).rank() == 2 * n && t.a_minus.sum(&t.b_minus).rank() == 2 * n;
    let gc = gualtieri_map(b)?;
    let la = plus_i_eigenspace(&gc.ja)?.sub;
    let lap = ManinTriples::matched_pair(&t.a_plus, b.i_plus());
    let matched_pair = lap.principal_angle(&gauge(&b.omega_plus(), -I_UNIT, &la.conj()));
    Ok(ManinReport {
        dims_ok,
        isotropy,
        direct_sum_ok,
        matched_pair,
    })
}

/// Residuals of `L_𝒜₊ = e^{−i(ω₊+ω₋)} L_𝒜₋` and
/// `conj(L_ℬ₋) = e^{i(ω₊−ω₋)} L_ℬ₊`.
pub fn gauge_cycle_check(b: &BihermitianPoint) -> Result<(f64, f64)> {
    let t = manin_triples(b)?;
    let lap = ManinTriples::matched_pair(&t.a_plus, b.i_plus());
    let lam = ManinTriples::matched_pair(&t.a_minus, b.i_minus());
    let lbp = ManinTriples::matched_pair(&t.b_plus, b.i_plus());
    let lbm = ManinTriples::matched_pair(&t.b_minus, b.i_minus());
    let sum = b.omega_plus() + b.omega_minus();
    let diff = b.omega_plus() - b.omega_minus();
    let r1 = lap.principal_angle(&gauge(&sum, -I_UNIT, &lam));
    let r2 = lbm.conj().principal_angle(&gauge(&diff, I_UNIT, &lbp));
    Ok((r1, r2))
}

/// Real Poisson tensors and the real part of the Hitchin bivector.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTensors {
    pub pi_a: RMat,
    pub pi_b: RMat,
    pub q: RMat,
}

impl PoissonTensors {
    /// `|−π_A g π_B − (−¼[I₊,I₋]g⁻¹)|`.
    pub fn hitchin_consistency(&self, b: &BihermitianPoint) -> f64 {
        max_abs(&(&self.q - hitchin_real(b)))
    }
}

/// `−¼[I₊,I₋]g⁻¹`.
pub fn hitchin_real(b: &BihermitianPoint) -> RMat {
    let (ip, im) = (b.i_plus(), b.i_minus());
    (ip * im - im * ip) * b.g_inv() * (-0.25)
}

pub fn poisson_tensors(b: &BihermitianPoint) -> PoissonTensors {
    let gi = b.g_inv();
    let pi_a = (b.i_plus() - b.i_minus()) * &gi * 0.5;
    let pi_b = (b.i_plus() + b.i_minus()) * &gi * 0.5;
    let q = -(&pi_a * b.g() * &pi_b);
    PoissonTensors { pi_a, pi_b, q }
}

/// Real and imaginary parts `(L_R, L_I)` of a complex Dirac subspace.
pub fn real_imag_parts(l: &Subspace) -> Result<(Subspace, Subspace)> {
    let m = l.ambient_dim() / 2;
    let lc = l.conj();
    let lt = l.frame().rows(0, m).into_owned();
    let lct = lc.frame().rows(0, m).into_owned();
    if Subspace::from_columns(&hstack(&lt, &lct)).rank() != m {
        return Err(Error::NonTransverse);
    }
    let ker = crate::split::nullspace(&hstack(&lt, &(-&lct)), DEFAULT_TOL);
    let va = l.frame() * ker.rows(0, l.rank());
    let vb = lc.frame() * ker.rows(l.rank(), lc.rank());
    let x = va.rows(0, m).into_owned();
    let alpha = va.rows(m, m).into_owned();
    let beta = vb.rows(m, m).into_owned();
    let re = vstack(&x, &((&alpha + &beta) * C64::new(0.5, 0.0)));
    let im = vstack(&x, &((&alpha - &beta) * C64::new(0.0, -0.5)));
    let real_part = Subspace::from_columns(&re).realification();
    let imag_part = Subspace::from_columns(&im).realification();
    Ok((real_part, imag_part))
}

/// Residuals of the imaginary- and real-part identities for the triples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImagPartReport {
    pub a_plus_imag: f64,
    pub b_plus_imag: f64,
    pub a_minus_imag: f64,
    pub b_minus_imag: f64,
    pub a_real: f64,
    pub b_real: f64,
}

impl ImagPartReport {
    pub fn max(&self) -> f64 {
        [
            self.a_plus_imag,
            self.b_plus_imag,
            self.a_minus_imag,
            self.b_minus_imag,
            self.a_real,
            self.b_real,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn imag_part_identities(b: &BihermitianPoint) -> Result<ImagPartReport> {
    imag_part_identities_with(b, &poisson_tensors(b))
}

/// As [`imag_part_identities`] with externally supplied Poisson tensors.
pub fn imag_part_identities_with(b: &BihermitianPoint, pt: &PoissonTensors) -> Result<ImagPartReport> {
    let t = manin_triples(b)?;
    let gc = gualtieri_map(b)?;
    let one = C64::new(1.0, 0.0);
    let wp = b.omega_plus();
    let wm = b.omega_minus();
    let gr = |p: &RMat, s: f64| bivector_graph(&(complexify(p) * C64::new(s, 0.0)));
    let lap = ManinTriples::matched_pair(&t.a_plus, b.i_plus());
    let lbp = ManinTriples::matched_pair(&t.b_plus, b.i_plus());
    let lam = ManinTriples::matched_pair(&t.a_minus, b.i_minus());
    let lbm = ManinTriples::matched_pair(&t.b_minus, b.i_minus());
    let (ap_r, ap_i) = real_imag_parts(&lap)?;
    let (bp_r, bp_i) = real_imag_parts(&lbp)?;
    let (am_r, am_i) = real_imag_parts(&lam)?;
    let (bm_r, bm_i) = real_imag_parts(&lbm)?;
    let a_plus_imag = ap_i.principal_angle(&gauge(&wp, -one, &gr(&pt.pi_a, -1.0)));
    let b_plus_imag = bp_i.principal_angle(&gauge(&wp, -one, &gr(&pt.pi_b, -1.0)));
    let a_minus_imag = am_i.principal_angle(&gauge(&wm, one, &gr(&pt.pi_a, -1.0)));
    let b_minus_imag = bm_i.principal_angle(&gauge(&wm, one, &gr(&pt.pi_b, 1.0)));
    let m = b.m();
    let cot = cotangent_embed(&Subspace::full(m));
    let ja_t = cot.map(&complexify(&gc.ja));
    let jb_t = cot.map(&complexify(&gc.jb));
    let a_real = ap_r.principal_angle(&ja_t).max(am_r.principal_angle(&ja_t));
    let b_real = bp_r.principal_angle(&jb_t).max(bm_r.principal_angle(&jb_t));
    Ok(ImagPartReport {
        a_plus_imag,
        b_plus_imag,
        a_minus_imag,
        b_minus_imag,
        a_real,
        b_real,
    })
}

/// Hitchin bivector `σ₊` from `𝒜₊ − ℬ₊`, and the real part of its graph.
#[derive(Debug, Clone)]
pub struct HitchinDifference {
    pub sigma: Bivector,
    /// Principal angle between `(Gr σ₊)_R` and `Gr(Q)`.
    pub real_part_residual: f64,
    /// `|Re σ₊ − Q/4|`.
    pub bivector_residual: f64,
}

pub fn hitchin_difference(b: &BihermitianPoint) -> Result<HitchinDifference> {
    let t = manin_triples(b)?;
    let sigma = holomorphic_difference(&t.a_plus, &t.b_plus, b.i_plus())?;
    let diff = baer_difference(&t.a_plus, &t.b_plus)?;
    let lsig = ManinTriples::matched_pair(&diff, b.i_plus());
    let (re, _) = real_imag_parts(&lsig)?;
    let q = poisson_tensors(b).q;
    let real_part_residual = re.principal_angle(&bivector_graph(&complexify(&q)));
    let bivector_residual = max_abs(&(sigma.real() - &q * 0.25));
    Ok(HitchinDifference {
        sigma,
        real_part_residual,
        bivector_residual,
    })
}

/// Output of the metric reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub omega_plus: RMat,
    pub omega_minus: RMat,
    pub g: RMat,
    /// `|−ω₊I₊ − (−ω₋I₋)|`.
    pub metric_agreement: f64,
    /// `max |ω₊I± + I∓ᵀω₋|`.
    pub compat_mixed: f64,
    /// `|I₊ᵀω₊ − I₋ᵀω₋|`.
    pub compat_transpose: f64,
    /// `max(|I±π_A − π_A I∓ᵀ|, |I±π_B + π_B I∓ᵀ|)`.
    pub mixed_type: f64,
    pub signature: Signature,
}

/// `ω± = −(π_B ± π_A)⁻¹`, `g = −ω±I±`.
pub fn reconstruct_metric(pi_a: &RMat, pi_b: &RMat, ip: &RMat, im: &RMat) -> Result<Reconstruction> {
    let omega_plus = (-(pi_b + pi_a)).try_inverse().ok_or(Error::NonComplementary)?;
    let omega_minus = (-(pi_b - pi_a)).try_inverse().ok_or(Error::NonComplementary)?;
    if omega_plus.iter().chain(omega_minus.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonComplementary);
    }
    let g = -(&omega_plus * ip);
    let g_alt = -(&omega_minus * im);
    let metric_agreement = max_abs(&(&g - &g_alt));
    let compat_mixed = max_abs(&(&omega_plus * ip + im.transpose() * &omega_minus))
        .max(max_abs(&(&omega_plus * im + ip.transpose() * &omega_minus)));
    let compat_transpose = max_abs(&(ip.transpose() * &omega_plus - im.transpose() * &omega_minus));
    let mixed_type = [
        max_abs(&(ip * pi_a - pi_a * im.transpose())),
        max_abs(&(im * pi_a - pi_a * ip.transpose())),
        max_abs(&(ip * pi_b + pi_b * im.transpose())),
        max_abs(&(im * pi_b + pi_b * ip.transpose())),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let gs = (&g + g.transpose()) * 0.5;
    let signature = classify(&gs);
    Ok(Reconstruction {
        omega_plus,
        omega_minus,
        g,
        metric_agreement,
        compat_mixed,
        compat_transpose,
        mixed_type,
        signature,
    })
}

/// Verdict of the gauge-data construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GaugeVerdict {
    Gk,
    PseudoGk,
    Inconsistent,
}

#[derive(Debug, Clone)]
pub struct GaugeDataReport {
    pub omega_plus: RMat,
    pub omega_minus: RMat,
    pub beta_plus: RMat,
    pub beta_minus: RMat,
    pub g: RMat,
    pub b: RMat,
    pub g_residual: f64,
    pub b_residual: f64,
    pub verdict: GaugeVerdict,
}

/// GK data from a pair of real 2-forms `F1, F2` (stored as covector maps).
pub fn gk_from_gauge_data(ip: &RMat, im: &RMat, f1: &RMat, f2: &RMat, tol: f64) -> Result<GaugeDataReport> {
    for i in [ip, im] {
        let r = complex_structure_residual(i);
        if r > 1e-8 {
            return Err(Error::NotComplexStructure(r));
        }
    }
    let fp = (-f1 + f2) * 0.5;
    let fm = (-f1 - f2) * 0.5;
    let split = |f: &RMat, i: &RMat| {
        let conj = i.transpose() * f * i;
        ((f + &conj) * 0.5, (f - &conj) * 0.5)
    };
    let (omega_plus, beta_plus) = split(&fp, ip);
    let (omega_minus, beta_minus) = split(&fm, im);
    let sym_skew = |a: RMat| ((&a + a.transpose()) * 0.5, (&a - a.transpose()) * 0.5);
    let (gp, bp) = sym_skew(-(&fp * ip));
    let (gm, bm) = sym_skew(-(&fm * im));
    let g_residual = max_abs(&(&gp - &gm));
    let b_residual = max_abs(&(&bp + &bm));
    let verdict = if g_residual > tol || b_residual > tol {
        GaugeVerdict::Inconsistent
    } else if gp.clone().symmetric_eigenvalues().min() > 0.0 {
        GaugeVerdict::Gk
    } else {
        GaugeVerdict::PseudoGk
    };
    Ok(GaugeDataReport {
        omega_plus,
        omega_minus,
        beta_plus,
        beta_minus,
        g: gp,
        b: bp,
        g_residual,
        b_residual,
        verdict,
    })
}

/// Random antisymmetric matrix.
pub fn random_two_form(m: usize, rng: &mut Stream) -> RMat {
    let a = normal_mat(rng, m, m);
    &a - a.transpose()
}
