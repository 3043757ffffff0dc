//! Finite-difference tensor calculus on coordinate charts.
//!
//! Differential forms are stored by their full antisymmetric coefficient
//! tensor `α_{i₀…i_{k-1}} = α(∂_{i₀}, …, ∂_{i_{k-1}})`. A 2-form given as a
//! covector map `ω` (so `ι_X ω = ωX`) has coefficient matrix `ωᵀ`.
//!
//! `d^c α := −(dα)∘I^{⊗(k+1)}`. On functions this gives
//! `dd^c|z|² = C0 · 2 dx∧dy` with [`C0`] below.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::split::{complexify, CVec, Subspace};
use crate::{Error, Result, C64, CMat, RMat};

/// Calibration constant of `d^c`: `dd^c|z|² = 2·C0 dx∧dy`.
pub const C0: f64 = 2.0;

/// Finite-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Central2,
    Central4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub h: f64,
    pub scheme: Scheme,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            scheme: Scheme::Central4,
        }
    }
}

impl FdConfig {
    pub fn new(h: f64, scheme: Scheme) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
        }
        Ok(Self { h, scheme })
    }

    pub fn central4(h: f64) -> Result<Self> {
        Self::new(h, Scheme::Central4)
    }
}

/// Antisymmetric `k`-form coefficients in `dim` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Form {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

fn decode(mut flat: usize, dim: usize, degree: usize, out: &mut [usize]) {
    for p in (0..degree).rev() {
        out[p] = flat % dim;
        flat /= dim;
    }
}

fn encode(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

impl Form {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: vec![0.0; dim.pow(degree as u32)],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            dim: 0,
            degree: 0,
            coeffs: vec![v],
        }
    }

    /// Function value in a chart of dimension `dim`.
    pub fn function(dim: usize, v: f64) -> Self {
        Self {
            dim,
            degree: 0,
            coeffs: vec![v],
        }
    }

    pub fn one_form(c: &[f64]) -> Self {
        Self {
            dim: c.len(),
            degree: 1,
            coeffs: c.to_vec(),
        }
    }

    /// 2-form with coefficient matrix `w[(i, j)] = α(∂_i, ∂_j)`.
    pub fn two_form(w: &RMat) -> Self {
        let dim = w.nrows();
        let mut f = Self::zeros(dim, 2);
        for i in 0..dim {
            for j in 0..dim {
                f.coeffs[i * dim + j] = w[(i, j)];
            }
        }
        f
    }

    /// 2-form of a covector map `ω`, `α(X, Y) = (ωX)·Y`.
    pub fn from_covector_map(w: &RMat) -> Self {
        Self::two_form(&w.transpose())
    }

    /// Alternating form from any coefficient function (antisymmetrized).
    pub fn from_fn(dim: usize, degree: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut out = Self::zeros(dim, degree);
        let mut idx = vec![0; degree];
        for flat in 0..out.coeffs.len() {
            decode(flat, dim, degree, &mut idx);
            out.coeffs[flat] = f(&idx);
        }
        out
    }

    pub fn matrix(&self) -> RMat {
        assert_eq!(self.degree, 2, "matrix view needs a 2-form");
        RMat::from_fn(self.dim, self.dim, |i, j| self.coeffs[i * self.dim + j])
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.coeffs[encode(idx, self.dim)]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| x * s).collect(),
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "form shape mismatch");
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| op(*a, *b)).collect(),
        }
    }

    /// Largest `|α(…i…j…) + α(…j…i…)|` over adjacent transpositions.
    pub fn alternation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut idx = vec![0; self.degree];
        for flat in 0..self.coeffs.len() {
            decode(flat, self.dim, self.degree, &mut idx);
            for p in 1..self.degree {
                let mut sw = idx.clone();
                sw.swap(p - 1, p);
                worst = worst.max((self.coeffs[flat] + self.get(&sw)).abs());
            }
        }
        worst
    }

    /// `(α∘A^{⊗k})(X₁, …) = α(AX₁, …)`.
    pub fn pullback(&self, a: &RMat) -> Self {
        let dim = self.dim;
        let mut cur = self.coeffs.clone();
        let mut idx = vec![0; self.degree];
        for axis in 0..self.degree {
            let mut next = vec![0.0; cur.len()];
            for (flat, slot) in next.iter_mut().enumerate() {
                decode(flat, dim, self.degree, &mut idx);
                let target = idx[axis];
                let mut acc = 0.0;
                for j in 0..dim {
                    idx[axis] = j;
                    acc += cur[encode(&idx, dim)] * a[(j, target)];
                }
                *slot = acc;
            }
            cur = next;
        }
        Self {
            dim,
            degree: self.degree,
            coeffs: cur,
        }
    }

    /// Interior product `ι_v α`.
    pub fn interior(&self, v: &[f64]) -> Self {
        assert!(self.degree > 0, "cannot contract a function");
        let dim = self.dim;
        let mut out = Self::zeros(dim, self.degree - 1);
        let block = out.coeffs.len();
        for (j, vj) in v.iter().enumerate() {
            for r in 0..block {
                out.coeffs[r] += vj * self.coeffs[j * block + r];
            }
        }
        out
    }

    /// Wedge product of 1-forms into a 2-form.
    pub fn wedge1(a: &[f64], b: &[f64]) -> Self {
        let dim = a.len();
        Self::two_form(&RMat::from_fn(dim, dim, |i, j| a[i] * b[j] - a[j] * b[i]))
    }
}

/// A form-valued function on a chart.
#[derive(Clone)]
pub struct ChartField {
    pub dim: usize,
    pub degree: usize,
    eval: Arc<dyn Fn(&[f64]) -> Form + Send + Sync>,
}

impl std::fmt::Debug for ChartField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChartField(dim={}, degree={})", self.dim, self.degree)
    }
}

impl ChartField {
    pub fn new(dim: usize, degree: usize, f: impl Fn(&[f64]) -> Form + Send + Sync + 'static) -> Self {
        Self {
            dim,
            degree,
            eval: Arc::new(f),
        }
    }

    pub fn scalar(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, 0, move |x| Form::function(dim, f(x)))
    }

    /// Evaluate with finiteness and antisymmetry checks.
    pub fn eval(&self, x: &[f64]) -> Result<Form> {
        let mut v = (self.eval)(x);
        v.dim = self.dim;
        if v.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(x.to_vec()));
        }
        let alt = v.alternation_residual();
        if alt > 1e-12 * v.max_abs().max(1.0) {
            return Err(Error::NotAntisymmetric(alt));
        }
        Ok(v)
    }
}

/// A matrix-valued function on a chart (metrics, complex structures).
pub type MatrixField = Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>;

pub fn constant_matrix(m: RMat) -> MatrixField {
    Arc::new(move |_| m.clone())
}

/// A complex section `X + α` of `T_ℂ ⊕ T*_ℂ`, stored tangent-first.
pub type SectionField = Arc<dyn Fn(&[f64]) -> CVec + Send + Sync>;

fn stencil(cfg: &FdConfig) -> &'static [(f64, f64)] {
    match cfg.scheme {
        Scheme::Central2 => &[(1.0, 0.5), (-1.0, -0.5)],
        Scheme::Central4 => &[
            (1.0, 8.0 / 12.0),
            (-1.0, -8.0 / 12.0),
            (2.0, -1.0 / 12.0),
            (-2.0, 1.0 / 12.0),
        ],
    }
}

fn shifted(x: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += d;
    y
}

/// `∂_i` of a vector-valued function.
pub fn partial<T, F>(f: F, x: &[f64], i: usize, cfg: &FdConfig) -> Result<Vec<T>>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::AddAssign + Default,
    F: Fn(&[f64]) -> Result<Vec<T>>,
{
    let mut acc: Option<Vec<T>> = None;
    for &(off, w) in stencil(cfg) {
        let v = f(&shifted(x, i, off * cfg.h))?;
        let acc = acc.get_or_insert_with(|| vec![T::default(); v.len()]);
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b * (w / cfg.h);
        }
    }
    Ok(acc.unwrap_or_default())
}

fn matrix_partial(f: &MatrixField, x: &[f64], i: usize, cfg: &FdConfig) -> RMat {
    let mut acc: Option<RMat> = None;
    for &(off, w) in stencil(cfg) {
        let v = f(&shifted(x, i, off * cfg.h)) * (w / cfg.h);
        acc = Some(match acc {
            None => v,
            Some(a) => a + v,
        });
    }
    acc.expect("non-empty stencil")
}

/// `dα` at `x` by the alternating coordinate formula.
pub fn fd_d(alpha: &ChartField, x: &[f64], cfg: &FdConfig) -> Result<Form> {
    let dim = alpha.dim;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let k = alpha.degree;
    let partials: Vec<Vec<f64>> = (0..dim)
        .map(|i| partial(|y: &[f64]| alpha.eval(y).map(|f| f.coeffs), x, i, cfg))
        .collect::<Result<_>>()?;
    let mut out = Form::zeros(dim, k + 1);
    let mut idx = vec![0; k + 1];
    let mut rest = vec![0; k];
    for flat in 0..out.coeffs.len() {
        decode(flat, dim, k + 1, &mut idx);
        let mut acc = 0.0;
        for j in 0..=k {
            let mut q = 0;
            for (p, &v) in idx.iter().enumerate() {
                if p != j {
                    rest[q] = v;
                    q += 1;
                }
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * partials[idx[j]][encode(&rest, dim)];
        }
        out.coeffs[flat] = acc;
    }
    Ok(out)
}

/// Lazily evaluated `dα`.
pub fn exterior_derivative(alpha: &ChartField, cfg: &FdConfig) -> ChartField {
    let a = alpha.clone();
    let cfg = *cfg;
    ChartField::new(alpha.dim, alpha.degree + 1, move |x| {
        fd_d(&a, x, &cfg).unwrap_or_else(|_| nan_form(a.dim, a.degree + 1))
    })
}

fn nan_form(dim: usize, degree: usize) -> Form {
    let mut f = Form::zeros(dim, degree);
    f.coeffs.iter_mut().for_each(|c| *c = f64::NAN);
    f
}

fn check_complex_structure(i: &RMat) -> Result<()> {
    let r = crate::point::complex_structure_residual(i);
    if r > 1e-8 {
        return Err(Error::NotComplexStructure(r));
    }
    Ok(())
}

/// `d^c α = −(dα)∘I^{⊗(k+1)}` at `x`.
pub fn dc_op(alpha: &ChartField, i: &MatrixField, x: &[f64], cfg: &FdConfig) -> Result<Form> {
    let ix = i(x);
    check_complex_structure(&ix)?;
    Ok(fd_d(alpha, x, cfg)?.pullback(&ix).scale(-1.0))
}

/// Lazily evaluated `d^c α`.
pub fn dc_field(alpha: &ChartField, i: &MatrixField, cfg: &FdConfig) -> ChartField {
    let a = alpha.clone();
    let i = i.clone();
    let cfg = *cfg;
    ChartField::new(alpha.dim, alpha.degree + 1, move |x| {
        dc_op(&a, &i, x, &cfg).unwrap_or_else(|_| nan_form(a.dim, a.degree + 1))
    })
}

/// 2-form field `ω = gI` (covector map convention).
pub fn hermitian_form(dim: usize, g: &MatrixField, i: &MatrixField) -> ChartField {
    let g = g.clone();
    let i = i.clone();
    ChartField::new(dim, 2, move |x| {
        let w = g(x) * i(x);
        Form::from_covector_map(&((&w - w.transpose()) * 0.5))
    })
}

/// `[X+α, Y+β]_H = [X,Y] + L_Xβ − ι_Y dα + ι_Xι_Y H` at `x`, with
/// `(ι_Xι_Y H)(Z) = H(Y, X, Z)`.
pub fn courant_bracket_h(
    s1: &SectionField,
    s2: &SectionField,
    h: Option<&ChartField>,
    x: &[f64],
    cfg: &FdConfig,
) -> Result<CVec> {
    let dim = x.len();
    let a = s1(x);
    let b = s2(x);
    if a.len() != 2 * dim || b.len() != 2 * dim {
        return Err(Error::DimensionMismatch {
            expected: 2 * dim,
            got: a.len().min(b.len()),
        });
    }
    let grad = |s: &SectionField| -> Result<Vec<Vec<C64>>> {
        (0..dim)
            .map(|j| partial(|y: &[f64]| Ok(s(y).iter().copied().collect()), x, j, cfg))
            .collect()
    };
    let da = grad(s1)?;
    let db = grad(s2)?;
    let mut out = CVec::zeros(2 * dim);
    for i in 0..dim {
        let mut v = C64::new(0.0, 0.0);
        for j in 0..dim {
            v += a[j] * db[j][i] - b[j] * da[j][i];
        }
        out[i] = v;
        let mut w = C64::new(0.0, 0.0);
        for j in 0..dim {
            w += a[j] * db[j][dim + i] + b[dim + j] * da[i][j];
            w -= b[j] * (da[j][dim + i] - da[i][dim + j]);
        }
        out[dim + i] = w;
    }
    if let Some(hf) = h {
        let hx = hf.eval(x)?;
        for i in 0..dim {
            let mut w = C64::new(0.0, 0.0);
            for p in 0..dim {
                for q in 0..dim {
                    w += b[p] * a[q] * hx.get(&[p, q, i]);
                }
            }
            out[dim + i] += w;
        }
    }
    Ok(out)
}

/// Largest relative distance from `span frames(x)` of the brackets of all
/// frame pairs, over the sample points.
pub fn involutivity_residual(
    frames: &[SectionField],
    h: Option<&ChartField>,
    points: &[Vec<f64>],
    cfg: &FdConfig,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let cols: Vec<CVec> = frames.iter().map(|s| s(x)).collect();
        let mat = CMat::from_columns(&cols);
        let span = Subspace::from_columns(&mat);
        let expected = mat.clone().singular_values().iter().filter(|s| **s > 1e-8).count();
        if span.rank() != expected || expected == 0 {
            return Err(Error::RankDrop(x.clone()));
        }
        let scale = cols.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for s1 in frames {
            for s2 in frames {
                let c = courant_bracket_h(s1, s2, h, x, cfg)?;
                let r = &c - span.projector() * &c;
                worst = worst.max(r.norm() / (scale * scale));
            }
        }
    }
    Ok(worst)
}

/// Frame sections `(Id − i𝕁(x)) e_j` spanning the `+i` eigenbundle of a
/// generalized complex structure field.
pub fn eigenbundle_frames(j: &MatrixField, dim: usize) -> Vec<SectionField> {
    (0..2 * dim)
        .map(|col| {
            let j = j.clone();
            Arc::new(move |x: &[f64]| {
                let jx = complexify(&j(x));
                let mut v = CVec::zeros(2 * dim);
                v[col] = C64::new(1.0, 0.0);
                &v - jx * v.clone() * C64::new(0.0, 1.0)
            }) as SectionField
        })
        .collect()
}

/// Real section field from separate tangent and cotangent parts.
pub fn real_section(f: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static) -> SectionField {
    Arc::new(move |x| {
        let (v, a) = f(x);
        DVector::from_iterator(v.len() + a.len(), v.into_iter().chain(a).map(|t| C64::new(t, 0.0)))
    })
}

/// Max Nijenhuis-tensor residual of an almost complex structure field,
/// on coordinate vector fields.
pub fn nijenhuis_residual(i: &MatrixField, x: &[f64], cfg: &FdConfig) -> Result<f64> {
    let ix = i(x);
    check_complex_structure(&ix)?;
    let dim = ix.nrows();
    let di: Vec<RMat> = (0..dim).map(|k| matrix_partial(i, x, k, cfg)).collect();
    // ∂_{IX} (I e_b) with X = e_a
    let along = |v: &DVector<f64>, b: usize| -> DVector<f64> {
        let mut acc = DVector::zeros(dim);
        for (k, dk) in di.iter().enumerate() {
            acc += dk.column(b) * v[k];
        }
        acc
    };
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let ia = ix.column(a).into_owned();
            let ib = ix.column(b).into_owned();
            let bracket_ii = along(&ia, b) - along(&ib, a);
            let n = bracket_ii + &ix * di[b].column(a) - &ix * di[a].column(b);
            worst = worst.max(n.amax());
        }
    }
    Ok(worst)
}

/// Residuals of the GK integrability conditions on a chart.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct GkChartReport {
    /// `max |d^c₊ω₊ + d^c₋ω₋|`.
    pub dc_sum: f64,
    /// `max |dd^c₊ω₊|`, `max |dd^c₋ω₋|`.
    pub pluriclosed_plus: f64,
    pub pluriclosed_minus: f64,
    pub nijenhuis_plus: f64,
    pub nijenhuis_minus: f64,
}

impl GkChartReport {
    pub fn max(&self) -> f64 {
        [
            self.dc_sum,
            self.pluriclosed_plus,
            self.pluriclosed_minus,
            self.nijenhuis_plus,
            self.nijenhuis_minus,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn verify_gk_chart(
    g: &MatrixField,
    ip: &MatrixField,
    im: &MatrixField,
    points: &[Vec<f64>],
    cfg: &FdConfig,
) -> Result<GkChartReport> {
    let dim = points.first().map_or(0, |p| p.len());
    let wp = hermitian_form(dim, g, ip);
    let wm = hermitian_form(dim, g, im);
    let hp = dc_field(&wp, ip, cfg);
    let hm = dc_field(&wm, im, cfg);
    let mut rep = GkChartReport {
        dc_sum: 0.0,
        pluriclosed_plus: 0.0,
        pluriclosed_minus: 0.0,
        nijenhuis_plus: 0.0,
        nijenhuis_minus: 0.0,
    };
    for x in points {
        let a = hp.eval(x)?;
        let b = hm.eval(x)?;
        rep.dc_sum = rep.dc_sum.max(a.add(&b).max_abs());
        rep.pluriclosed_plus = rep.pluriclosed_plus.max(fd_d(&hp, x, cfg)?.max_abs());
        rep.pluriclosed_minus = rep.pluriclosed_minus.max(fd_d(&hm, x, cfg)?.max_abs());
        rep.nijenhuis_plus = rep.nijenhuis_plus.max(nijenhuis_residual(ip, x, cfg)?);
        rep.nijenhuis_minus = rep.nijenhuis_minus.max(nijenhuis_residual(im, x, cfg)?);
    }
    Ok(rep)
}

/// `(1,1)` part `½(B + B∘I⊗I)` of a real 2-form.
pub fn type_11_part(b: &Form, i: &RMat) -> Form {
    b.add(&b.pullback(i)).scale(0.5)
}

/// Result of the splitting-to-pluriclosed construction.
#[derive(Debug, Clone, Serialize)]
pub struct SplittingReport {
    /// `ω = −B^{(1,1)}` at each sample.
    pub omega: Vec<Form>,
    /// `max |dB − Im Hc|`.
    pub closure: f64,
    /// `max |Re Hc − d(−2 Im B^{(2,0)}) − d^c ω|`.
    pub residual: f64,
}

/// Pluriclosed form from a splitting: `Hc` is given by real and imaginary
/// 3-form fields.
pub fn pluriclosed_from_splitting(
    hc_re: &ChartField,
    hc_im: &ChartField,
    b: &ChartField,
    i: &MatrixField,
    points: &[Vec<f64>],
    cfg: &FdConfig,
    tol: f64,
) -> Result<SplittingReport> {
    let bf = b.clone();
    let i1 = i.clone();
    let omega = ChartField::new(b.dim, 2, move |x| {
        let bx = bf.eval(x).unwrap_or_else(|_| nan_form(bf.dim, 2));
        type_11_part(&bx, &i1(x)).scale(-1.0)
    });
    let bf = b.clone();
    let i2 = i.clone();
    // −2 Im B^{(2,0)} = β(I·,·) with β the (2,0)+(0,2) part
    let im20 = ChartField::new(b.dim, 2, move |x| {
        let bx = bf.eval(x).unwrap_or_else(|_| nan_form(bf.dim, 2));
        let ix = i2(x);
        let beta = bx.sub(&type_11_part(&bx, &ix));
        let m = ix.transpose() * beta.matrix();
        Form::two_form(&((&m - m.transpose()) * 0.5))
    });
    let mut closure: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut omegas = Vec::with_capacity(points.len());
    for x in points {
        closure = closure.max(fd_d(b, x, cfg)?.sub(&hc_im.eval(x)?).max_abs());
        let rhs = fd_d(&im20, x, cfg)?.add(&dc_op(&omega, i, x, cfg)?);
        residual = residual.max(hc_re.eval(x)?.sub(&rhs).max_abs());
        omegas.push(omega.eval(x)?);
    }
    if closure > tol {
        return Err(Error::ClosureMismatch(closure));
    }
    Ok(SplittingReport {
        omega: omegas,
        closure,
        residual,
    })
}

/// Which index order of the factorwise `dd^c` terms to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeformOrder {
    /// `ω±ᵗ = ω± + t(d₁d₁^c f ∓ d₂d₂^c f)`, i.e. `F₁ ↦ F₁ + t d₁d₁^c f`,
    /// `F₂ ↦ F₂ − t d₂d₂^c f`.
    Standard,
    /// `ω±ᵗ = ω± + t(d₂d₂^c f ± d₁d₁^c f)`.
    Swapped,
}

/// Flat commuting-type product `M₁ × M₂` with constant complex structures.
#[derive(Debug, Clone)]
pub struct CommutingBase {
    pub dim1: usize,
    pub dim2: usize,
    pub g: RMat,
    pub i1: RMat,
    pub i2: RMat,
}

impl CommutingBase {
    /// `ℂ × ℂ` with the Euclidean metric.
    pub fn flat_c_times_c() -> Self {
        let j = crate::point::standard_j(1);
        Self {
            dim1: 2,
            dim2: 2,
            g: RMat::identity(4, 4),
            i1: j.clone(),
            i2: j,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim1 + self.dim2
    }

    fn block(&self, a: &RMat, b: &RMat) -> RMat {
        let mut out = RMat::zeros(self.dim(), self.dim());
        out.view_mut((0, 0), (self.dim1, self.dim1)).copy_from(a);
        out.view_mut((self.dim1, self.dim1), (self.dim2, self.dim2)).copy_from(b);
        out
    }

    /// `I₊ = I₁ ⊕ I₂`.
    pub fn i_plus(&self) -> RMat {
        self.block(&self.i1, &self.i2)
    }

    /// `I₋ = I₁ ⊕ (−I₂)`.
    pub fn i_minus(&self) -> RMat {
        self.block(&self.i1, &(-&self.i2))
    }

    /// Mask of the coordinates of factor `k ∈ {1, 2}`.
    fn mask(&self, k: usize) -> Vec<bool> {
        (0..self.dim()).map(|c| (c < self.dim1) == (k == 1)).collect()
    }
}

/// Factorwise `d_k d_k^c f` on a product chart.
pub fn partial_ddc(f: &ChartField, base: &CommutingBase, k: usize, x: &[f64], cfg: &FdConfig) -> Result<Form> {
    let mask = base.mask(k);
    let ik = if k == 1 {
        base.block(&base.i1, &RMat::zeros(base.dim2, base.dim2))
    } else {
        base.block(&RMat::zeros(base.dim1, base.dim1), &base.i2)
    };
    let ff = f.clone();
    let m1 = mask.clone();
    let cfg1 = *cfg;
    let dcf = ChartField::new(f.dim, 1, move |y| match fd_d(&ff, y, &cfg1) {
        Ok(df) => {
            let mut v = df.pullback(&ik).scale(-1.0);
            for (c, keep) in v.coeffs.iter_mut().zip(&m1) {
                if !keep {
                    *c = 0.0;
                }
            }
            v
        }
        Err(_) => nan_form(ff.dim, 1),
    });
    let mut out = fd_d(&dcf, x, cfg)?;
    let dim = f.dim;
    for a in 0..dim {
        for b in 0..dim {
            if !(mask[a] && mask[b]) {
                out.coeffs[a * dim + b] = 0.0;
            }
        }
    }
    Ok(out)
}

/// Deformed structure on a commuting-type product.
#[derive(Debug, Clone, Serialize)]
pub struct DeformReport {
    pub gk: GkChartReport,
    /// `max |g₊ᵗ − g₋ᵗ|` where `g±ᵗ = −I±ᵀ ω±ᵗ` in coefficient form.
    pub metric_coincidence: f64,
    /// `max |g±ᵗ − g±ᵗᵀ|`.
    pub symmetry: f64,
    /// Smallest eigenvalue of `gᵗ` over the samples.
    pub positivity_margin: f64,
    /// Largest `t` keeping `gᵗ` positive at all samples.
    pub t_star: f64,
    /// `max |gᵗ − g|`.
    pub displacement: f64,
}

impl DeformReport {
    pub fn is_gk(&self, tol: f64) -> bool {
        self.gk.max() < tol && self.metric_coincidence < tol && self.positivity_margin > 0.0
    }
}

/// Hamiltonian deformation of a commuting-type product, re-run through
/// [`verify_gk_chart`]. Both orders are available; only
/// [`DeformOrder::Standard`] keeps `g₊ = g₋` and `dH = 0`.
pub fn commuting_deform(
    f: &ChartField,
    t: f64,
    base: &CommutingBase,
    points: &[Vec<f64>],
    cfg: &FdConfig,
    order: DeformOrder,
) -> Result<DeformReport> {
    let ip = base.i_plus();
    let im = base.i_minus();
    let mut metric_coincidence: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    let mut positivity_margin = f64::INFINITY;
    let mut worst_drop: f64 = 0.0;
    let mut displacement: f64 = 0.0;
    for x in points {
        let (gp, gm) = deform_metric(f, t, base, x, cfg, order)?;
        let g0 = &base.g;
        metric_coincidence = metric_coincidence.max((&gp - &gm).amax());
        symmetry = symmetry.max((&gp - gp.transpose()).amax());
        let gs = (&gp + gp.transpose()) * 0.5;
        positivity_margin = positivity_margin.min(gs.clone().symmetric_eigenvalues().min());
        displacement = displacement.max((&gs - g0).amax());
        if t != 0.0 {
            let s = (&gs - g0) / t;
            let l = g0.clone().cholesky().ok_or(Error::DegenerateMetric)?.l();
            let li = l.try_inverse().ok_or(Error::DegenerateMetric)?;
            let rel = &li * s * li.transpose();
            worst_drop = worst_drop.max(-((&rel + rel.transpose()) * 0.5).symmetric_eigenvalues().min());
        }
    }
    let t_star = if worst_drop > 0.0 { 1.0 / worst_drop } else { f64::INFINITY };
    let cfg_outer = *cfg;
    let f_outer = f.clone();
    let base_outer = base.clone();
    let gfield: MatrixField = Arc::new(move |x: &[f64]| {
        let (gp, _) = match deform_metric(&f_outer, t, &base_outer, x, &cfg_outer, order) {
            Ok(v) => v,
            Err(_) => return RMat::from_element(base_outer.dim(), base_outer.dim(), f64::NAN),
        };
        (&gp + gp.transpose()) * 0.5
    });
    let gk = verify_gk_chart(&gfield, &constant_matrix(ip.clone()), &constant_matrix(im.clone()), points, cfg)?;
    Ok(DeformReport {
        gk,
        metric_coincidence,
        symmetry,
        positivity_margin,
        t_star,
        displacement,
    })
}

fn deform_metric(
    f: &ChartField,
    t: f64,
    base: &CommutingBase,
    x: &[f64],
    cfg: &FdConfig,
    order: DeformOrder,
) -> Result<(RMat, RMat)> {
    let d1 = partial_ddc(f, base, 1, x, cfg)?;
    let d2 = partial_ddc(f, base, 2, x, cfg)?;
    let (dp, dm) = match order {
        DeformOrder::Standard => (d1.sub(&d2), d1.add(&d2)),
        DeformOrder::Swapped => (d2.add(&d1), d2.sub(&d1)),
    };
    let ip = base.i_plus();
    let im = base.i_minus();
    let wp = Form::from_covector_map(&(&base.g * &ip)).add(&dp.scale(t)).matrix();
    let wm = Form::from_covector_map(&(&base.g * &im)).add(&dm.scale(t)).matrix();
    Ok((-(ip.transpose() * wp), -(im.transpose() * wm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::standard_j;
    use crate::rng::{normal_vec, stream};
    use proptest::prelude::*;

    fn cfg() -> FdConfig {
        FdConfig::default()
    }

    /// `α = Σ_{i<j} a_ij sin(b_ij·x + c_ij) dx^i∧dx^j` on ℝ⁴ and its exact `dα`.
    fn trig_two_form(seed: u64) -> (ChartField, impl Fn(&[f64]) -> Form) {
        let p = Arc::new(normal_vec(&mut stream(seed, 0), 16 * 6));
        let coef = {
            let p = p.clone();
            move |i: usize, j: usize, x: &[f64]| -> (f64, f64, [f64; 4]) {
                let k = 6 * (4 * i + j);
                let b = [p[k + 1], p[k + 2], p[k + 3], p[k + 4]];
                let phase = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>() + p[k + 5];
                (p[k] * phase.sin(), p[k] * phase.cos(), b)
            }
        };
        let c1 = coef.clone();
        let field = ChartField::new(4, 2, move |x| {
            Form::two_form(&RMat::from_fn(4, 4, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => c1(i, j, x).0,
                std::cmp::Ordering::Greater => -c1(j, i, x).0,
                std::cmp::Ordering::Equal => 0.0,
            }))
        });
        let exact = move |x: &[f64]| {
            let d = |l: usize, i: usize, j: usize| -> f64 {
                match i.cmp(&j) {
                    std::cmp::Ordering::Less => {
                        let (_, c, b) = coef(i, j, x);
                        c * b[l]
                    }
                    std::cmp::Ordering::Greater => {
                        let (_, c, b) = coef(j, i, x);
                        -c * b[l]
                    }
                    std::cmp::Ordering::Equal => 0.0,
                }
            };
            Form::from_fn(4, 3, |ix| d(ix[0], ix[1], ix[2]) - d(ix[1], ix[0], ix[2]) + d(ix[2], ix[0], ix[1]))
        };
        (field, exact)
    }

    #[test]
    fn d_of_linear_one_form() {
        let a = ChartField::new(2, 1, |x| Form::one_form(&[0.0, x[0]]));
        let d = fd_d(&a, &[0.3, -1.2], &cfg()).unwrap();
        assert!((d.get(&[0, 1]) - 1.0).abs() < 1e-10 && (d.get(&[1, 0]) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn d_squared_vanishes() {
        let f = ChartField::scalar(2, |x| x[0].sin() * x[1]);
        let df = exterior_derivative(&f, &cfg());
        for x in [[0.1, 0.2], [1.0, -2.0], [-0.7, 0.4]] {
            assert!(fd_d(&df, &x, &cfg()).unwrap().max_abs() < 1e-8);
        }
        let (a, _) = trig_two_form(1);
        let da = exterior_derivative(&a, &cfg());
        assert!(fd_d(&da, &[0.2, 0.1, -0.3, 0.5], &cfg()).unwrap().max_abs() < 1e-7);
    }

    #[test]
    fn trig_two_form_matches_analytic_derivative() {
        for seed in 0..3 {
            let (a, exact) = trig_two_form(seed);
            let x = [0.3, -0.2, 0.7, 0.1];
            let d = fd_d(&a, &x, &cfg()).unwrap();
            assert!(d.sub(&exact(&x)).max_abs() < 1e-7);
            assert!(d.alternation_residual() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let (a, exact) = trig_two_form(7);
        let x = [0.3, -0.2, 0.7, 0.1];
        let err = |h: f64| fd_d(&a, &x, &FdConfig::central4(h).unwrap()).unwrap().sub(&exact(&x)).max_abs();
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 8.0, "ratio {ratio}");
        let err2 = |h: f64| {
            fd_d(&a, &x, &FdConfig::new(h, Scheme::Central2).unwrap())
                .unwrap()
                .sub(&exact(&x))
                .max_abs()
        };
        let r2 = err2(0.1) / err2(0.05);
        assert!((3.5..4.5).contains(&r2), "ratio {r2}");
    }

    #[test]
    fn dc_calibration() {
        let f = ChartField::scalar(2, |x| x[0] * x[0] + x[1] * x[1]);
        let i = constant_matrix(standard_j(1));
        let dcf = dc_field(&f, &i, &cfg());
        for x in [[0.0, 0.0], [1.3, -0.4]] {
            let ddc = fd_d(&dcf, &x, &cfg()).unwrap();
            assert!((ddc.get(&[0, 1]) - 2.0 * C0).abs() < 1e-8);
        }
    }

    #[test]
    fn dc_is_odd_in_i_on_two_forms() {
        let (a, _) = trig_two_form(3);
        let j = standard_j(2);
        let x = [0.1, 0.2, 0.3, 0.4];
        let p = dc_op(&a, &constant_matrix(j.clone()), &x, &cfg()).unwrap();
        let m = dc_op(&a, &constant_matrix(-j), &x, &cfg()).unwrap();
        assert_eq!(p.add(&m).max_abs(), 0.0);
    }

    #[test]
    fn pluriharmonic_functions() {
        let i = constant_matrix(standard_j(1));
        for f in [
            ChartField::scalar(2, |x| x[0] * x[0] - x[1] * x[1]),
            ChartField::scalar(2, |x| x[0].exp() * x[1].cos()),
        ] {
            let dcf = dc_field(&f, &i, &cfg());
            assert!(fd_d(&dcf, &[0.4, -0.3], &cfg()).unwrap().max_abs() < 1e-7);
        }
    }

    #[test]
    fn dc_rejects_non_complex_structure() {
        let f = ChartField::scalar(2, |x| x[0]);
        let r = dc_op(&f, &constant_matrix(RMat::identity(2, 2)), &[0.0, 0.0], &cfg());
        assert!(matches!(r, Err(Error::NotComplexStructure(_))));
    }

    #[test]
    fn non_finite_samples_are_reported() {
        let f = ChartField::scalar(1, |x| (x[0]).ln());
        assert!(matches!(fd_d(&f, &[0.0], &cfg()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn constant_sections_bracket_to_zero() {
        let s1 = real_section(|_| (vec![1.0, 2.0], vec![0.5, -1.0]));
        let s2 = real_section(|_| (vec![-1.0, 0.0], vec![3.0, 1.0]));
        let c = courant_bracket_h(&s1, &s2, None, &[0.2, 0.3], &cfg()).unwrap();
        assert!(c.camax() < 1e-12);
    }

    #[test]
    fn lie_derivative_of_linear_form() {
        let s1 = real_section(|_| (vec![1.0, 0.0], vec![0.0, 0.0]));
        let s2 = real_section(|x| (vec![0.0, 0.0], vec![0.0, x[0]]));
        let c = courant_bracket_h(&s1, &s2, None, &[0.7, -0.1], &cfg()).unwrap();
        let expected = CVec::from_vec(vec![0.0, 0.0, 0.0, 1.0].into_iter().map(|v| C64::new(v, 0.0)).collect());
        assert!((c - expected).camax() < 1e-10);
    }

    fn trig_section(seed: u64) -> SectionField {
        let p = normal_vec(&mut stream(seed, 1), 32);
        real_section(move |x| {
            let v = |k: usize| p[k] * (p[k + 8] * x[0] + p[(k + 16) % 32] * x[1] + p[(k + 24) % 32]).sin();
            (vec![v(0), v(1)], vec![v(2), v(3)])
        })
    }

    fn gauge_section(b: &RMat, s: &SectionField) -> SectionField {
        let b = complexify(b);
        let s = s.clone();
        Arc::new(move |x| {
            let v = s(x);
            let m = v.len() / 2;
            let mut out = v.clone();
            let shift = &b * v.rows(0, m);
            for i in 0..m {
                out[m + i] += shift[i];
            }
            out
        })
    }

    #[test]
    fn closed_gauge_symmetry() {
        // constant B is closed
        let b = RMat::from_row_slice(2, 2, &[0.0, 1.3, -1.3, 0.0]);
        let s1 = trig_section(4);
        let s2 = trig_section(5);
        let x = [0.3, 0.8];
        let lhs = courant_bracket_h(&s1, &s2, None, &x, &cfg()).unwrap();
        let shift = complexify(&b) * lhs.rows(0, 2);
        let mut lhs = lhs.clone();
        for i in 0..2 {
            lhs[2 + i] += shift[i];
        }
        let rhs = courant_bracket_h(&gauge_section(&b, &s1), &gauge_section(&b, &s2), None, &x, &cfg()).unwrap();
        assert!((lhs - rhs).camax() < 1e-6);
    }

    #[test]
    fn graph_of_two_form_is_involutive_for_its_derivative() {
        // B = sin(x₀) cos(x₂) dx₁∧dx₂ + x₀² dx₀∧dx₂ on ℝ³
        let bmat = |x: &[f64]| {
            let mut w = RMat::zeros(3, 3);
            w[(1, 2)] = x[0].sin() * x[2].cos();
            w[(2, 1)] = -w[(1, 2)];
            w[(0, 2)] = x[0] * x[0] + x[1];
            w[(2, 0)] = -w[(0, 2)];
            w
        };
        let bfield = ChartField::new(3, 2, move |x| Form::two_form(&bmat(x)));
        let h = exterior_derivative(&bfield, &cfg());
        let frames: Vec<SectionField> = (0..3)
            .map(|c| {
                real_section(move |x| {
                    let mut v = vec![0.0; 3];
                    v[c] = 1.0;
                    // ι_X B as covector: B(X, ·) = row c of the coefficient matrix
                    let w = bmat(x);
                    (v, (0..3).map(|j| w[(c, j)]).collect())
                })
            })
            .collect();
        let pts = vec![vec![0.1, 0.2, 0.3], vec![-0.5, 0.4, 1.1]];
        let r = involutivity_residual(&frames, Some(&h), &pts, &cfg()).unwrap();
        assert!(r < 1e-6, "{r}");
        let wrong = ChartField::new(3, 3, {
            let h = h.clone();
            move |x| h.eval(x).unwrap().scale(-1.0)
        });
        assert!(involutivity_residual(&frames, Some(&wrong), &pts, &cfg()).unwrap() > 1e-3);
    }

    #[test]
    fn flat_antiholomorphic_tangents_are_involutive() {
        let j = standard_j(2);
        let t01 = crate::point::t01(&j);
        let frames: Vec<SectionField> = (0..2)
            .map(|c| {
                let col = t01.frame().column(c).into_owned();
                Arc::new(move |_: &[f64]| {
                    let mut v = CVec::zeros(8);
                    v.rows_mut(0, 4).copy_from(&col);
                    v
                }) as SectionField
            })
            .collect();
        let r = involutivity_residual(&frames, None, &[vec![0.0; 4]], &cfg()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rank_drop_is_reported() {
        let frames: Vec<SectionField> = vec![real_section(|x| (vec![x[0], 0.0], vec![0.0, 0.0]))];
        let r = involutivity_residual(&frames, None, &[vec![0.0, 0.0]], &cfg());
        assert!(matches!(r, Err(Error::RankDrop(_))));
    }

    #[test]
    fn self_bracket_is_exact() {
        for seed in 0..3 {
            let s = trig_section(10 + seed);
            let x = [0.2, -0.6];
            let c = courant_bracket_h(&s, &s, None, &x, &cfg()).unwrap();
            let s2 = s.clone();
            let half_pair = ChartField::scalar(2, move |y| {
                let v = s2(y);
                (v[0] * v[2] + v[1] * v[3]).re
            });
            let d = fd_d(&half_pair, &x, &cfg()).unwrap();
            assert!(c.rows(0, 2).camax() < 1e-10);
            assert!((c[2].re - d.coeffs[0]).abs() < 1e-8 && (c[3].re - d.coeffs[1]).abs() < 1e-8);
        }
    }

    fn flat_points() -> Vec<Vec<f64>> {
        vec![vec![0.1, -0.2, 0.3, 0.05], vec![-0.4, 0.2, 0.0, 0.6], vec![0.0; 4]]
    }

    #[test]
    fn flat_kahler_chart() {
        let j = standard_j(2);
        let r = verify_gk_chart(
            &constant_matrix(RMat::identity(4, 4)),
            &constant_matrix(j.clone()),
            &constant_matrix(j),
            &flat_points(),
            &cfg(),
        )
        .unwrap();
        assert!(r.max() < 1e-8);
    }

    #[test]
    fn product_of_kahler_curves() {
        let j = standard_j(1);
        let block = |a: &RMat, b: &RMat| {
            let mut m = RMat::zeros(4, 4);
            m.view_mut((0, 0), (2, 2)).copy_from(a);
            m.view_mut((2, 2), (2, 2)).copy_from(b);
            m
        };
        let ip = block(&j, &j);
        let im = block(&j, &(-&j));
        let g: MatrixField = Arc::new(|x: &[f64]| {
            let a = (0.3 * x[0] + 0.2 * x[1] * x[1]).exp();
            let b = (x[2].sin() - 0.1 * x[3]).exp();
            RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![a, a, b, b]))
        });
        let r = verify_gk_chart(&g, &constant_matrix(ip), &constant_matrix(im), &flat_points(), &cfg()).unwrap();
        assert!(r.max() < 1e-7, "{r:?}");
    }

    #[test]
    fn nijenhuis_detects_non_integrable_structure() {
        let j = standard_j(2);
        let i: MatrixField = Arc::new(move |x: &[f64]| {
            let mut e = RMat::identity(4, 4);
            e[(0, 2)] = x[1];
            e[(1, 3)] = 0.5 * x[0] * x[3];
            e[(3, 0)] = x[2];
            let ei = e.clone().try_inverse().unwrap();
            &e * &j * ei
        });
        assert!(nijenhuis_residual(&i, &[0.2, 0.1, -0.3, 0.4], &cfg()).unwrap() > 1e-2);
        let flat = constant_matrix(standard_j(2));
        assert_eq!(nijenhuis_residual(&flat, &[0.2, 0.1, -0.3, 0.4], &cfg()).unwrap(), 0.0);
    }

    fn omega0(eps: f64) -> ChartField {
        ChartField::new(4, 2, move |x| {
            let mut w = RMat::zeros(4, 4);
            w[(0, 1)] = 1.0 + eps * x[2];
            w[(1, 0)] = -w[(0, 1)];
            Form::two_form(&w)
        })
    }

    #[test]
    fn splitting_recovers_pluriclosed_form() {
        let j = constant_matrix(standard_j(2));
        let w0 = omega0(0.3);
        let hc_re = dc_field(&w0, &j, &cfg());
        let hc_im = ChartField::new(4, 3, {
            let d = exterior_derivative(&w0, &cfg());
            move |x| d.eval(x).unwrap().scale(-1.0)
        });
        let b = ChartField::new(4, 2, {
            let w0 = w0.clone();
            move |x| w0.eval(x).unwrap().scale(-1.0)
        });
        let pts = flat_points();
        let r = pluriclosed_from_splitting(&hc_re, &hc_im, &b, &j, &pts, &cfg(), 1e-7).unwrap();
        assert!(r.residual < 1e-7 && r.closure < 1e-7);
        for (x, w) in pts.iter().zip(&r.omega) {
            assert!(w.sub(&w0.eval(x).unwrap()).max_abs() < 1e-12);
        }
        // (2,0) gauge shift by Im(z₂ dz₁∧dz₂): ω unchanged, residual still small
        let shifted = ChartField::new(4, 2, {
            let b = b.clone();
            move |x| b.eval(x).unwrap().add(&im_z2_dz1_dz2(x))
        });
        let r2 = pluriclosed_from_splitting(&hc_re, &hc_im, &shifted, &j, &pts, &cfg(), 1e-7).unwrap();
        assert!(r2.residual < 1e-7);
        for (a, b) in r.omega.iter().zip(&r2.omega) {
            assert!(a.sub(b).max_abs() < 1e-12);
        }
        let bad = ChartField::new(4, 2, move |x| w0.eval(x).unwrap());
        assert!(matches!(
            pluriclosed_from_splitting(&hc_re, &hc_im, &bad, &j, &pts, &cfg(), 1e-7),
            Err(Error::ClosureMismatch(_))
        ));
    }

    /// `Im(z₂ dz₁∧dz₂)` in real coordinates `(x₁, y₁, x₂, y₂)`.
    fn im_z2_dz1_dz2(x: &[f64]) -> Form {
        let z2 = C64::new(x[2], x[3]);
        let dz1 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let dz2 = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let w = RMat::from_fn(4, 4, |i, j| (z2 * (dz1[i] * dz2[j] - dz1[j] * dz2[i])).im);
        Form::two_form(&w)
    }

    #[test]
    fn splitting_with_vanishing_twist() {
        let j = constant_matrix(standard_j(2));
        let zero3 = ChartField::new(4, 3, |_| Form::zeros(4, 3));
        let b = ChartField::new(4, 2, |x| im_z2_dz1_dz2(x).scale(-1.0).add(&im_z2_dz1_dz2(x).scale(2.0)));
        let r = pluriclosed_from_splitting(&zero3, &zero3, &b, &j, &flat_points(), &cfg(), 1e-7).unwrap();
        assert!(r.omega.iter().all(|w| w.max_abs() < 1e-12));
        assert!(r.residual < 1e-8);
    }

    fn gaussian(eps: f64) -> ChartField {
        ChartField::scalar(4, move |x| eps * (-(x.iter().map(|v| v * v).sum::<f64>())).exp())
    }

    #[test]
    fn zero_potential_is_identity() {
        let base = CommutingBase::flat_c_times_c();
        let f = ChartField::scalar(4, |_| 0.0);
        let r = commuting_deform(&f, 0.5, &base, &flat_points(), &cfg(), DeformOrder::Standard).unwrap();
        assert_eq!(r.displacement, 0.0);
        assert_eq!(r.metric_coincidence, 0.0);
        assert!(r.t_star.is_infinite());
    }

    #[test]
    fn factor_one_potential_is_laplacian() {
        let base = CommutingBase::flat_c_times_c();
        let f = ChartField::scalar(4, |x| (x[0] * x[1]).sin() + x[0].powi(3));
        let x = [0.3, 0.7, -0.2, 0.4];
        assert!(partial_ddc(&f, &base, 2, &x, &cfg()).unwrap().max_abs() < 1e-12);
        let d1 = partial_ddc(&f, &base, 1, &x, &cfg()).unwrap();
        let lap = -(x[0] * x[1]).sin() * (x[0] * x[0] + x[1] * x[1]) + 6.0 * x[0];
        assert!((d1.get(&[0, 1]) - lap).abs() < 1e-6);
        assert!(d1.get(&[0, 2]).abs() < 1e-12 && d1.get(&[2, 3]).abs() < 1e-12);
    }

    #[test]
    fn gaussian_deformation_stays_gk() {
        let base = CommutingBase::flat_c_times_c();
        let r = commuting_deform(&gaussian(0.1), 0.05, &base, &flat_points(), &cfg(), DeformOrder::Standard).unwrap();
        assert!(r.gk.max() < 1e-5, "{r:?}");
        assert!(r.metric_coincidence < 1e-10 && r.positivity_margin > 0.0);
        assert!(r.t_star > 0.05 && r.displacement > 1e-4);
        let p = commuting_deform(&gaussian(0.1), 0.05, &base, &flat_points(), &cfg(), DeformOrder::Swapped).unwrap();
        assert!(p.metric_coincidence > 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pullback_by_identity_is_trivial(seed in 0u64..1000) {
            let (a, _) = trig_two_form(seed);
            let v = a.eval(&[0.1, 0.2, 0.3, 0.4]).unwrap();
            prop_assert_eq!(v.pullback(&RMat::identity(4, 4)), v);
        }

        #[test]
        fn dd_vanishes_on_random_two_forms(seed in 0u64..1000) {
            let (a, _) = trig_two_form(seed);
            let da = exterior_derivative(&a, &cfg());
            prop_assert!(fd_d(&da, &[0.1, -0.3, 0.2, 0.6], &cfg()).unwrap().max_abs() < 1e-7);
        }
    }
}
