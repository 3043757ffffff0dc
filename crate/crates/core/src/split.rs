//! Complex linear algebra on the split space `V ⊕ V*`.
//!
//! Vectors of the (complexified) generalized tangent space are stored as a
//! single column: the first `m` entries are the tangent part, the last `m`
//! the cotangent part in the dual basis. The pairing is
//! `⟨X+α, Y+β⟩ = α(Y) + β(X)`, i.e. the block matrix `[[0, Id], [Id, 0]]`.
//! It is bilinear, never sesquilinear.

use nalgebra::{DMatrix, DVector, SVD};

use crate::{Error, Result, C64, CMat, RMat, DEFAULT_TOL};

pub type CVec = DVector<C64>;

/// The generalized tangent space `T ⊕ T*` of a real `m`-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpace {
    m: usize,
}

impl SplitSpace {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    /// Real dimension of the tangent block.
    pub fn tangent_dim(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.m
    }

    pub fn pairing_matrix(&self) -> RMat {
        let m = self.m;
        DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            if (i < m && j == i + m) || (i >= m && i == j + m) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn pair(&self, u: &CVec, v: &CVec) -> C64 {
        let m = self.m;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            acc += u[m + i] * v[i] + v[m + i] * u[i];
        }
        acc
    }

    /// Gram matrix `Fᵀ P G` of the pairing between two frames.
    pub fn pairing_gram(&self, f: &CMat, g: &CMat) -> CMat {
        let m = self.m;
        let ft = f.rows(0, m);
        let fc = f.rows(m, m);
        let gt = g.rows(0, m);
        let gc = g.rows(m, m);
        fc.transpose() * gt + ft.transpose() * gc
    }
}

/// A linear subspace stored by an orthonormal column frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: CMat,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            frame: CMat::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            frame: CMat::identity(ambient, ambient),
        }
    }

    /// Span of the columns of `vectors` at the default tolerance.
    pub fn from_columns(vectors: &CMat) -> Self {
        reduce_columns(vectors, DEFAULT_TOL)
    }

    /// Span of the columns of a real matrix.
    pub fn from_real_columns(vectors: &RMat) -> Self {
        Self::from_columns(&vectors.map(|x| C64::new(x, 0.0)))
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    /// Orthonormal frame; columns span the subspace.
    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn conj(&self) -> Self {
        Self {
            frame: self.frame.map(|z| z.conj()),
        }
    }

    /// Image under a linear map.
    pub fn map(&self, a: &CMat) -> Self {
        Self::from_columns(&(a * &self.frame))
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self::from_columns(&hstack(&self.frame, &other.frame))
    }

    /// Orthogonal projector `F Fᴴ`.
    pub fn projector(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    /// Sine of the largest principal angle; `f64::INFINITY` if ranks differ.
    pub fn principal_angle(&self, other: &Self) -> f64 {
        if self.rank() != other.rank() || self.ambient_dim() != other.ambient_dim() {
            return f64::INFINITY;
        }
        if self.rank() == 0 {
            return 0.0;
        }
        let resid = &other.frame - &self.frame * (self.frame.adjoint() * &other.frame);
        resid.singular_values().max()
    }

    /// Distance of `v` from the subspace relative to `|v|`.
    pub fn distance(&self, v: &CVec) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let r = v - &self.frame * (self.frame.adjoint() * v);
        r.norm() / n
    }

    /// Real subspace spanned by real and imaginary parts of the frame.
    pub fn realification(&self) -> Self {
        let re = self.frame.map(|z| C64::new(z.re, 0.0));
        let im = self.frame.map(|z| C64::new(z.im, 0.0));
        Self::from_columns(&hstack(&re, &im))
    }
}

/// Columns of `a` followed by columns of `b`.
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows(), "hstack row mismatch");
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Rows of `a` followed by rows of `b`.
pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols(), "vstack column mismatch");
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

pub fn complexify(a: &RMat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

/// Column-pivoted Gram–Schmidt; columns below `tol·(largest column norm)`
/// after projection are discarded. Ties are broken by lowest index.
fn reduce_columns(vectors: &CMat, tol: f64) -> Subspace {
    let ambient = vectors.nrows();
    let mut work: Vec<CVec> = (0..vectors.ncols()).map(|j| vectors.column(j).into_owned()).collect();
    let scale = work.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Subspace::zero(ambient);
    }
    let thresh = tol * scale;
    let mut basis: Vec<CVec> = Vec::new();
    while !work.is_empty() {
        let (jmax, nmax) = work
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if nmax <= thresh || basis.len() == ambient {
            break;
        }
        let q = work.remove(jmax) / C64::new(nmax, 0.0);
        for v in work.iter_mut() {
            for _ in 0..2 {
                let c = q.dotc(v);
                *v -= &q * c;
            }
        }
        basis.push(q);
    }
    let mut frame = CMat::zeros(ambient, basis.len());
    for (j, q) in basis.iter().enumerate() {
        frame.set_column(j, q);
    }
    Subspace { frame }
}

/// Rank-revealing span of a list of vectors.
pub fn span_reduce(vectors: &[CVec], tol: f64) -> Result<Subspace> {
    let Some(first) = vectors.first() else {
        return Ok(Subspace::zero(0));
    };
    let dim = first.len();
    let mut frame = CMat::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        frame.set_column(j, v);
    }
    Ok(reduce_columns(&frame, tol))
}

/// Span of matrix columns at tolerance `tol`.
pub fn span_columns(vectors: &CMat, tol: f64) -> Subspace {
    reduce_columns(vectors, tol)
}

/// Orthonormal basis of `ker a`; singular values below `tol·max(1, σ_max)`
/// count as zero.
pub fn nullspace(a: &CMat, tol: f64) -> CMat {
    let (r, c) = a.shape();
    if c == 0 {
        return CMat::zeros(0, 0);
    }
    let padded = if r < c {
        let mut p = CMat::zeros(c, c);
        p.rows_mut(0, r).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max().max(1.0);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol * smax)
        .collect();
    let mut out = CMat::zeros(c, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vt.row(i).adjoint());
    }
    out
}

/// Orthonormal basis of the kernel of a real matrix.
pub fn real_nullspace(a: &RMat, tol: f64) -> RMat {
    let (r, c) = a.shape();
    if c == 0 {
        return RMat::zeros(0, 0);
    }
    let padded = if r < c {
        let mut p = RMat::zeros(c, c);
        p.rows_mut(0, r).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max().max(1.0);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol * smax)
        .collect();
    let mut out = RMat::zeros(c, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vt.row(i).transpose());
    }
    out
}

fn check_ambient(u: &Subspace, w: &Subspace) -> Result<()> {
    if u.ambient_dim() != w.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.ambient_dim(),
            got: w.ambient_dim(),
        });
    }
    Ok(())
}

/// `U ∩ W` via the kernel of `[U | −W]`.
pub fn intersect(u: &Subspace, w: &Subspace) -> Result<Subspace> {
    check_ambient(u, w)?;
    intersect_tol(u, w, DEFAULT_TOL)
}

pub fn intersect_tol(u: &Subspace, w: &Subspace, tol: f64) -> Result<Subspace> {
    check_ambient(u, w)?;
    if u.rank() == 0 || w.rank() == 0 {
        return Ok(Subspace::zero(u.ambient_dim()));
    }
    let stacked = hstack(u.frame(), &(-w.frame()));
    let ker = nullspace(&stacked, tol);
    if ker.ncols() == 0 {
        return Ok(Subspace::zero(u.ambient_dim()));
    }
    let coeffs = ker.rows(0, u.rank()).into_owned();
    Ok(Subspace::from_columns(&(u.frame() * coeffs)))
}

/// Equal ranks and largest principal angle below `tol`.
pub fn subspace_eq(u: &Subspace, w: &Subspace, tol: f64) -> bool {
    u.ambient_dim() == w.ambient_dim() && u.rank() == w.rank() && u.principal_angle(w) < tol
}

/// Spectral norm of the pairing Gram matrix of an arbitrary frame.
pub fn frame_isotropy(frame: &CMat, space: &SplitSpace) -> f64 {
    if frame.ncols() == 0 {
        return 0.0;
    }
    space.pairing_gram(frame, frame).singular_values().max()
}

/// Worst pairing residual on the orthonormal frame of `l`.
pub fn isotropy_check(l: &Subspace, space: &SplitSpace) -> f64 {
    frame_isotropy(l.frame(), space)
}

/// Isotropic with half the ambient dimension.
pub fn is_maximal_isotropic(l: &Subspace, space: &SplitSpace, tol: f64) -> bool {
    l.rank() == space.tangent_dim() && isotropy_check(l, space) < tol
}
