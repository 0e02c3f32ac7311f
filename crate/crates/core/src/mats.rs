//! Dense linear algebra with condition monitoring, plus the tolerance policy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Tolerance policy threaded explicitly through every computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_rtol: f64,
    pub residual_rtol: f64,
    pub cond_warn: f64,
    pub eig_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::analytic()
    }
}

impl Tolerances {
    pub fn analytic() -> Self {
        Tolerances { rank_rtol: 1e-10, residual_rtol: 1e-8, cond_warn: 1e8, eig_zero: 1e-8 }
    }

    pub fn finite_difference() -> Self {
        Tolerances { residual_rtol: 1e-4, ..Self::analytic() }
    }

    pub fn with_residual_rtol(self, residual_rtol: f64) -> Self {
        Tolerances { residual_rtol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_rtol, self.residual_rtol, self.cond_warn, self.eig_zero];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidTolerances("all tolerances must be finite and positive".into()));
        }
        if self.residual_rtol < self.rank_rtol {
            return Err(Error::InvalidTolerances("residual_rtol must be at least rank_rtol".into()));
        }
        Ok(())
    }
}

pub fn check_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin singular value decomposition `m = U diag(s) V^T`, singular values in decreasing order.
///
/// Backed by faer: nalgebra's bidiagonal SVD returns wrong singular values for some
/// rank-deficient stacked matrices without signalling non-convergence.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub v: Mat,
}

pub fn svd(m: &Mat) -> Result<Svd> {
    check_finite(m, "svd input")?;
    let f = to_faer(m).thin_svd().map_err(|_| Error::SingularMatrix { cond: f64::NAN })?;
    let s = f.S().column_vector();
    Ok(Svd { u: from_faer(f.U()), singular_values: (0..s.nrows()).map(|i| s[i]).collect(), v: from_faer(f.V()) })
}

impl Svd {
    /// Right singular vectors whose singular value is at most `threshold`, padding the
    /// spectrum of a wide matrix with zeros.
    pub fn small_right_space(m: &Mat, threshold: f64) -> Result<(Mat, f64)> {
        let cols = m.ncols();
        let padded = if m.nrows() < cols {
            let mut p = Mat::zeros(cols, cols);
            p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
            p
        } else {
            m.clone()
        };
        let d = svd(&padded)?;
        let keep: Vec<usize> = (0..cols).filter(|&i| d.singular_values[i] <= threshold).collect();
        let smallest = d.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((Mat::from_fn(cols, keep.len(), |r, c| d.v[(r, keep[c])]), smallest))
    }

    /// Minimum-norm least-squares solution, treating singular values at or below `cutoff` as zero.
    pub fn solve(&self, rhs: &DVector<f64>, cutoff: f64) -> DVector<f64> {
        let coeffs = self.u.transpose() * rhs;
        let scaled = DVector::from_fn(coeffs.len(), |i, _| {
            let s = self.singular_values[i];
            if s > cutoff { coeffs[i] / s } else { 0.0 }
        });
        &self.v * scaled
    }
}

fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    match to_faer(m).singular_values() {
        Ok(v) => v,
        Err(_) => vec![f64::NAN; m.nrows().min(m.ncols())],
    }
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &Mat) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Smallest singular value.
pub fn min_singular(m: &Mat) -> f64 {
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Ratio of extreme singular values; infinite for rank-deficient input.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Smallest singular value relative to the largest.
pub fn relative_min_singular(m: &Mat) -> f64 {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Mat,
    pub cond: f64,
}

/// Solves `M Y = B`, reporting a condition estimate.
pub fn solve_checked(m: &Mat, b: &Mat, tol: &Tolerances) -> Result<Solution> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("solve needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!("solve: {} rows vs {} rows", m.nrows(), b.nrows())));
    }
    check_finite(m, "solve matrix")?;
    check_finite(b, "solve right-hand side")?;
    let rel = relative_min_singular(m);
    let cond = if rel == 0.0 { f64::INFINITY } else { 1.0 / rel };
    if rel <= tol.rank_rtol {
        return Err(Error::SingularMatrix { cond });
    }
    if cond > tol.cond_warn {
        log::warn!("ill-conditioned solve: condition estimate {cond:.3e}");
    }
    let lu = m.clone().lu();
    let mut x = lu.solve(b).ok_or(Error::SingularMatrix { cond })?;
    // One step of iterative refinement.
    let r = b - m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(Solution { x, cond })
}

pub fn solve(m: &Mat, b: &Mat, tol: &Tolerances) -> Result<Mat> {
    solve_checked(m, b, tol).map(|s| s.x)
}

pub fn inverse(m: &Mat, tol: &Tolerances) -> Result<Mat> {
    solve(m, &Mat::identity(m.nrows(), m.nrows()), tol)
}

/// Ascending eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

pub fn sym_eigen(s: &Mat, tol: &Tolerances) -> Result<SymEigen> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch("sym_eigen needs a square matrix".into()));
    }
    check_finite(s, "sym_eigen input")?;
    let scale = norm2(s);
    let asym = norm2(&(s - s.transpose()));
    if asym > tol.residual_rtol * scale {
        return Err(Error::NotSymmetric { asymmetry: if scale > 0.0 { asym / scale } else { asym } });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(s.nrows(), s.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Number of negative eigenvalues; refuses when an eigenvalue sits in the zero band.
pub fn inertia_index(values: &[f64], tol: &Tolerances) -> Result<usize> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for &v in values {
        if v.abs() <= tol.eig_zero * scale || scale == 0.0 {
            return Err(Error::AmbiguousSignature { eigenvalue: v });
        }
    }
    Ok(values.iter().filter(|v| **v < 0.0).count())
}

/// Matrix exponential.
pub fn expm(x: &Mat) -> Result<Mat> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch("expm needs a square matrix".into()));
    }
    check_finite(x, "expm input")?;
    let e = x.clone().exp();
    check_finite(&e, "expm output")?;
    Ok(e)
}

/// Orthonormal basis of the numerical nullspace at the given relative threshold.
pub fn nullspace_rtol(m: &Mat, rtol: f64) -> Mat {
    let cols = m.ncols();
    if cols == 0 {
        return Mat::zeros(0, 0);
    }
    if m.iter().all(|v| *v == 0.0) {
        return Mat::identity(cols, cols);
    }
    let smax = singular_values(m).into_iter().fold(0.0, f64::max);
    Svd::small_right_space(m, rtol * smax).map(|(basis, _)| basis).unwrap_or_else(|_| Mat::zeros(cols, 0))
}

pub fn nullspace(m: &Mat, tol: &Tolerances) -> Mat {
    nullspace_rtol(m, tol.rank_rtol)
}

/// Horizontal concatenation `[a | b]`.
pub fn hcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

/// Vertical concatenation.
pub fn vcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

/// 2x2 block matrix.
pub fn blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    vcat(&hcat(a, b), &hcat(c, d))
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn anticommutator(a: &Mat, b: &Mat) -> Mat {
    a * b + b * a
}

/// Standard symplectic matrix `[[0, -I], [I, 0]]` of size 2n.
pub fn symplectic_j(n: usize) -> Mat {
    let z = Mat::zeros(n, n);
    let i = Mat::identity(n, n);
    blocks(&z, &(-&i), &i, &z)
}

/// `diag(-1,...,-1, 1,...,1)` with `k` leading negative entries.
pub fn signature_matrix(n: usize, k: usize) -> Mat {
    Mat::from_fn(n, n, |r, c| if r != c { 0.0 } else if r < k { -1.0 } else { 1.0 })
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn top(m: &Mat, n: usize) -> Mat {
    m.rows(0, n).into_owned()
}

pub fn bottom(m: &Mat, n: usize) -> Mat {
    m.rows(n, m.nrows() - n).into_owned()
}

/// Column-major flattening.
pub fn vec_of(m: &Mat) -> Vec<f64> {
    m.iter().copied().collect()
}

/// Row-major flattening.
pub fn row_major(m: &Mat) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            v.push(m[(r, c)]);
        }
    }
    v
}

/// An n-dimensional subspace stored by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// Column span of `frame`; the frame must have full column rank.
    pub fn span(frame: &Mat, tol: &Tolerances) -> Result<Subspace> {
        check_finite(frame, "subspace frame")?;
        let k = frame.ncols();
        if k == 0 || frame.nrows() < k {
            return Err(Error::DimensionMismatch("subspace frame must be tall with at least one column".into()));
        }
        let d = svd(frame)?;
        let sv = &d.singular_values;
        if sv[0] == 0.0 || sv[k - 1] <= tol.rank_rtol * sv[0] {
            return Err(Error::SingularMatrix { cond: f64::INFINITY });
        }
        Ok(Subspace { basis: d.u.columns(0, k).into_owned() })
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    /// Sines of the principal angles from `self` to `other`.
    pub fn principal_sines(&self, other: &Subspace) -> Vec<f64> {
        let rest = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        singular_values(&rest)
    }

    /// Largest principal angle, in radians.
    pub fn max_angle(&self, other: &Subspace) -> f64 {
        let s = self.principal_sines(other).into_iter().fold(0.0, f64::max);
        s.min(1.0).asin()
    }

    /// Smallest singular value of `[self | other]`, measuring transversality.
    pub fn transversality(&self, other: &Subspace) -> f64 {
        singular_values(&hcat(&self.basis, &other.basis)).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn transform(&self, t: &Mat, tol: &Tolerances) -> Result<Subspace> {
        Subspace::span(&(t * &self.basis), tol)
    }
}
