//! Zero-Jacobi, parallel and weakly parallel curves; generators of one-parameter
//! orbits; matrix curves and their fractional-linear transforms.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DVector;

use crate::curves::{uniform_samples, CurveKind, FrameCurve, Jet, JetProvider, MatPoly};
use crate::error::{Error, Result};
use crate::invariants::{fundamental_jets, horizontal_subspace, jacobi, schwarzian, schwarzian_derivative};
use crate::mats::{binomial, blocks, bottom, commutator, expm, hcat, inverse, norm2, solve, svd, top, vcat, Mat, Subspace, Tolerances};
use crate::normalize::{normal_frame, NormalFrame};

/// A detection outcome together with the residual it was decided on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flag {
    pub value: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub zero_jacobi: Flag,
    pub parallel: Flag,
    pub weakly_parallel: Flag,
    /// Relative spread of `tr S^k` of the normal-frame Schwarzian over the samples.
    pub isospectral_drift: f64,
    /// Minimum-norm constant `Y` with `S' = [S, Y]`.
    pub lax_y: Option<Mat>,
    /// Generator `X` with `l(t) = exp((t - t0) X) l(t0)`, when verified.
    pub generator: Option<Mat>,
    /// Largest principal angle between the curve and the orbit of the generator.
    pub generator_residual: Option<f64>,
}

fn normal_schwarzians(nf: &NormalFrame, ts: &[f64], tol: &Tolerances) -> Result<(Vec<Mat>, Vec<Mat>)> {
    let curve = nf.curve();
    let s = ts.iter().map(|&t| Ok(schwarzian(&curve, t, tol)?.s)).collect::<Result<Vec<_>>>()?;
    let ds = ts.iter().map(|&t| schwarzian_derivative(&curve, t, tol)).collect::<Result<Vec<_>>>()?;
    Ok((s, ds))
}

/// Minimum-norm least-squares `Y` in `S_i' = S_i Y - Y S_i`; returns `(Y, max residual)`.
/// Singular values below `1e-9 max(smax, floor)` count as zero.
fn lax_fit(s: &[Mat], ds: &[Mat], floor: f64) -> Result<(Mat, f64)> {
    let n = s[0].nrows();
    let id = Mat::identity(n, n);
    let mut m = Mat::zeros(s.len() * n * n, n * n);
    let mut rhs = DVector::zeros(s.len() * n * n);
    for (i, (si, di)) in s.iter().zip(ds).enumerate() {
        let block = id.kronecker(si) - si.transpose().kronecker(&id);
        m.view_mut((i * n * n, 0), (n * n, n * n)).copy_from(&block);
        rhs.rows_mut(i * n * n, n * n).copy_from_slice(di.as_slice());
    }
    let d = svd(&m)?;
    let cutoff = 1e-9 * d.singular_values[0].max(floor);
    let y = d.solve(&rhs, cutoff);
    let y = Mat::from_column_slice(n, n, y.as_slice());
    let residual = s.iter().zip(ds).map(|(si, di)| norm2(&(di - commutator(si, &y)))).fold(0.0, f64::max);
    Ok((y, residual))
}

/// Generator of the orbit through `l(anchor)` built from a normal frame and a Lax matrix `Y`.
///
/// `C(t) = B(t) exp(-(t - anchor) Y)` satisfies `C'' + C' (2Y) + C (S0/2 + Y^2) = 0`.
fn generator_from(nf: &NormalFrame, y: &Mat, anchor: f64, tol: &Tolerances) -> Result<Mat> {
    let curve = nf.curve();
    let jet = curve.eval_jet(anchor, 3)?;
    let s0 = schwarzian(&curve, anchor, tol)?.s;
    let n = y.nrows();
    let p = y * 2.0;
    let q = &s0 * 0.5 + y * y;
    let g = hcat(jet.d(0), &(jet.d(1) - jet.d(0) * y));
    let m = blocks(&Mat::zeros(n, n), &(-q), &Mat::identity(n, n), &(-p));
    Ok(&g * m * inverse(&g, tol)?)
}

/// Largest principal angle between `l(t)` and `exp((t - anchor) X) l(anchor)` over `ts`.
fn orbit_residual(curve: &FrameCurve, x: &Mat, anchor: f64, ts: &[f64], tol: &Tolerances) -> Result<f64> {
    let base = curve.eval(anchor)?;
    let mut worst = 0.0f64;
    for &t in ts {
        let moved = Subspace::span(&(expm(&(x * (t - anchor)))? * &base), tol)?;
        let actual = Subspace::span(&curve.eval(t)?, tol)?;
        worst = worst.max(moved.max_angle(&actual));
    }
    Ok(worst)
}

/// Generator `X` with `l(t) = exp((t - anchor) X) l(anchor)` on `window`, verified by principal angles.
pub fn reconstruct_generator(curve: &FrameCurve, anchor: f64, window: (f64, f64), tol: &Tolerances) -> Result<Mat> {
    let nf = normal_frame(curve, anchor, window, tol)?;
    let ts = uniform_samples(window, 25);
    let (s, ds) = normal_schwarzians(&nf, &ts, tol)?;
    let (y, _) = lax_fit(&s, &ds, (window.1 - window.0).powi(-2))?;
    let x = generator_from(&nf, &y, anchor, tol)?;
    let residual = orbit_residual(curve, &x, anchor, &ts, tol)?;
    if residual > 10.0 * tol.residual_rtol {
        return Err(Error::NotWeaklyParallel { residual });
    }
    Ok(x)
}

/// Size of the part of `X^2 l` leaving `l`, relative to `||X||^2`.
pub fn square_invariance_residual(x: &Mat, frame: &Mat, tol: &Tolerances) -> Result<f64> {
    let l = Subspace::span(frame, tol)?;
    let moved = x * x * l.basis();
    let outside = &moved - l.projector() * &moved;
    Ok(norm2(&outside) / norm2(x).powi(2).max(f64::MIN_POSITIVE))
}

fn power_sums(s: &Mat) -> Vec<f64> {
    let mut p = s.clone();
    let mut out = vec![p.trace()];
    for _ in 1..s.nrows() {
        p = &p * s;
        out.push(p.trace());
    }
    out
}

pub fn classify(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<ClassificationReport> {
    let ts = uniform_samples(window, samples.max(3));
    let len = window.1 - window.0;
    let anchor = 0.5 * (window.0 + window.1);
    let bound = 10.0 * tol.residual_rtol;

    let mut k_max = 0.0f64;
    let mut fdd_max = 0.0f64;
    for &t in &ts {
        k_max = k_max.max(norm2(&jacobi(curve, t, tol)?.mat));
        fdd_max = fdd_max.max(norm2(&fundamental_jets(curve, t, tol)?.2.mat));
    }
    let k_scale = (0.25 * fdd_max * fdd_max).max(len.powi(-2));

    let nf = normal_frame(curve, anchor, window, tol)?;
    let (s, ds) = normal_schwarzians(&nf, &ts, tol)?;
    let s_max = s.iter().map(norm2).fold(0.0, f64::max);
    let ds_max = ds.iter().map(norm2).fold(0.0, f64::max);
    let (y, lax_residual) = lax_fit(&s, &ds, len.powi(-2))?;

    let sums: Vec<Vec<f64>> = s.iter().map(power_sums).collect();
    let isospectral_drift = (0..sums[0].len())
        .map(|k| {
            let (lo, hi) = sums.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
            let scale = sums.iter().fold(s_max.max(len.powi(-2)).powi(k as i32 + 1), |m, p| m.max(p[k].abs()));
            (hi - lo) / scale
        })
        .fold(0.0, f64::max);

    let lax_ok = lax_residual <= bound * (s_max * norm2(&y)).max(1.0);
    let (generator, generator_residual) = if lax_ok {
        let x = generator_from(&nf, &y, anchor, tol)?;
        let r = orbit_residual(curve, &x, anchor, &ts, tol)?;
        (Some(x), Some(r))
    } else {
        (None, None)
    };
    let orbit_ok = generator_residual.is_some_and(|r| r <= bound);
    let weakly_parallel = Flag { value: lax_ok && orbit_ok, residual: lax_residual };

    let parallel_scale = s_max.max(len.powi(-2)) / len;
    let parallel_fit = ds_max <= bound * parallel_scale;
    let square_ok = match (&generator, parallel_fit && weakly_parallel.value) {
        (Some(x), true) => square_invariance_residual(x, &curve.eval(anchor)?, tol)? <= bound,
        _ => false,
    };
    let parallel = Flag { value: parallel_fit && weakly_parallel.value && square_ok, residual: ds_max };

    let zero_fit = k_max <= bound * k_scale;
    let horizontal_ok = zero_fit && {
        let h0 = horizontal_subspace(curve, anchor, tol)?;
        let mut worst = 0.0f64;
        for &t in &ts {
            worst = worst.max(horizontal_subspace(curve, t, tol)?.max_angle(&h0));
        }
        worst <= bound
    };
    let zero_jacobi = Flag { value: zero_fit && horizontal_ok && parallel.value, residual: k_max };

    let generator = if orbit_ok { generator } else { None };
    Ok(ClassificationReport { zero_jacobi, parallel, weakly_parallel, isospectral_drift, lax_y: Some(y), generator, generator_residual })
}

/// Smooth curve of n x n matrices given by its derivatives.
pub trait MatrixCurve: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn max_order(&self) -> usize;
    /// `M, M', ..., M^(order)` at t.
    fn derivs(&self, t: f64, order: usize) -> Result<Vec<Mat>>;
}

impl MatrixCurve for MatPoly {
    fn dim(&self) -> usize {
        self.shape().0
    }
    fn max_order(&self) -> usize {
        usize::MAX
    }
    fn derivs(&self, t: f64, order: usize) -> Result<Vec<Mat>> {
        if self.shape().0 != self.shape().1 {
            return Err(Error::DimensionMismatch("matrix curve must be square".into()));
        }
        Ok(MatPoly::derivs(self, t, order))
    }
}

/// `(C + D M(t)) (A + B M(t))^-1`.
#[derive(Debug, Clone)]
pub struct FractionalLinear {
    base: Arc<dyn MatrixCurve>,
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
    tol: Tolerances,
}

impl FractionalLinear {
    pub fn new(base: Arc<dyn MatrixCurve>, a: Mat, b: Mat, c: Mat, d: Mat, tol: &Tolerances) -> Result<FractionalLinear> {
        let n = base.dim();
        if [&a, &b, &c, &d].iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::DimensionMismatch("fractional coefficients must be n x n".into()));
        }
        Ok(FractionalLinear { base, a, b, c, d, tol: *tol })
    }

    /// `(C + t D)(A + t B)^-1`.
    pub fn of_parameter(a: Mat, b: Mat, c: Mat, d: Mat, tol: &Tolerances) -> Result<FractionalLinear> {
        let n = a.nrows();
        let id = MatPoly::new(vec![Mat::zeros(n, n), Mat::identity(n, n)])?;
        FractionalLinear::new(Arc::new(id), a, b, c, d, tol)
    }

    /// Denominator `A + B M(t)`.
    pub fn denominator(&self, t: f64) -> Result<Mat> {
        Ok(&self.a + &self.b * &self.base.derivs(t, 0)?[0])
    }
}

impl MatrixCurve for FractionalLinear {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn max_order(&self) -> usize {
        self.base.max_order()
    }
    fn derivs(&self, t: f64, order: usize) -> Result<Vec<Mat>> {
        let m = self.base.derivs(t, order)?;
        let u: Vec<Mat> = m.iter().enumerate().map(|(k, mk)| if k == 0 { &self.a + &self.b * mk } else { &self.b * mk }).collect();
        let w: Vec<Mat> = m.iter().enumerate().map(|(k, mk)| if k == 0 { &self.c + &self.d * mk } else { &self.d * mk }).collect();
        let uinv = inverse(&u[0], &self.tol)?;
        // N U = W differentiated k times
        let mut out: Vec<Mat> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = w[k].clone();
            for j in 0..k {
                acc -= &out[j] * &u[k - j] * binomial(k, j);
            }
            out.push(acc * &uinv);
        }
        Ok(out)
    }
}

/// The frame `[I; M(t)]`.
#[derive(Debug, Clone)]
pub struct GraphFrame(pub Arc<dyn MatrixCurve>);

impl JetProvider for GraphFrame {
    fn half_dim(&self) -> usize {
        self.0.dim()
    }
    fn max_jet_order(&self) -> usize {
        self.0.max_order().min(crate::curves::EXACT_JET_ORDER)
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Custom
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let n = self.0.dim();
        let m = self.0.derivs(t, order)?;
        let values = m.iter().enumerate().map(|(k, mk)| vcat(&if k == 0 { Mat::identity(n, n) } else { Mat::zeros(n, n) }, mk)).collect();
        Ok(Jet { t, values })
    }
}

pub fn graph_frame(m: Arc<dyn MatrixCurve>) -> FrameCurve {
    FrameCurve::from_provider(GraphFrame(m))
}

/// `d/dt(M'^-1 M'') - (M'^-1 M'')^2 / 2`.
pub fn matrix_schwarzian(m: &dyn MatrixCurve, t: f64, tol: &Tolerances) -> Result<Mat> {
    let d = m.derivs(t, 3)?;
    let l = solve(&d[1], &d[2], tol)?;
    let l3 = solve(&d[1], &d[3], tol)?;
    Ok(l3 - &l * &l * 1.5)
}

/// Coefficients `(A, B, C, D)` with `M(t) = (C + t D)(A + t B)^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalCoefficients {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    /// Largest relative reconstruction error over the samples.
    pub residual: f64,
}

/// Recovers `M(t) = (C + t D)(A + t B)^-1` when the matrix Schwarzian of `M` vanishes on `window`.
pub fn matrix_fractional_detect(m: Arc<dyn MatrixCurve>, window: (f64, f64), tol: &Tolerances) -> Result<Option<FractionalCoefficients>> {
    let ts = uniform_samples(window, 25);
    let len = window.1 - window.0;
    let bound = 10.0 * tol.residual_rtol;
    let mut s_max = 0.0f64;
    let mut scale = len.powi(-2);
    for &t in &ts {
        let d = m.derivs(t, 2)?;
        if crate::mats::relative_min_singular(&d[1]) <= tol.rank_rtol {
            return Err(Error::SingularMatrix { cond: f64::INFINITY });
        }
        scale = scale.max(norm2(&solve(&d[1], &d[2], tol)?).powi(2));
        s_max = s_max.max(norm2(&matrix_schwarzian(m.as_ref(), t, tol)?));
    }
    if s_max > bound * scale {
        return Ok(None);
    }
    let anchor = 0.5 * (window.0 + window.1);
    let curve = graph_frame(Arc::clone(&m));
    let nf = normal_frame(&curve, anchor, window, tol)?.curve();
    let jet = nf.eval_jet(anchor, 1)?;
    let n = m.dim();
    // the normal frame is the line B(anchor) + (t - anchor) B'(anchor)
    let b0 = jet.d(0) - jet.d(1) * anchor;
    let b1 = jet.d(1).clone();
    let (a, b, c, d) = (top(&b0, n), top(&b1, n), bottom(&b0, n), bottom(&b1, n));
    let mut residual = 0.0f64;
    for &t in &ts {
        let value = solve(&(&a + &b * t).transpose(), &(&c + &d * t).transpose(), tol)?.transpose();
        let actual = &m.derivs(t, 0)?[0];
        residual = residual.max(norm2(&(value - actual)) / norm2(actual).max(1.0));
    }
    if residual > bound {
        return Ok(None);
    }
    Ok(Some(FractionalCoefficients { a, b, c, d, residual }))
}
