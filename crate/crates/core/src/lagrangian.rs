//! Symplectic layer: Lagrangian frames, Wronskians, signature and Lagrangian normal frames.

use crate::curves::{uniform_samples, FrameCurve, LagrangeSystem, MatPoly};
use crate::error::{Error, Result};
use crate::invariants::{horizontal_derivative, schwarzian};
use crate::mats::{hcat, inertia_index, min_singular, norm2, signature_matrix, solve, sym_eigen, symplectic_j, Mat, Tolerances};
use crate::normalize::{normal_frame, NormalFrame};

/// The standard form `w(v, u) = v^T J u` with `J = [[0, -I], [I, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub j: Mat,
}

impl SymplecticForm {
    pub fn new(n: usize) -> SymplecticForm {
        SymplecticForm { j: symplectic_j(n) }
    }

    pub fn pair(&self, a: &Mat, b: &Mat) -> Mat {
        a.transpose() * &self.j * b
    }

    /// `||M^T J M - J||` relative to `||M||^2`.
    pub fn symplectic_residual(&self, m: &Mat) -> f64 {
        norm2(&(self.pair(m, m) - &self.j)) / norm2(m).powi(2).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WronskianSample {
    pub w: Mat,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureResult {
    pub index: usize,
    /// `(t, eigenvalues of W(t))` at each probe.
    pub certificate: Vec<(f64, Vec<f64>)>,
}

fn isotropy_residual(a: &Mat) -> f64 {
    let n = a.ncols();
    norm2(&(a.transpose() * symplectic_j(n) * a)) / norm2(a).powi(2).max(f64::MIN_POSITIVE)
}

fn lagrangian_check(a: &Mat, t: f64, tol: &Tolerances) -> Result<()> {
    let n = a.ncols();
    if a.nrows() != 2 * n {
        return Err(Error::DimensionMismatch("frame must be 2n x n".into()));
    }
    let residual = isotropy_residual(a);
    if residual > tol.residual_rtol || min_singular(a) <= tol.rank_rtol * norm2(a) {
        return Err(Error::NotLagrangian { t, residual });
    }
    Ok(())
}

/// Whether `A(t)` has rank n and spans an isotropic subspace.
pub fn is_lagrangian_frame(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<bool> {
    Ok(lagrangian_check(&curve.eval(t)?, t, tol).is_ok())
}

/// `W(t) = -A^T J A'`.
pub fn wronskian(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<WronskianSample> {
    let jet = curve.eval_jet(t, 1)?;
    lagrangian_check(jet.d(0), t, tol)?;
    let j = symplectic_j(curve.n());
    let w = -(jet.d(0).transpose() * j * jet.d(1));
    Ok(WronskianSample { w, t })
}

fn probes(window: (f64, f64)) -> [f64; 3] {
    [window.0, 0.5 * (window.0 + window.1), window.1]
}

/// Number of negative eigenvalues of the Wronskian, agreed on at three probe times.
pub fn signature(curve: &FrameCurve, window: (f64, f64), tol: &Tolerances) -> Result<SignatureResult> {
    let mut index = None;
    let mut certificate = Vec::new();
    for t in probes(window) {
        let w = wronskian(curve, t, tol)?.w;
        let eig = sym_eigen(&w, tol)?;
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || eig.values.iter().any(|v| v.abs() <= tol.rank_rtol * scale) {
            return Err(Error::NotFanning { t });
        }
        let k = inertia_index(&eig.values, tol)?;
        if let Some(prev) = index {
            if prev != k {
                let closest = eig.values.iter().fold(f64::INFINITY, |m, v| if v.abs() < m.abs() { *v } else { m });
                return Err(Error::AmbiguousSignature { eigenvalue: closest });
            }
        }
        index = Some(k);
        certificate.push((t, eig.values));
    }
    Ok(SignatureResult { index: index.unwrap_or(0), certificate })
}

/// Frame of the Lagrange system `d/dt(A' K) + A V = 0` with the given initial frame.
pub fn lagrange_system_frame(k: MatPoly, v: MatPoly, frame0: Mat, dframe0: Mat, t0: f64, window: (f64, f64), tol: &Tolerances) -> Result<FrameCurve> {
    Ok(FrameCurve::from_provider(LagrangeSystem::new(k, v, frame0, dframe0, t0, window, tol)?))
}

/// `2 V K^-1 - (K' K^-1)^2 / 2 - d/dt(K' K^-1)` for a Lagrange system.
pub fn lagrange_system_schwarzian(k: &MatPoly, v: &MatPoly, t: f64, tol: &Tolerances) -> Result<Mat> {
    let ks = k.derivs(t, 2);
    let n = ks[0].nrows();
    let kinv = solve(&ks[0], &Mat::identity(n, n), tol).map_err(|_| Error::SingularK { t })?;
    let l = &ks[1] * &kinv;
    let dl = &ks[2] * &kinv - &l * &l;
    Ok(v.eval(t) * &kinv * 2.0 - &l * &l * 0.5 - dl)
}

/// A normal frame whose constant Wronskian is `I_{n,k}`.
#[derive(Debug, Clone)]
pub struct LagrangianNormalFrame {
    pub frame: NormalFrame,
    pub index: usize,
}

impl LagrangianNormalFrame {
    pub fn curve(&self) -> FrameCurve {
        self.frame.curve()
    }

    /// `||[B | B' I_{n,k}]^T J [B | B' I_{n,k}] - J||` at t.
    pub fn symplectic_residual(&self, t: f64) -> Result<f64> {
        let jet = self.curve().eval_jet(t, 1)?;
        let n = jet.d(0).ncols();
        let m = hcat(jet.d(0), &(jet.d(1) * signature_matrix(n, self.index)));
        Ok(SymplecticForm::new(n).symplectic_residual(&m))
    }
}

pub fn lagrangian_normal_frame(curve: &FrameCurve, anchor: f64, window: (f64, f64), tol: &Tolerances) -> Result<LagrangianNormalFrame> {
    let nf = normal_frame(curve, anchor, window, tol)?;
    let w = wronskian(&nf.curve(), anchor, tol)?.w;
    let eig = sym_eigen(&w, tol)?;
    let index = inertia_index(&eig.values, tol)?;
    // ascending eigenvalues put the negative directions first
    let n = w.nrows();
    let scale = Mat::from_fn(n, n, |r, c| if r == c { eig.values[r].abs().sqrt().recip() } else { 0.0 });
    let x = &eig.vectors * scale;
    Ok(LagrangianNormalFrame { frame: nf.with_right_factor(&x), index })
}

/// Largest residuals of the identities every fanning Lagrangian curve satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianReport {
    /// `H^T J H` for the horizontal derivative.
    pub horizontal_isotropy: f64,
    /// Asymmetry of `S W^-1`.
    pub schwarzian_wronskian_asymmetry: f64,
    /// `B'^T J B'` for a normal frame.
    pub normal_velocity_isotropy: f64,
    /// Spread of the normal-frame Wronskian over the samples.
    pub normal_wronskian_drift: f64,
}

impl LagrangianReport {
    pub fn max(&self) -> f64 {
        self.horizontal_isotropy.max(self.schwarzian_wronskian_asymmetry).max(self.normal_velocity_isotropy).max(self.normal_wronskian_drift)
    }
}

pub fn lagrangian_property_suite(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<LagrangianReport> {
    let ts = uniform_samples(window, samples.max(2));
    for &t in &ts {
        lagrangian_check(&curve.eval(t)?, t, tol)?;
    }
    let j = symplectic_j(curve.n());
    let anchor = 0.5 * (window.0 + window.1);
    let nf = normal_frame(curve, anchor, window, tol)?.curve();
    let w0 = wronskian(&nf, anchor, tol)?.w;
    let mut report = LagrangianReport { horizontal_isotropy: 0.0, schwarzian_wronskian_asymmetry: 0.0, normal_velocity_isotropy: 0.0, normal_wronskian_drift: 0.0 };
    for &t in &ts {
        let h = horizontal_derivative(curve, t, tol)?;
        report.horizontal_isotropy = report.horizontal_isotropy.max(norm2(&(h.transpose() * &j * &h)) / norm2(&h).powi(2).max(1.0));
        let s = schwarzian(curve, t, tol)?.s;
        let w = wronskian(curve, t, tol)?.w;
        let m = solve(&w.transpose(), &s.transpose(), tol)?.transpose();
        report.schwarzian_wronskian_asymmetry = report.schwarzian_wronskian_asymmetry.max(norm2(&(&m - m.transpose())) / norm2(&m).max(1.0));
        let jet = nf.eval_jet(t, 1)?;
        let b1 = jet.d(1);
        report.normal_velocity_isotropy = report.normal_velocity_isotropy.max(norm2(&(b1.transpose() * &j * b1)) / norm2(b1).powi(2).max(1.0));
        let wt = -(jet.d(0).transpose() * &j * b1);
        report.normal_wronskian_drift = report.normal_wronskian_drift.max(norm2(&(wt - &w0)) / norm2(&w0).max(1.0));
    }
    Ok(report)
}
