//! Frame curves exposed through jet evaluation.

mod lagrange;
mod providers;
pub mod spec;
mod transform;

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mats::{check_finite, hcat, relative_min_singular, Mat, Tolerances};

pub use lagrange::LagrangeSystem;
pub use providers::{Exponential, Polynomial, Sampled, EXACT_JET_ORDER};
pub use spec::CurveSpec;
pub use transform::{Mobius, ParamMap, PolyMap, Reparameterized, Transformed};

/// Value and derivatives `A, A', ..., A^(k)` at a parameter value.
#[derive(Debug, Clone)]
pub struct Jet {
    pub t: f64,
    pub values: Vec<Mat>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn d(&self, k: usize) -> &Mat {
        &self.values[k]
    }

    /// The 2n x 2n matrix `[A | A']`.
    pub fn frame_matrix(&self) -> Mat {
        hcat(&self.values[0], &self.values[1])
    }

    pub fn left_mul(&self, t: &Mat) -> Jet {
        Jet { t: self.t, values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn right_mul(&self, x: &Mat) -> Jet {
        Jet { t: self.t, values: self.values.iter().map(|v| v * x).collect() }
    }

    pub fn truncate(mut self, order: usize) -> Jet {
        self.values.truncate(order + 1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Polynomial,
    Exponential,
    LagrangeSystem,
    Sampled,
    Transformed,
    Reparameterized,
    NormalFrame,
    Custom,
}

/// Something that can produce jets of a 2n x n frame curve.
pub trait JetProvider: Send + Sync + Debug {
    fn half_dim(&self) -> usize;
    fn max_jet_order(&self) -> usize;
    fn kind(&self) -> CurveKind;
    /// Closed parameter interval on which jets are available, if bounded.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
    /// Jets with `order <= max_jet_order()` at a `t` inside the domain.
    fn jet(&self, t: f64, order: usize) -> Result<Jet>;
}

/// Cheaply clonable handle to an immutable frame curve.
#[derive(Debug, Clone)]
pub struct FrameCurve {
    inner: Arc<dyn JetProvider>,
}

/// Slack used when testing whether a parameter lies in a closed domain.
fn domain_slack(lo: f64, hi: f64) -> f64 {
    1e-12 * (hi - lo).abs().max(1.0)
}

impl FrameCurve {
    pub fn from_provider<P: JetProvider + 'static>(provider: P) -> FrameCurve {
        FrameCurve { inner: Arc::new(provider) }
    }

    pub fn n(&self) -> usize {
        self.inner.half_dim()
    }

    pub fn max_jet_order(&self) -> usize {
        self.inner.max_jet_order()
    }

    pub fn kind(&self) -> CurveKind {
        self.inner.kind()
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.inner.domain()
    }

    pub fn eval_jet(&self, t: f64, order: usize) -> Result<Jet> {
        if !t.is_finite() {
            return Err(Error::NonFinite("curve parameter"));
        }
        let max = self.max_jet_order();
        if order > max {
            return Err(Error::JetOrderUnsupported { requested: order, max });
        }
        if let Some((lo, hi)) = self.domain() {
            let slack = domain_slack(lo, hi);
            if t < lo - slack || t > hi + slack {
                return Err(Error::OutsideDomain { t, lo, hi });
            }
        }
        let jet = self.inner.jet(t, order)?;
        for v in &jet.values {
            check_finite(v, "curve jet")?;
        }
        Ok(jet)
    }

    pub fn eval(&self, t: f64) -> Result<Mat> {
        Ok(self.eval_jet(t, 0)?.values.swap_remove(0))
    }

    pub fn polynomial(coeffs: Vec<Mat>) -> Result<FrameCurve> {
        Ok(Self::from_provider(Polynomial::new(coeffs)?))
    }

    pub fn exponential(x: Mat, a0: Mat) -> Result<FrameCurve> {
        Ok(Self::from_provider(Exponential::new(x, a0)?))
    }

    pub fn sampled(ts: Vec<f64>, frames: Vec<Mat>) -> Result<FrameCurve> {
        Ok(Self::from_provider(Sampled::new(ts, frames)?))
    }

    /// `T * A(t)` for an invertible constant `T`.
    pub fn transform_left(&self, t: &Mat, tol: &Tolerances) -> Result<FrameCurve> {
        Ok(Self::from_provider(Transformed::new(self.clone(), Some(t.clone()), None, tol)?))
    }

    /// `A(t) * X(t)` for a polynomial gauge `X(t)`.
    pub fn transform_right(&self, x: MatPoly, tol: &Tolerances) -> Result<FrameCurve> {
        Ok(Self::from_provider(Transformed::new(self.clone(), None, Some(x), tol)?))
    }

    /// `A(s(t))`.
    pub fn reparameterize<M: ParamMap + 'static>(&self, s: M) -> Result<FrameCurve> {
        Ok(Self::from_provider(Reparameterized::new(self.clone(), Arc::new(s))?))
    }

    pub fn reparameterize_arc(&self, s: Arc<dyn ParamMap>) -> Result<FrameCurve> {
        Ok(Self::from_provider(Reparameterized::new(self.clone(), s)?))
    }
}

/// Outcome of the fanning test over a sample grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanningReport {
    pub fanning: bool,
    /// Smallest relative singular value of `[A | A']` over the samples.
    pub min_relative_singular: f64,
    pub worst_t: f64,
    pub first_failure: Option<f64>,
}

/// Relative smallest singular value of `[A|A']` at `t`.
pub fn fanning_margin(curve: &FrameCurve, t: f64) -> Result<f64> {
    let jet = curve.eval_jet(t, 1)?;
    Ok(relative_min_singular(&jet.frame_matrix()))
}

pub fn uniform_samples(window: (f64, f64), samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![0.5 * (window.0 + window.1)];
    }
    (0..samples)
        .map(|i| {
            if i + 1 == samples {
                window.1
            } else {
                window.0 + (window.1 - window.0) * i as f64 / (samples - 1) as f64
            }
        })
        .collect()
}

pub fn is_fanning(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<FanningReport> {
    if samples < 2 {
        return Err(Error::InvalidSpec("fanning test needs at least two samples".into()));
    }
    let mut report = FanningReport { fanning: true, min_relative_singular: f64::INFINITY, worst_t: window.0, first_failure: None };
    for t in uniform_samples(window, samples) {
        let margin = fanning_margin(curve, t)?;
        if margin < report.min_relative_singular {
            report.min_relative_singular = margin;
            report.worst_t = t;
        }
        if margin <= tol.rank_rtol && report.first_failure.is_none() {
            report.fanning = false;
            report.first_failure = Some(t);
        }
    }
    Ok(report)
}

/// Matrix-valued polynomial `sum_j C_j t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly {
    coeffs: Vec<Mat>,
}

impl MatPoly {
    pub fn new(coeffs: Vec<Mat>) -> Result<MatPoly> {
        let first = coeffs.first().ok_or_else(|| Error::InvalidSpec("polynomial needs at least one coefficient".into()))?;
        let shape = first.shape();
        for c in &coeffs {
            if c.shape() != shape {
                return Err(Error::DimensionMismatch("polynomial coefficients differ in shape".into()));
            }
            check_finite(c, "polynomial coefficient")?;
        }
        Ok(MatPoly { coeffs })
    }

    pub fn constant(m: Mat) -> MatPoly {
        MatPoly { coeffs: vec![m] }
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coeffs[0].shape()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// k-th derivative at t.
    pub fn deriv(&self, t: f64, k: usize) -> Mat {
        let (r, c) = self.shape();
        let mut acc = Mat::zeros(r, c);
        for j in (k..self.coeffs.len()).rev() {
            let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
            acc = acc * t + &self.coeffs[j] * falling;
        }
        acc
    }

    pub fn eval(&self, t: f64) -> Mat {
        self.deriv(t, 0)
    }

    /// Derivatives `0..=order` at t.
    pub fn derivs(&self, t: f64, order: usize) -> Vec<Mat> {
        (0..=order).map(|k| self.deriv(t, k)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.is_square() && (c - c.transpose()).norm() <= tol * c.norm().max(1.0))
    }
}
