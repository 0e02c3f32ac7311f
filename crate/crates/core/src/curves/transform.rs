use std::fmt::Debug;
use std::sync::Arc;

use crate::curves::{CurveKind, FrameCurve, Jet, JetProvider, MatPoly};
use crate::error::{Error, Result};
use crate::mats::{binomial, check_finite, relative_min_singular, Mat, Tolerances};

/// `T A(t) X(t)` with constant `T` and polynomial `X(t)`, either optional.
#[derive(Debug, Clone)]
pub struct Transformed {
    base: FrameCurve,
    left: Option<Mat>,
    right: Option<MatPoly>,
    rank_rtol: f64,
}

impl Transformed {
    pub fn new(base: FrameCurve, left: Option<Mat>, right: Option<MatPoly>, tol: &Tolerances) -> Result<Transformed> {
        let n = base.n();
        if let Some(t) = &left {
            if t.shape() != (2 * n, 2 * n) {
                return Err(Error::DimensionMismatch("left transformation must be 2n x 2n".into()));
            }
            check_finite(t, "left transformation")?;
            if relative_min_singular(t) <= tol.rank_rtol {
                return Err(Error::SingularMatrix { cond: f64::INFINITY });
            }
        }
        if let Some(x) = &right {
            if x.shape() != (n, n) {
                return Err(Error::DimensionMismatch("right gauge must be n x n".into()));
            }
        }
        Ok(Transformed { base, left, right, rank_rtol: tol.rank_rtol })
    }
}

impl JetProvider for Transformed {
    fn half_dim(&self) -> usize {
        self.base.n()
    }
    fn max_jet_order(&self) -> usize {
        self.base.max_jet_order()
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Transformed
    }
    fn domain(&self) -> Option<(f64, f64)> {
        self.base.domain()
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let mut jet = self.base.eval_jet(t, order)?;
        if let Some(x) = &self.right {
            let xs = x.derivs(t, order);
            if relative_min_singular(&xs[0]) <= self.rank_rtol {
                return Err(Error::NonInvertibleGauge { t });
            }
            let values = (0..=order)
                .map(|k| {
                    (0..=k).fold(Mat::zeros(jet.values[0].nrows(), xs[0].ncols()), |acc, j| {
                        acc + &jet.values[k - j] * &xs[j] * binomial(k, j)
                    })
                })
                .collect();
            jet.values = values;
        }
        if let Some(m) = &self.left {
            jet = jet.left_mul(m);
        }
        Ok(jet)
    }
}

/// A scalar change of parameter `t -> s(t)` with derivatives up to order 4.
pub trait ParamMap: Send + Sync + Debug {
    /// `[s, s', s'', s''', s'''']` at t.
    fn derivs(&self, t: f64) -> Result<[f64; 5]>;
    /// Closed interval on which the map is defined, if bounded.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `s(t) = (a t + b) / (c t + d)` normalized to `|ad - bc| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Mobius> {
        let det = a * d - b * c;
        let size = [a, b, c, d].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !det.is_finite() || det.abs() <= 1e-14 * size * size {
            return Err(Error::InvalidSpec("Mobius map must have ad - bc != 0".into()));
        }
        let k = det.abs().sqrt().recip();
        Ok(Mobius { a: a * k, b: b * k, c: c * k, d: d * k })
    }

    pub fn identity() -> Mobius {
        Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, t: f64) -> f64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let (e, f, g, h) = (other.a, other.b, other.c, other.d);
        Mobius::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h).expect("composition of invertible maps")
    }

    pub fn inverse(&self) -> Mobius {
        Mobius::new(self.d, -self.b, -self.c, self.a).expect("inverse of invertible map")
    }

    /// Map taking three distinct points `x_i` to `y_i`.
    pub fn through(x: [f64; 3], y: [f64; 3]) -> Result<Mobius> {
        // Cross-ratio construction: z -> (z - x0)(x1 - x2) / ((z - x2)(x1 - x0)) sends x to (0, 1, inf).
        let to_std = |p: [f64; 3]| Mobius::new(p[1] - p[2], -p[0] * (p[1] - p[2]), p[1] - p[0], -p[2] * (p[1] - p[0]));
        let f = to_std(x)?;
        let g = to_std(y)?;
        Ok(g.inverse().compose(&f))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl ParamMap for Mobius {
    fn derivs(&self, t: f64) -> Result<[f64; 5]> {
        let q = self.c * t + self.d;
        if q == 0.0 || !q.is_finite() {
            return Err(Error::NonMonotoneReparameterization { t });
        }
        let det = self.det();
        let mut out = [self.apply(t), 0.0, 0.0, 0.0, 0.0];
        let mut fact = 1.0;
        for k in 1..5 {
            fact *= k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out[k] = sign * fact * self.c.powi(k as i32 - 1) * det / q.powi(k as i32 + 1);
        }
        Ok(out)
    }
}

/// Polynomial change of parameter `s(t) = sum_j c_j t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    coeffs: Vec<f64>,
}

impl PolyMap {
    pub fn new(coeffs: Vec<f64>) -> Result<PolyMap> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("polynomial reparameterization needs finite coefficients".into()));
        }
        Ok(PolyMap { coeffs })
    }
}

impl ParamMap for PolyMap {
    fn derivs(&self, t: f64) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in (k..self.coeffs.len()).rev() {
                let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
                acc = acc * t + self.coeffs[j] * falling;
            }
            *slot = acc;
        }
        Ok(out)
    }
}

/// Order-4 Faa di Bruno composition of base jets `D_k` at `s(t)` with `s_k`.
pub fn compose_jets(base: &[Mat], s: &[f64; 5], order: usize) -> Vec<Mat> {
    let d = |k: usize| &base[k];
    let (s1, s2, s3, s4) = (s[1], s[2], s[3], s[4]);
    let mut out = vec![base[0].clone()];
    if order >= 1 {
        out.push(d(1) * s1);
    }
    if order >= 2 {
        out.push(d(2) * (s1 * s1) + d(1) * s2);
    }
    if order >= 3 {
        out.push(d(3) * s1.powi(3) + d(2) * (3.0 * s1 * s2) + d(1) * s3);
    }
    if order >= 4 {
        out.push(d(4) * s1.powi(4) + d(3) * (6.0 * s1 * s1 * s2) + d(2) * (3.0 * s2 * s2 + 4.0 * s1 * s3) + d(1) * s4);
    }
    out
}

/// `A(s(t))`.
#[derive(Debug, Clone)]
pub struct Reparameterized {
    base: FrameCurve,
    map: Arc<dyn ParamMap>,
}

impl Reparameterized {
    pub fn new(base: FrameCurve, map: Arc<dyn ParamMap>) -> Result<Reparameterized> {
        Ok(Reparameterized { base, map })
    }

    pub fn map(&self) -> &Arc<dyn ParamMap> {
        &self.map
    }
}

impl JetProvider for Reparameterized {
    fn half_dim(&self) -> usize {
        self.base.n()
    }
    fn max_jet_order(&self) -> usize {
        self.base.max_jet_order().min(4)
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Reparameterized
    }
    fn domain(&self) -> Option<(f64, f64)> {
        self.map.domain()
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let s = self.map.derivs(t)?;
        if s.iter().any(|v| !v.is_finite()) || s[1].abs() <= 1e-14 {
            return Err(Error::NonMonotoneReparameterization { t });
        }
        let base = self.base.eval_jet(s[0], order)?;
        Ok(Jet { t, values: compose_jets(&base.values, &s, order) })
    }
}
