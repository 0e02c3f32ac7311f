//! Normal frames, special parameterizations and special normal frames.

use std::sync::Arc;

use crate::curves::{CurveKind, FrameCurve, Jet, JetProvider, ParamMap};
use crate::error::{Error, Result};
use crate::invariants::{pq_jets_from_jet, schwarzian, schwarzian_derivative, schwarzian_from_jet};
use crate::mats::{binomial, blocks, hcat, norm2, solve, Mat, Tolerances};
use crate::ode::Table;

/// Largest number of grid nodes the gauge integrators may use.
const MAX_NODES: usize = 1 << 16;

/// Smallest admissible value of the denominator solution before the special
/// parameter is considered to have left the affine chart.
const MIN_CHART_DENOMINATOR: f64 = 1e-3;

fn check_window(curve: &FrameCurve, anchor: f64, window: (f64, f64)) -> Result<()> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::InvalidSpec("window must be a finite interval with t0 < t1".into()));
    }
    if !(window.0 <= anchor && anchor <= window.1) {
        return Err(Error::InvalidSpec(format!("anchor {anchor} outside window [{}, {}]", window.0, window.1)));
    }
    if let Some((lo, hi)) = curve.domain() {
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if window.0 < lo - slack || window.1 > hi + slack {
            return Err(Error::OutsideDomain { t: if window.0 < lo { window.0 } else { window.1 }, lo, hi });
        }
    }
    Ok(())
}

/// A frame `B(t) = A(t) X(t) C` with `X' = P X / 2`, `X(anchor) = I` and a constant `C`.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    base: FrameCurve,
    anchor: f64,
    window: (f64, f64),
    table: Arc<Table>,
    right: Mat,
    tol: Tolerances,
}

impl NormalFrame {
    pub fn base(&self) -> &FrameCurve {
        &self.base
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn right_factor(&self) -> &Mat {
        &self.right
    }

    /// Full gauge `X(t) C` relating the base frame to this one.
    pub fn gauge(&self, t: f64) -> Mat {
        self.table.dense(t).0 * &self.right
    }

    /// Same frame multiplied on the right by a further constant factor.
    pub fn with_right_factor(&self, x: &Mat) -> NormalFrame {
        NormalFrame { right: &self.right * x, ..self.clone() }
    }

    pub fn curve(&self) -> FrameCurve {
        FrameCurve::from_provider(self.clone())
    }
}

impl JetProvider for NormalFrame {
    fn half_dim(&self) -> usize {
        self.base.n()
    }
    fn max_jet_order(&self) -> usize {
        self.base.max_jet_order().saturating_sub(1)
    }
    fn kind(&self) -> CurveKind {
        CurveKind::NormalFrame
    }
    fn domain(&self) -> Option<(f64, f64)> {
        Some(self.window)
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let base = self.base.eval_jet(t, (order + 1).max(2))?;
        let mut xs = vec![self.table.dense(t).0];
        if order >= 1 {
            let pq = pq_jets_from_jet(&base, &self.tol)?;
            for m in 0..order {
                let mut acc = Mat::zeros(xs[0].nrows(), xs[0].ncols());
                for j in 0..=m {
                    acc += &pq[j].0 * &xs[m - j] * binomial(m, j);
                }
                xs.push(acc * 0.5);
            }
        }
        let values = (0..=order)
            .map(|k| {
                let b = (0..=k).fold(Mat::zeros(base.d(0).nrows(), xs[0].ncols()), |acc, j| acc + base.d(k - j) * &xs[j] * binomial(k, j));
                b * &self.right
            })
            .collect();
        Ok(Jet { t, values })
    }
}

/// Normal frame spanning the same curve, with gauge equal to the identity at `anchor`.
pub fn normal_frame(curve: &FrameCurve, anchor: f64, window: (f64, f64), tol: &Tolerances) -> Result<NormalFrame> {
    check_window(curve, anchor, window)?;
    if curve.max_jet_order() < 3 {
        return Err(Error::JetOrderUnsupported { requested: 3, max: curve.max_jet_order() });
    }
    let rhs = |t: f64, x: &Mat| -> Result<Mat> {
        let jet = curve.eval_jet(t, 2)?;
        let pq = pq_jets_from_jet(&jet, tol)?;
        Ok(&pq[0].0 * x * 0.5)
    };
    let n = curve.n();
    let h0 = (window.1 - window.0) / 8.0;
    let table = Table::integrate(&rhs, anchor, window, &Mat::identity(n, n), h0, 0.1 * tol.residual_rtol, MAX_NODES)?;
    Ok(NormalFrame { base: curve.clone(), anchor, window, table: Arc::new(table), right: Mat::identity(n, n), tol: *tol })
}

/// Size of the `P` coefficient of the frame: zero exactly for normal frames.
pub fn normality_residual(frame: &FrameCurve, t: f64, tol: &Tolerances) -> Result<f64> {
    let jet = frame.eval_jet(t, 2)?;
    Ok(norm2(&pq_jets_from_jet(&jet, tol)?[0].0))
}

/// Distance of `[B|B']^{-1} d/dt [B|B']` from `[[0, -S/2], [I, 0]]`.
pub fn moving_frame_check(nf: &NormalFrame, t: f64, tol: &Tolerances) -> Result<f64> {
    let curve = nf.curve();
    let jet = curve.eval_jet(t, 3)?;
    let g = jet.frame_matrix();
    let gd = hcat(jet.d(1), jet.d(2));
    let structure = solve(&g, &gd, tol)?;
    let s = schwarzian_from_jet(&jet, tol)?;
    let n = curve.n();
    let expected = blocks(&Mat::zeros(n, n), &(s * -0.5), &Mat::identity(n, n), &Mat::zeros(n, n));
    Ok(norm2(&(structure - expected)))
}

/// The map `s = u1 / u2`, where `u'' + q u = 0`, `q = tr S / (2n)`, normalized by
/// `s(anchor) = 0`, `s'(anchor) = 1`, `s''(anchor) = 0`.
#[derive(Debug)]
pub struct SpecialParameterization {
    base: FrameCurve,
    anchor: f64,
    window: (f64, f64),
    table: Table,
    image: (f64, f64),
    tol: Tolerances,
}

fn trace_coefficient(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<f64> {
    let s = schwarzian(curve, t, tol)?.s;
    Ok(s.trace() / (2.0 * s.nrows() as f64))
}

impl SpecialParameterization {
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `(s(t0), s(t1))` for the window `[t0, t1]`.
    pub fn image(&self) -> (f64, f64) {
        self.image
    }

    pub fn base(&self) -> &FrameCurve {
        &self.base
    }

    fn state(&self, t: f64) -> [f64; 4] {
        let (v, _) = self.table.dense(t);
        [v[0], v[1], v[2], v[3]]
    }

    pub fn s(&self, t: f64) -> f64 {
        let u = self.state(t);
        u[0] / u[2]
    }

    /// `[s, s', s'', s''', s'''']` at t.
    pub fn derivs(&self, t: f64) -> Result<[f64; 5]> {
        let [u1, du1, u2, du2] = self.state(t);
        if u2 <= MIN_CHART_DENOMINATOR {
            return Err(Error::WindowTooWide { t });
        }
        let q = trace_coefficient(&self.base, t, &self.tol)?;
        let n = self.base.n() as f64;
        let dq = schwarzian_derivative(&self.base, t, &self.tol)?.trace() / (2.0 * n);
        let w = du1 * u2 - u1 * du2;
        let r = du2 / u2;
        Ok([
            u1 / u2,
            w / (u2 * u2),
            -2.0 * w * r / (u2 * u2),
            w * (2.0 * q + 6.0 * r * r) / (u2 * u2),
            w * (2.0 * dq - 16.0 * q * r - 24.0 * r.powi(3)) / (u2 * u2),
        ])
    }

    /// `t` with `s(t) = sigma`.
    pub fn inverse(&self, sigma: f64) -> Result<f64> {
        let (lo_s, hi_s) = self.image;
        let slack = 1e-12 * (hi_s - lo_s).abs().max(1.0);
        if sigma < lo_s - slack || sigma > hi_s + slack {
            return Err(Error::OutsideDomain { t: sigma, lo: lo_s, hi: hi_s });
        }
        let nodes = &self.table.nodes;
        let svals: Vec<f64> = self.table.values.iter().map(|v| v[0] / v[2]).collect();
        let i = svals.partition_point(|&x| x <= sigma).clamp(1, nodes.len() - 1);
        let (mut a, mut b) = (nodes[i - 1], nodes[i]);
        let mut t = a + (b - a) * ((sigma - svals[i - 1]) / (svals[i] - svals[i - 1])).clamp(0.0, 1.0);
        for _ in 0..60 {
            let u = self.state(t);
            let f = u[0] / u[2] - sigma;
            if f.abs() <= 1e-15 * sigma.abs().max(1.0) {
                break;
            }
            if f > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let slope = (u[1] * u[2] - u[0] * u[3]) / (u[2] * u[2]);
            let next = t - f / slope;
            t = if next > a && next < b { next } else { 0.5 * (a + b) };
        }
        Ok(t)
    }
}

pub fn special_parameterization(curve: &FrameCurve, anchor: f64, window: (f64, f64), tol: &Tolerances) -> Result<Arc<SpecialParameterization>> {
    check_window(curve, anchor, window)?;
    if curve.max_jet_order() < 3 {
        return Err(Error::JetOrderUnsupported { requested: 3, max: curve.max_jet_order() });
    }
    let rhs = |t: f64, u: &Mat| -> Result<Mat> {
        let q = trace_coefficient(curve, t, tol)?;
        Ok(Mat::from_column_slice(4, 1, &[u[1], -q * u[0], u[3], -q * u[2]]))
    };
    let u0 = Mat::from_column_slice(4, 1, &[0.0, 1.0, 1.0, 0.0]);
    let h0 = (window.1 - window.0) / 8.0;
    let table = Table::integrate(&rhs, anchor, window, &u0, h0, 0.1 * tol.residual_rtol, MAX_NODES)?;
    for (t, v) in table.nodes.iter().zip(&table.values) {
        if v[2] <= MIN_CHART_DENOMINATOR {
            return Err(Error::WindowTooWide { t: *t });
        }
    }
    let first = &table.values[0];
    let last = &table.values[table.len() - 1];
    let image = (first[0] / first[2], last[0] / last[2]);
    Ok(Arc::new(SpecialParameterization { base: curve.clone(), anchor, window, table, image, tol: *tol }))
}

/// The inverse `sigma -> t` of a special parameterization, as a change of parameter.
#[derive(Debug, Clone)]
pub struct InverseSpecial(pub Arc<SpecialParameterization>);

impl ParamMap for InverseSpecial {
    fn derivs(&self, sigma: f64) -> Result<[f64; 5]> {
        let t = self.0.inverse(sigma)?;
        let [_, s1, s2, s3, s4] = self.0.derivs(t)?;
        let r1 = 1.0 / s1;
        Ok([
            t,
            r1,
            -s2 * r1.powi(3),
            -s3 * r1.powi(4) + 3.0 * s2 * s2 * r1.powi(5),
            -s4 * r1.powi(5) + 10.0 * s3 * s2 * r1.powi(6) - 15.0 * s2.powi(3) * r1.powi(7),
        ])
    }
    fn domain(&self) -> Option<(f64, f64)> {
        Some(self.0.image())
    }
}

impl SpecialParameterization {
    /// The curve in its special parameter, defined on `image()`.
    pub fn reparameterized_curve(self: &Arc<Self>) -> Result<FrameCurve> {
        self.base.reparameterize(InverseSpecial(Arc::clone(self)))
    }
}

/// A normal frame of the specially parameterized curve, with its parameterization.
#[derive(Debug, Clone)]
pub struct SpecialNormalFrame {
    pub frame: NormalFrame,
    pub parameterization: Arc<SpecialParameterization>,
}

pub fn special_normal_frame(curve: &FrameCurve, anchor: f64, window: (f64, f64), tol: &Tolerances) -> Result<SpecialNormalFrame> {
    let sp = special_parameterization(curve, anchor, window, tol)?;
    let reparam = sp.reparameterized_curve()?;
    let frame = normal_frame(&reparam, 0.0, sp.image(), tol)?;
    Ok(SpecialNormalFrame { frame, parameterization: sp })
}
