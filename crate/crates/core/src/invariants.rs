//! Fundamental endomorphism, horizontal objects, P/Q extraction, Schwarzian and
//! Jacobi endomorphism of a fanning frame curve.
//!
//! Every quantity has a jet-level form (`*_from_jet`) used by the oracles and a
//! curve-level form that evaluates the needed jet first.

use serde::{Deserialize, Serialize};

use crate::curves::{FrameCurve, Jet};
use crate::error::{Error, Result};
use crate::mats::{binomial, blocks, commutator, hcat, norm2, relative_min_singular, solve, vcat, Mat, Subspace, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    F,
    Fdot,
    Fddot,
    P,
    K,
    N,
}

/// A 2n x 2n matrix acting on R^{2n}, tagged with what it represents.
#[derive(Debug, Clone)]
pub struct Endomorphism {
    pub mat: Mat,
    pub t: f64,
    pub role: Role,
}

/// Coefficients of `A'' + A' P + A Q = 0` and the derivative of `P`.
#[derive(Debug, Clone)]
pub struct PQPair {
    pub p: Mat,
    pub q: Mat,
    pub pdot: Mat,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct SchwarzianSample {
    pub s: Mat,
    pub t: f64,
}

/// Inverse of `[A | A']`, failing when the curve is not fanning at the jet.
pub fn frame_inverse(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    let g = jet.frame_matrix();
    let rel = relative_min_singular(&g);
    if rel <= tol.rank_rtol {
        return Err(Error::NotFanning { t: jet.t });
    }
    if rel < 1.0 / tol.cond_warn {
        log::warn!("[A|A'] ill-conditioned at t = {} (condition {:.3e})", jet.t, 1.0 / rel);
    }
    let dim = g.nrows();
    solve(&g, &Mat::identity(dim, dim), tol).map_err(|_| Error::NotFanning { t: jet.t })
}

fn need(jet: &Jet, order: usize) -> Result<()> {
    if jet.order() < order {
        return Err(Error::JetOrderUnsupported { requested: order, max: jet.order() });
    }
    Ok(())
}

fn nilpotent_block(n: usize) -> Mat {
    let z = Mat::zeros(n, n);
    blocks(&z, &Mat::identity(n, n), &z, &z)
}

pub fn fundamental_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    need(jet, 1)?;
    let n = jet.d(0).ncols();
    let ginv = frame_inverse(jet, tol)?;
    Ok(jet.frame_matrix() * nilpotent_block(n) * ginv)
}

/// `F` and its derivatives up to `min(order - 1, 3)` from exact jets.
pub fn fundamental_derivatives_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Vec<Mat>> {
    need(jet, 1)?;
    let n = jet.d(0).ncols();
    let ginv = frame_inverse(jet, tol)?;
    let g = |k: usize| hcat(jet.d(k), jet.d(k + 1));
    let f = g(0) * nilpotent_block(n) * &ginv;
    let mut out = vec![f.clone()];
    let top = jet.order().saturating_sub(1).min(3);
    if top == 0 {
        return Ok(out);
    }
    let v = g(1) * &ginv;
    let fd = commutator(&v, &f);
    out.push(fd.clone());
    if top == 1 {
        return Ok(out);
    }
    let v2 = &v * &v;
    let vd = g(2) * &ginv - &v2;
    let fdd = commutator(&vd, &f) + commutator(&v, &fd);
    out.push(fdd.clone());
    if top == 2 {
        return Ok(out);
    }
    let vdd = g(3) * &ginv - &vd * &v * 2.0 - &v * &vd - &v2 * &v;
    let fddd = commutator(&vdd, &f) + commutator(&vd, &fd) * 2.0 + commutator(&v, &fdd);
    out.push(fddd);
    Ok(out)
}

/// `(P^(m), Q^(m))` for `m = 0..=jet.order() - 2`.
pub fn pq_jets_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Vec<(Mat, Mat)>> {
    need(jet, 2)?;
    let n = jet.d(0).ncols();
    let ginv = frame_inverse(jet, tol)?;
    let mut out: Vec<(Mat, Mat)> = Vec::new();
    for m in 0..=jet.order() - 2 {
        let mut rhs = -jet.d(m + 2);
        for (j, (p, q)) in out.iter().enumerate() {
            let c = binomial(m, j);
            rhs -= (jet.d(m + 1 - j) * p + jet.d(m - j) * q) * c;
        }
        let qp = &ginv * rhs;
        out.push((qp.rows(n, n).into_owned(), qp.rows(0, n).into_owned()));
    }
    Ok(out)
}

pub fn pq_from_jet(jet: &Jet, tol: &Tolerances) -> Result<PQPair> {
    need(jet, 3)?;
    let pq = pq_jets_from_jet(&jet.clone().truncate(3), tol)?;
    Ok(PQPair { p: pq[0].0.clone(), q: pq[0].1.clone(), pdot: pq[1].0.clone(), t: jet.t })
}

/// `2Q - P^2/2 - P'`.
pub fn schwarzian_from_pq(p: &Mat, q: &Mat, pdot: &Mat) -> Mat {
    q * 2.0 - p * p * 0.5 - pdot
}

pub fn schwarzian_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    let pq = pq_from_jet(jet, tol)?;
    Ok(schwarzian_from_pq(&pq.p, &pq.q, &pq.pdot))
}

/// Derivative of the Schwarzian; needs jets to order 4.
pub fn schwarzian_derivative_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    need(jet, 4)?;
    let pq = pq_jets_from_jet(&jet.clone().truncate(4), tol)?;
    let (p, pd, pdd) = (&pq[0].0, &pq[1].0, &pq[2].0);
    Ok(&pq[1].1 * 2.0 - (pd * p + p * pd) * 0.5 - pdd)
}

/// `H = A' + A P / 2`.
pub fn horizontal_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    let pq = pq_jets_from_jet(&jet.clone().truncate(2), tol)?;
    Ok(jet.d(1) + jet.d(0) * &pq[0].0 * 0.5)
}

/// `F'' ^ 2 / 4`.
pub fn jacobi_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    need(jet, 3)?;
    let f = fundamental_derivatives_from_jet(&jet.clone().truncate(3), tol)?;
    Ok(&f[2] * &f[2] * 0.25)
}

/// Derivative of the projection onto the curve along the horizontal curve,
/// assembled from its action `A -> H`, `H -> A S / 2`.
pub fn projection_rate_from_jet(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    let pq = pq_from_jet(jet, tol)?;
    let a = jet.d(0);
    let h = jet.d(1) + a * &pq.p * 0.5;
    let s = schwarzian_from_pq(&pq.p, &pq.q, &pq.pdot);
    let basis = hcat(a, &h);
    let image = hcat(&h, &(a * s * 0.5));
    let dim = basis.nrows();
    let inv = solve(&basis, &Mat::identity(dim, dim), tol).map_err(|_| Error::NotFanning { t: jet.t })?;
    Ok(image * inv)
}

/// Second route to the Jacobi endomorphism: the square of the projection rate.
pub fn jacobi_via_projection(jet: &Jet, tol: &Tolerances) -> Result<Mat> {
    let pd = projection_rate_from_jet(jet, tol)?;
    Ok(&pd * &pd)
}

fn order_for(curve: &FrameCurve, wanted: usize) -> Result<usize> {
    let max = curve.max_jet_order();
    if max < wanted {
        return Err(Error::JetOrderUnsupported { requested: wanted, max });
    }
    Ok(wanted)
}

pub fn fundamental(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Endomorphism> {
    let jet = curve.eval_jet(t, order_for(curve, 1)?)?;
    Ok(Endomorphism { mat: fundamental_from_jet(&jet, tol)?, t, role: Role::F })
}

/// `(F, F', F'')` at t.
pub fn fundamental_jets(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<(Endomorphism, Endomorphism, Endomorphism)> {
    let jet = curve.eval_jet(t, order_for(curve, 3)?)?;
    let mut f = fundamental_derivatives_from_jet(&jet, tol)?.into_iter();
    let e = |mat, role| Endomorphism { mat, t, role };
    Ok((e(f.next().unwrap(), Role::F), e(f.next().unwrap(), Role::Fdot), e(f.next().unwrap(), Role::Fddot)))
}

/// Projection onto the curve along the horizontal curve: `(I - F') / 2`.
pub fn projection(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Endomorphism> {
    let jet = curve.eval_jet(t, order_for(curve, 2)?)?;
    let f = fundamental_derivatives_from_jet(&jet, tol)?;
    let dim = f[0].nrows();
    Ok(Endomorphism { mat: (Mat::identity(dim, dim) - &f[1]) * 0.5, t, role: Role::P })
}

pub fn horizontal_derivative(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Mat> {
    let jet = curve.eval_jet(t, order_for(curve, 2)?)?;
    horizontal_from_jet(&jet, tol)
}

pub fn horizontal_subspace(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Subspace> {
    Subspace::span(&horizontal_derivative(curve, t, tol)?, tol)
}

pub fn pq_extract(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<PQPair> {
    let jet = curve.eval_jet(t, order_for(curve, 3)?)?;
    pq_from_jet(&jet, tol)
}

pub fn schwarzian(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<SchwarzianSample> {
    let jet = curve.eval_jet(t, order_for(curve, 3)?)?;
    Ok(SchwarzianSample { s: schwarzian_from_jet(&jet, tol)?, t })
}

/// Derivative of the Schwarzian, from order-4 jets when available and
/// Richardson-extrapolated central differences otherwise.
pub fn schwarzian_derivative(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Mat> {
    if curve.max_jet_order() >= 4 {
        return schwarzian_derivative_from_jet(&curve.eval_jet(t, 4)?, tol);
    }
    domain_derivative(curve, |x| Ok(schwarzian(curve, x, tol)?.s), t)
}

/// Jacobi endomorphism; both computation routes are evaluated and compared.
pub fn jacobi(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<Endomorphism> {
    let jet = curve.eval_jet(t, order_for(curve, 3)?)?;
    let k = jacobi_from_jet(&jet, tol)?;
    let k2 = jacobi_via_projection(&jet, tol)?;
    let gap = norm2(&(&k - &k2));
    if gap > 1e3 * tol.residual_rtol * (1.0 + norm2(&k)) {
        log::warn!("Jacobi endomorphism routes disagree at t = {t}: {gap:.3e}");
    }
    Ok(Endomorphism { mat: k, t, role: Role::K })
}

/// Reparameterization invariants at a point.
#[derive(Debug, Clone)]
pub struct ReparamInvariants {
    /// `tr(K_l^2) - (tr K_l)^2 / n` for the restriction `K_l = S/2` of K to the curve.
    pub quartic: f64,
    /// `[K', K]`.
    pub quintic: Mat,
}

/// Quartic density from a Schwarzian.
pub fn quartic_from_schwarzian(s: &Mat) -> f64 {
    let n = s.nrows() as f64;
    let kl = s * 0.5;
    (&kl * &kl).trace() - kl.trace().powi(2) / n
}

pub fn reparam_invariants(curve: &FrameCurve, t: f64, tol: &Tolerances) -> Result<ReparamInvariants> {
    let quartic = quartic_from_schwarzian(&schwarzian(curve, t, tol)?.s);
    let (k, kdot) = if curve.max_jet_order() >= 4 {
        let f = fundamental_derivatives_from_jet(&curve.eval_jet(t, 4)?, tol)?;
        (&f[2] * &f[2] * 0.25, (&f[3] * &f[2] + &f[2] * &f[3]) * 0.25)
    } else {
        let k = jacobi(curve, t, tol)?.mat;
        let kdot = domain_derivative(curve, |x| Ok(jacobi(curve, x, tol)?.mat), t)?;
        (k, kdot)
    };
    Ok(ReparamInvariants { quartic, quintic: commutator(&kdot, &k) })
}

/// Derivative of `f` at `t` by finite differences that stay inside the domain of `curve`.
fn domain_derivative<F>(curve: &FrameCurve, f: F, t: f64) -> Result<Mat>
where
    F: Fn(f64) -> Result<Mat>,
{
    let Some((lo, hi)) = curve.domain() else {
        return central_derivative(f, t, 1e-3 * t.abs().max(1.0));
    };
    let h = 1e-3 * (hi - lo);
    if t - h >= lo && t + h <= hi {
        return central_derivative(f, t, h);
    }
    // one-sided second-order stencil pointing into the domain
    let sign = if t - h < lo { 1.0 } else { -1.0 };
    let d = |h: f64| -> Result<Mat> { Ok((f(t + sign * h)? * 4.0 - f(t)? * 3.0 - f(t + 2.0 * sign * h)?) / (2.0 * sign * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Central difference with one Richardson level.
pub fn central_derivative<F>(f: F, t: f64, h: f64) -> Result<Mat>
where
    F: Fn(f64) -> Result<Mat>,
{
    let d = |h: f64| -> Result<Mat> { Ok((f(t + h)? - f(t - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Stacks `[Q; P]`-style blocks; exposed for tests of the defining residual.
pub fn pq_residual(jet: &Jet, pq: &PQPair) -> f64 {
    let r = jet.d(2) + jet.d(1) * &pq.p + jet.d(0) * &pq.q;
    let scale = vcat(jet.d(0), jet.d(2)).norm().max(1.0);
    r.norm() / scale
}
