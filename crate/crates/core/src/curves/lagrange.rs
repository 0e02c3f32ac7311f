use crate::curves::providers::EXACT_JET_ORDER;
use crate::curves::{CurveKind, Jet, JetProvider, MatPoly};
use crate::error::{Error, Result};
use crate::mats::{binomial, hcat, min_singular, norm2, solve, symplectic_j, Mat, Tolerances};
use crate::ode::{rk4_step, Table};

/// Frames solving `d/dt(A' K) + A V = 0` with symmetric polynomial `K`, `V`.
///
/// The state `(A, A' K)` is tabulated once by classical Runge-Kutta; jets at a
/// point come from repeated differentiation of the equation itself.
#[derive(Debug, Clone)]
pub struct LagrangeSystem {
    n: usize,
    k: MatPoly,
    v: MatPoly,
    t0: f64,
    domain: (f64, f64),
    table: Table,
    tol: Tolerances,
}

fn k_inverse(k: &MatPoly, t: f64, tol: &Tolerances) -> Result<Mat> {
    let kt = k.eval(t);
    let scale: f64 = k.coeffs().iter().map(|c| c.norm()).sum::<f64>() * t.abs().max(1.0).powi(k.degree() as i32);
    if min_singular(&kt) <= tol.rank_rtol * scale {
        return Err(Error::SingularK { t });
    }
    solve(&kt, &Mat::identity(kt.nrows(), kt.nrows()), tol).map_err(|_| Error::SingularK { t })
}

impl LagrangeSystem {
    /// `window` is widened by a tenth of its length on both sides and to cover `t0`.
    pub fn new(k: MatPoly, v: MatPoly, frame0: Mat, dframe0: Mat, t0: f64, window: (f64, f64), tol: &Tolerances) -> Result<LagrangeSystem> {
        let n = frame0.ncols();
        if n == 0 || frame0.shape() != (2 * n, n) || dframe0.shape() != (2 * n, n) {
            return Err(Error::DimensionMismatch("Lagrange initial frames must be 2n x n".into()));
        }
        if k.shape() != (n, n) || v.shape() != (n, n) {
            return Err(Error::DimensionMismatch("K and V must be n x n".into()));
        }
        if !k.is_symmetric(tol.residual_rtol) || !v.is_symmetric(tol.residual_rtol) {
            return Err(Error::NotSymmetric { asymmetry: f64::NAN });
        }
        if !(window.0 < window.1) || !t0.is_finite() {
            return Err(Error::InvalidSpec("Lagrange system window must be a nonempty finite interval".into()));
        }
        let pad = 0.1 * (window.1 - window.0);
        let domain = ((window.0 - pad).min(t0), (window.1 + pad).max(t0));
        let momentum0 = &dframe0 * k.eval(t0);
        let m = hcat(&frame0, &momentum0);
        let j = symplectic_j(n);
        let residual = norm2(&(m.transpose() * &j * &m - &j));
        if residual > tol.residual_rtol * norm2(&m).powi(2).max(1.0) {
            return Err(Error::NotSymplecticInitialFrame { residual });
        }
        let rhs = |t: f64, y: &Mat| -> Result<Mat> {
            let a = y.columns(0, n).into_owned();
            let p = y.columns(n, n).into_owned();
            Ok(hcat(&(p * k_inverse(&k, t, tol)?), &(-(a * v.eval(t)))))
        };
        let len = domain.1 - domain.0;
        let h0 = (len / 16.0).min(0.1);
        let table = Table::integrate(&rhs, t0, domain, &m, h0, 0.1 * tol.residual_rtol, 1 << 22)?;
        Ok(LagrangeSystem { n, k, v, t0, domain, table, tol: *tol })
    }

    pub fn kinetic(&self) -> &MatPoly {
        &self.k
    }

    pub fn potential(&self) -> &MatPoly {
        &self.v
    }

    pub fn initial_time(&self) -> f64 {
        self.t0
    }

    fn state(&self, t: f64) -> Result<Mat> {
        let n = self.n;
        let i = self.table.nearest(t);
        let tn = self.table.nodes[i];
        let rhs = |s: f64, y: &Mat| -> Result<Mat> {
            let a = y.columns(0, n).into_owned();
            let p = y.columns(n, n).into_owned();
            Ok(hcat(&(p * k_inverse(&self.k, s, &self.tol)?), &(-(a * self.v.eval(s)))))
        };
        if t == tn {
            return Ok(self.table.values[i].clone());
        }
        rk4_step(&rhs, tn, &self.table.values[i], t - tn)
    }
}

impl JetProvider for LagrangeSystem {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn max_jet_order(&self) -> usize {
        EXACT_JET_ORDER
    }
    fn kind(&self) -> CurveKind {
        CurveKind::LagrangeSystem
    }
    fn domain(&self) -> Option<(f64, f64)> {
        Some(self.domain)
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let n = self.n;
        let y = self.state(t)?;
        let kinv = k_inverse(&self.k, t, &self.tol)?;
        let ks = self.k.derivs(t, order);
        let vs = self.v.derivs(t, order.saturating_sub(2));
        let mut a = vec![y.columns(0, n).into_owned()];
        if order >= 1 {
            a.push(y.columns(n, n).into_owned() * &kinv);
        }
        // m-th derivative of A''K + A'K' + AV = 0 solved for A^(m+2).
        for m in 0..order.saturating_sub(1) {
            let mut acc = Mat::zeros(2 * n, n);
            for j in 0..=m {
                let c = binomial(m, j);
                acc += &a[m + 1 - j] * &ks[j + 1] * c;
                acc += &a[m - j] * &vs[j] * c;
                if j >= 1 {
                    acc += &a[m + 2 - j] * &ks[j] * c;
                }
            }
            a.push(-(acc * &kinv));
        }
        Ok(Jet { t, values: a })
    }
}
