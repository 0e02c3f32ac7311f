//! Independent cross-checks: graph-map constructions of the fundamental
//! endomorphism and horizontal subspace, finite-difference jets, and randomized
//! equivariance fuzzing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{FrameCurve, Jet};
use crate::error::{Error, Result};
use crate::gallery;
use crate::invariants::{fundamental_derivatives_from_jet, fundamental_from_jet, horizontal_from_jet};
use crate::mats::{hcat, norm2, solve, top, bottom, Mat, Subspace, Tolerances};

/// Smallest singular value of `[a | b]` (orthonormal bases) below which subspaces count as non-transversal.
const TRANSVERSALITY_FLOOR: f64 = 1e-8;

/// The nilpotent map vanishing on `l0`, with range in `l0`, and carrying `linf` onto `l` under `I + N`.
#[derive(Debug, Clone)]
pub struct NilpotentTriple {
    pub n: Mat,
    pub l0: Subspace,
    pub linf: Subspace,
    pub l: Subspace,
}

fn check_transversal(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.transversality(b) <= TRANSVERSALITY_FLOOR {
        return Err(Error::NotTransversal);
    }
    Ok(())
}

pub fn nilpotent_op(l0: &Subspace, linf: &Subspace, l: &Subspace, tol: &Tolerances) -> Result<NilpotentTriple> {
    check_transversal(l0, linf)?;
    check_transversal(l0, l)?;
    let k = l0.dim();
    let split = hcat(linf.basis(), l0.basis());
    // l = linf * a + l0 * b
    let coords = solve(&split, l.basis(), tol)?;
    let a = top(&coords, k);
    let b = bottom(&coords, k);
    let graph = l0.basis() * solve(&a.transpose(), &b.transpose(), tol)?.transpose();
    let dim = split.nrows();
    let linf_coords = top(&solve(&split, &Mat::identity(dim, dim), tol)?, k);
    Ok(NilpotentTriple { n: graph * linf_coords, l0: l0.clone(), linf: linf.clone(), l: l.clone() })
}

impl NilpotentTriple {
    /// Largest violation of the defining properties and of `N^2 = 0`.
    pub fn defect(&self, tol: &Tolerances) -> Result<f64> {
        let scale = norm2(&self.n).max(1.0);
        let kernel = norm2(&(&self.n * self.l0.basis())) / scale;
        let range = norm2(&(&self.n - self.l0.projector() * &self.n)) / scale;
        let square = norm2(&(&self.n * &self.n)) / (scale * scale);
        let id = Mat::identity(self.n.nrows(), self.n.nrows());
        let image = self.linf.transform(&(id + &self.n), tol)?.max_angle(&self.l);
        Ok(kernel.max(range).max(square).max(image))
    }
}

/// Leading Laurent coefficients of `N(l(tau); linf, l(t))` at `t = tau`.
#[derive(Debug, Clone)]
pub struct LaurentCoefficients {
    pub residue: Mat,
    pub constant: Mat,
    /// Change of each coefficient between the two extrapolation levels.
    pub residue_change: f64,
    pub constant_change: f64,
}

pub fn laurent_extract(curve: &FrameCurve, tau: f64, linf: &Subspace, h_base: f64, tol: &Tolerances) -> Result<LaurentCoefficients> {
    let l0 = Subspace::span(&curve.eval(tau)?, tol)?;
    check_transversal(&l0, linf)?;
    // g(t) = (t - tau) N(l0; linf, l(t))
    let g = |s: f64| -> Result<Mat> {
        let l = Subspace::span(&curve.eval(tau + s)?, tol)?;
        if l0.transversality(&l) <= TRANSVERSALITY_FLOOR {
            return Err(Error::NotFanning { t: tau + s });
        }
        Ok(nilpotent_op(&l0, linf, &l, tol)?.n * s)
    };
    let level = |h: f64| -> Result<(Mat, Mat)> {
        let plus = g(h)?;
        let minus = g(-h)?;
        Ok(((&plus + &minus) * 0.5, (plus - minus) / (2.0 * h)))
    };
    let (r1, c1) = level(h_base)?;
    let (r2, c2) = level(0.5 * h_base)?;
    let residue = (&r2 * 4.0 - &r1) / 3.0;
    let constant = (&c2 * 4.0 - &c1) / 3.0;
    let residue_change = norm2(&(&residue - &r2)) / norm2(&residue).max(f64::MIN_POSITIVE);
    let constant_change = norm2(&(&constant - &c2)) / norm2(&constant).max(1.0);
    Ok(LaurentCoefficients { residue, constant, residue_change, constant_change })
}

/// Second derivative at `tau` of the graph map `l(tau) -> candidate` whose graph is `l(t)`,
/// relative to its first derivative. Zero exactly for the horizontal subspace.
pub fn ahdout_check(curve: &FrameCurve, tau: f64, candidate: &Subspace, step: f64, tol: &Tolerances) -> Result<f64> {
    let l0 = Subspace::span(&curve.eval(tau)?, tol)?;
    check_transversal(&l0, candidate)?;
    let k = l0.dim();
    let split = hcat(l0.basis(), candidate.basis());
    let phi = |s: f64| -> Result<Mat> {
        let coords = solve(&split, &curve.eval(tau + s)?, tol)?;
        let (a, b) = (top(&coords, k), bottom(&coords, k));
        Ok(solve(&a.transpose(), &b.transpose(), tol)?.transpose())
    };
    let h = step;
    let (m2, m1, p0, p1, p2) = (phi(-2.0 * h)?, phi(-h)?, phi(0.0)?, phi(h)?, phi(2.0 * h)?);
    let first = (&m2 - &p2 + (&p1 - &m1) * 8.0) / (12.0 * h);
    let second = ((&p1 + &m1) * 16.0 - (&p2 + &m2) - &p0 * 30.0) / (12.0 * h * h);
    Ok(norm2(&second) / norm2(&first))
}

/// Errors of finite-difference `F, F', F''` against the analytic values at two step sizes a decade apart.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub steps: [f64; 2],
    pub errors: [f64; 2],
    /// The stencils reproduce the curve up to roundoff already at the coarse step.
    pub exact: bool,
    /// `+inf` when `exact`.
    pub observed_order: f64,
}

/// Coarse-step error below which the two errors are roundoff and carry no order information.
pub const EXACT_STENCIL_FLOOR: f64 = 1e-10;

/// Jet of order 3 from fourth-order central differences of frame values.
pub fn finite_difference_jet(curve: &FrameCurve, t: f64, h: f64) -> Result<Jet> {
    let f = |k: i32| curve.eval(t + k as f64 * h);
    let (m3, m2, m1, p0, p1, p2, p3) = (f(-3)?, f(-2)?, f(-1)?, f(0)?, f(1)?, f(2)?, f(3)?);
    let d1 = ((&p1 - &m1) * 8.0 - (&p2 - &m2)) / (12.0 * h);
    let d2 = ((&p1 + &m1) * 16.0 - (&p2 + &m2) - &p0 * 30.0) / (12.0 * h * h);
    let d3 = ((&p2 - &m2) * 8.0 - (&p1 - &m1) * 13.0 - (&p3 - &m3)) / (8.0 * h * h * h);
    Ok(Jet { t, values: vec![p0, d1, d2, d3] })
}

pub fn finite_difference_convergence(curve: &FrameCurve, t: f64, h: f64, tol: &Tolerances) -> Result<ConvergenceReport> {
    let exact = fundamental_derivatives_from_jet(&curve.eval_jet(t, 3)?, tol)?;
    let error = |h: f64| -> Result<f64> {
        let approx = fundamental_derivatives_from_jet(&finite_difference_jet(curve, t, h)?, tol)?;
        Ok(exact.iter().zip(&approx).map(|(e, a)| norm2(&(e - a)) / norm2(e).max(1.0)).fold(0.0, f64::max))
    };
    let steps = [h, 0.1 * h];
    let errors = [error(steps[0])?, error(steps[1])?];
    let exact = errors[0] <= EXACT_STENCIL_FLOOR;
    let observed_order = if exact { f64::INFINITY } else { (errors[0] / errors[1]).log10() };
    Ok(ConvergenceReport { steps, errors, exact, observed_order })
}

/// Largest residual per property over all fuzz trials.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub max_residual: f64,
    pub residuals: BTreeMap<String, f64>,
}

fn angle(a: &Mat, b: &Mat, tol: &Tolerances) -> Result<f64> {
    Ok(Subspace::span(a, tol)?.max_angle(&Subspace::span(b, tol)?))
}

fn gauge_jet(jet: &Jet, x: &[Mat; 3]) -> Jet {
    let a = jet.d(0) * &x[0];
    let da = jet.d(1) * &x[0] + jet.d(0) * &x[1];
    let dda = jet.d(2) * &x[0] + jet.d(1) * &x[1] * 2.0 + jet.d(0) * &x[2];
    Jet { t: jet.t, values: vec![a, da, dda] }
}

fn fuzz_trial(seed: u64, trial: usize, n: usize, tol: &Tolerances) -> Result<BTreeMap<String, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let window = (-0.5, 0.5);
    let curve = gallery::random_polynomial(&mut rng, n, window);
    let tau = rng.gen_range(window.0..window.1);
    let t = gallery::random_invertible(&mut rng, 2 * n);
    let tinv = t.clone().try_inverse().expect("well conditioned");
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let jet = curve.eval_jet(tau, 3)?;
    let moved = jet.left_mul(&t);
    let mut out = BTreeMap::new();

    let dim = 2 * n;
    let map = |j: &Jet| -> Result<Mat> { Ok(Mat::identity(dim, dim) * a + fundamental_from_jet(j, tol)? * b) };
    let expected = &t * map(&jet)? * &tinv;
    out.insert("map_equivariance".into(), norm2(&(map(&moved)? - &expected)) / norm2(&expected).max(1.0));

    let h = horizontal_from_jet(&jet, tol)?;
    let l = Subspace::span(jet.d(0), tol)?;
    let hs = Subspace::span(&h, tol)?;
    out.insert("h_transversal".into(), if l.transversality(&hs) > TRANSVERSALITY_FLOOR { 0.0 } else { 1.0 });

    let mut perturbed = jet.clone();
    perturbed.values[3] += gallery::random_matrix(&mut rng, dim, n, 1.0);
    out.insert("h_two_jet".into(), angle(&horizontal_from_jet(&perturbed, tol)?, &h, tol)?);

    out.insert("h_equivariance".into(), angle(&horizontal_from_jet(&moved, tol)?, &(&t * &h), tol)?);

    let x = [gallery::random_invertible(&mut rng, n), gallery::random_matrix(&mut rng, n, n, 1.0), gallery::random_matrix(&mut rng, n, n, 1.0)];
    out.insert("h_frame_independence".into(), angle(&horizontal_from_jet(&gauge_jet(&jet, &x), tol)?, &h, tol)?);

    let fd = &fundamental_derivatives_from_jet(&jet, tol)?[1];
    let plus = (Mat::identity(dim, dim) + fd) * 0.5;
    out.insert("h_eigenspace".into(), norm2(&(fd * &h - &h)) / norm2(&h));
    out.insert("h_eigenspace_rank".into(), Subspace::span(&(&plus * &h), tol)?.max_angle(&hs));

    let a0 = gallery::random_matrix(&mut rng, dim, n, 1.0);
    let b0 = gallery::random_matrix(&mut rng, dim, n, 1.0);
    let line = FrameCurve::polynomial(vec![a0, b0])?;
    let s0 = rng.gen_range(-0.3..0.3);
    let s1 = s0 + rng.gen_range(0.05..0.3);
    let hl = |s: f64| -> Result<Mat> { horizontal_from_jet(&line.eval_jet(s, 2)?, tol) };
    out.insert("h_line_constant".into(), angle(&hl(s0)?, &hl(s1)?, tol)?);
    Ok(out)
}

/// Randomized checks of equivariance of `aI + bF` and of the defining properties of the horizontal curve.
/// Trials run in parallel from per-trial streams of `seed`; the merge is order independent.
pub fn equivariance_fuzz(seed: u64, trials: usize, n: usize, tol: &Tolerances) -> Result<FuzzReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidSpec("fuzzing needs at least one trial and n >= 1".into()));
    }
    let per_trial = (0..trials).into_par_iter().map(|i| fuzz_trial(seed, i, n, tol)).collect::<Result<Vec<_>>>()?;
    let mut residuals: BTreeMap<String, f64> = BTreeMap::new();
    for map in per_trial {
        for (k, v) in map {
            let e = residuals.entry(k).or_insert(0.0);
            *e = e.max(v);
        }
    }
    let max_residual = residuals.values().copied().fold(0.0, f64::max);
    Ok(FuzzReport { seed, trials, n, max_residual, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::column;
    use crate::invariants::{fundamental, horizontal_subspace};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn span(v: &[f64]) -> Subspace {
        Subspace::span(&column(v), &tol()).unwrap()
    }

    #[test]
    fn nilpotent_examples() {
        let e1 = span(&[1.0, 0.0]);
        let e2 = span(&[0.0, 1.0]);
        let n = nilpotent_op(&e1, &e2, &e2, &tol()).unwrap();
        assert!(n.n.norm() < 1e-15);
        let c = 0.7;
        let n = nilpotent_op(&e1, &e2, &span(&[c, 1.0]), &tol()).unwrap();
        assert!((&n.n - Mat::from_row_slice(2, 2, &[0.0, c, 0.0, 0.0])).norm() < 1e-14);
        assert!(n.defect(&tol()).unwrap() < 1e-14);
        assert!(matches!(nilpotent_op(&e1, &e1, &e2, &tol()), Err(Error::NotTransversal)));
    }

    #[test]
    fn nilpotent_equivariance_and_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for k in 1..=3 {
            let sub = |rng: &mut ChaCha8Rng| Subspace::span(&gallery::random_matrix(rng, 2 * k, k, 1.0), &tol()).unwrap();
            let (l0, linf, linf2, l) = (sub(&mut rng), sub(&mut rng), sub(&mut rng), sub(&mut rng));
            let n = nilpotent_op(&l0, &linf, &l, &tol()).unwrap();
            assert!(n.defect(&tol()).unwrap() < 1e-10);
            let t = gallery::random_invertible(&mut rng, 2 * k);
            let tr = |s: &Subspace| s.transform(&t, &tol()).unwrap();
            let moved = nilpotent_op(&tr(&l0), &tr(&linf), &tr(&l), &tol()).unwrap();
            let expected = &t * &n.n * t.clone().try_inverse().unwrap();
            assert!((moved.n - &expected).norm() < 1e-10 * expected.norm().max(1.0));
            let lhs = nilpotent_op(&l0, &linf2, &l, &tol()).unwrap().n;
            let rhs = n.n + nilpotent_op(&l0, &linf2, &linf, &tol()).unwrap().n;
            assert!((lhs - &rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn laurent_coefficients() {
        let line = gallery::line();
        let lc = laurent_extract(&line, 0.0, &span(&[0.0, 1.0]), 1e-3, &tol()).unwrap();
        assert!((&lc.residue - Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).norm() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let w = (-0.5, 0.5);
        for n in 1..=3 {
            let curve = gallery::random_polynomial(&mut rng, n, w);
            let tau = 0.1;
            let f = fundamental(&curve, tau, &tol()).unwrap().mat;
            let h = horizontal_subspace(&curve, tau, &tol()).unwrap();
            let a = Subspace::span(&gallery::random_matrix(&mut rng, 2 * n, n, 1.0), &tol()).unwrap();
            let b = Subspace::span(&gallery::random_matrix(&mut rng, 2 * n, n, 1.0), &tol()).unwrap();
            let la = laurent_extract(&curve, tau, &a, 1e-3, &tol()).unwrap();
            let lb = laurent_extract(&curve, tau, &b, 1e-3, &tol()).unwrap();
            assert!((&la.residue - &f).norm() <= 1e-5 * f.norm());
            assert!((&la.residue - &lb.residue).norm() <= 1e-5 * f.norm());
            let id = Mat::identity(2 * n, 2 * n);
            assert!(a.transform(&(&id + &la.constant), &tol()).unwrap().max_angle(&h) < 1e-5);
            assert!(b.transform(&(&id + &lb.constant), &tol()).unwrap().max_angle(&h) < 1e-5);
            assert!((&la.constant - &lb.constant).norm() > 1e-3);
        }
    }

    #[test]
    fn ahdout_examples() {
        let line = gallery::line();
        assert!(ahdout_check(&line, 0.0, &span(&[0.0, 1.0]), 1e-2, &tol()).unwrap() < 1e-8);
        assert!(ahdout_check(&line, 0.0, &span(&[1.0, 1.0]), 1e-2, &tol()).unwrap() > 1.0);
        assert!(ahdout_check(&gallery::circle(), 0.0, &span(&[0.0, 1.0]), 1e-2, &tol()).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for n in 1..=3 {
            let curve = gallery::random_exponential(&mut rng, n, (-0.5, 0.5));
            let h = horizontal_subspace(&curve, 0.2, &tol()).unwrap();
            assert!(ahdout_check(&curve, 0.2, &h, 1e-2, &tol()).unwrap() < 1e-5);
        }
    }

    #[test]
    fn finite_differences_converge_at_least_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let curve = gallery::random_exponential(&mut rng, 2, (-0.5, 0.5));
        let r = finite_difference_convergence(&curve, 0.0, 0.1, &tol()).unwrap();
        assert!(r.observed_order >= 2.0, "{r:?}");
        assert!(!r.exact);
    }

    #[test]
    fn low_degree_polynomials_are_reproduced_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let curve = gallery::random_polynomial(&mut rng, 2, (-0.5, 0.5));
        let r = finite_difference_convergence(&curve, 0.1, 0.1, &tol()).unwrap();
        assert!(r.exact && r.observed_order == f64::INFINITY, "{r:?}");
    }

    #[test]
    fn fuzz_is_deterministic_and_small() {
        let a = equivariance_fuzz(42, 20, 2, &tol()).unwrap();
        let b = equivariance_fuzz(42, 20, 2, &tol()).unwrap();
        assert!(a.max_residual <= 1e-8, "{a:?}");
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
