//! Standard example curves and seeded random generators.

use rand::Rng;

use crate::curves::{is_fanning, FrameCurve, LagrangeSystem, MatPoly, Mobius};
use crate::error::Result;
use crate::mats::{expm, relative_min_singular, symplectic_j, vcat, Mat, Tolerances};

pub fn column(v: &[f64]) -> Mat {
    Mat::from_column_slice(v.len(), 1, v)
}

/// `(1, t)`.
pub fn line() -> FrameCurve {
    FrameCurve::polynomial(vec![column(&[1.0, 0.0]), column(&[0.0, 1.0])]).expect("valid line")
}

/// `A + t B` with `[A | B]` the identity.
pub fn standard_line(n: usize) -> FrameCurve {
    let a = vcat(&Mat::identity(n, n), &Mat::zeros(n, n));
    let b = vcat(&Mat::zeros(n, n), &Mat::identity(n, n));
    FrameCurve::polynomial(vec![a, b]).expect("valid line")
}

/// `(cos t, sin t)`.
pub fn circle() -> FrameCurve {
    FrameCurve::exponential(Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), column(&[1.0, 0.0])).expect("valid circle")
}

/// `(cos t, -sin t)`.
pub fn reversed_circle() -> FrameCurve {
    FrameCurve::exponential(Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), column(&[1.0, 0.0])).expect("valid circle")
}

/// Harmonic oscillator as a Lagrange system with `K = 1`, `V = 1`.
pub fn oscillator(window: (f64, f64), tol: &Tolerances) -> Result<FrameCurve> {
    let one = MatPoly::constant(Mat::identity(1, 1));
    let sys = LagrangeSystem::new(one.clone(), one, column(&[1.0, 0.0]), column(&[0.0, 1.0]), 0.0, window, tol)?;
    Ok(FrameCurve::from_provider(sys))
}

/// Free particle `K = 1`, `V = 0`.
pub fn free_particle(window: (f64, f64), tol: &Tolerances) -> Result<FrameCurve> {
    let sys = LagrangeSystem::new(
        MatPoly::constant(Mat::identity(1, 1)),
        MatPoly::constant(Mat::zeros(1, 1)),
        column(&[1.0, 0.0]),
        column(&[0.0, 1.0]),
        0.0,
        window,
        tol,
    )?;
    Ok(FrameCurve::from_provider(sys))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Mat {
    let m = random_matrix(rng, n, n, scale);
    (&m + m.transpose()) * 0.5
}

/// Random well-conditioned invertible matrix.
pub fn random_invertible<R: Rng>(rng: &mut R, dim: usize) -> Mat {
    loop {
        let m = Mat::identity(dim, dim) + random_matrix(rng, dim, dim, 0.6);
        if relative_min_singular(&m) > 0.1 {
            return m;
        }
    }
}

/// Random symplectic matrix `exp(J S)` with symmetric `S`.
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let s = random_symmetric(rng, 2 * n, 0.5);
    expm(&(symplectic_j(n) * s)).expect("finite")
}

fn accept(curve: &FrameCurve, window: (f64, f64)) -> bool {
    let tol = Tolerances::default();
    matches!(is_fanning(curve, window, 41, &tol), Ok(r) if r.fanning && r.min_relative_singular > 0.02)
}

/// Random cubic frame, fanning on `window`.
pub fn random_polynomial<R: Rng>(rng: &mut R, n: usize, window: (f64, f64)) -> FrameCurve {
    loop {
        let c0 = vcat(&Mat::identity(n, n), &random_matrix(rng, n, n, 0.3));
        let c1 = vcat(&random_matrix(rng, n, n, 0.3), &Mat::identity(n, n));
        let c2 = random_matrix(rng, 2 * n, n, 0.4);
        let c3 = random_matrix(rng, 2 * n, n, 0.2);
        let curve = FrameCurve::polynomial(vec![c0, c1, c2, c3]).expect("valid shapes");
        if accept(&curve, window) {
            return curve;
        }
    }
}

/// Random `exp(tX) A0`, fanning on `window`.
pub fn random_exponential<R: Rng>(rng: &mut R, n: usize, window: (f64, f64)) -> FrameCurve {
    loop {
        let x = random_matrix(rng, 2 * n, 2 * n, 0.8);
        let a0 = vcat(&Mat::identity(n, n), &random_matrix(rng, n, n, 0.3));
        let curve = FrameCurve::exponential(x, a0).expect("valid shapes");
        if accept(&curve, window) {
            return curve;
        }
    }
}

/// Random Lagrange system with symmetric quadratic `K`, `V` and symplectic start.
pub fn random_lagrange_system<R: Rng>(rng: &mut R, n: usize, window: (f64, f64), tol: &Tolerances) -> FrameCurve {
    loop {
        let (k, v) = random_lagrange_coefficients(rng, n);
        let s = random_symplectic(rng, n);
        let k0 = k.eval(0.0);
        let Some(k0inv) = k0.clone().try_inverse() else { continue };
        let a0 = s.columns(0, n).into_owned();
        let da0 = s.columns(n, n).into_owned() * k0inv;
        if let Ok(sys) = LagrangeSystem::new(k, v, a0, da0, 0.0, window, tol) {
            let curve = FrameCurve::from_provider(sys);
            if accept(&curve, window) {
                return curve;
            }
        }
    }
}

/// Symmetric `K(t) = I + K1 t + K2 t^2` (kept positive) and `V(t) = V0 + V1 t`.
pub fn random_lagrange_coefficients<R: Rng>(rng: &mut R, n: usize) -> (MatPoly, MatPoly) {
    let k = MatPoly::new(vec![
        Mat::identity(n, n) + random_symmetric(rng, n, 0.2),
        random_symmetric(rng, n, 0.2),
        random_symmetric(rng, n, 0.1),
    ])
    .expect("valid shapes");
    let v = MatPoly::new(vec![random_symmetric(rng, n, 1.0), random_symmetric(rng, n, 0.5)]).expect("valid shapes");
    (k, v)
}

/// Tabulates a curve on a uniform grid covering `window` with a margin.
pub fn sampled_from(curve: &FrameCurve, window: (f64, f64), points: usize) -> Result<FrameCurve> {
    let pad = 0.1 * (window.1 - window.0);
    let (lo, hi) = (window.0 - pad, window.1 + pad);
    let ts: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let frames = ts.iter().map(|&t| curve.eval(t)).collect::<Result<Vec<_>>>()?;
    FrameCurve::sampled(ts, frames)
}

/// Random constant left transformation and linear right gauge applied to a random cubic.
pub fn random_transformed<R: Rng>(rng: &mut R, n: usize, window: (f64, f64), tol: &Tolerances) -> FrameCurve {
    let base = random_polynomial(rng, n, window);
    let t = random_invertible(rng, 2 * n);
    let x = MatPoly::new(vec![random_invertible(rng, n), random_matrix(rng, n, n, 0.1)]).expect("valid shapes");
    base.transform_right(x, tol).and_then(|c| c.transform_left(&t, tol)).expect("valid transform")
}

/// Random Mobius map close to the identity on `window`.
pub fn random_mobius<R: Rng>(rng: &mut R) -> Mobius {
    let b = rng.gen_range(-0.2..0.2);
    let c = rng.gen_range(-0.2..0.2);
    Mobius::new(rng.gen_range(0.8..1.2), b, c, 1.0).expect("invertible")
}

/// Random cubic reparameterized by a random Mobius map.
pub fn random_reparameterized<R: Rng>(rng: &mut R, n: usize, window: (f64, f64)) -> FrameCurve {
    loop {
        let m = random_mobius(rng);
        let base = random_polynomial(rng, n, (m.apply(window.0).min(m.apply(window.1)) - 0.1, m.apply(window.0).max(m.apply(window.1)) + 0.1));
        let curve = base.reparameterize(m).expect("valid map");
        if accept(&curve, window) {
            return curve;
        }
    }
}
