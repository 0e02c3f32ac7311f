//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use fanning_core::classify::{classify, matrix_schwarzian, reconstruct_generator, FractionalLinear, MatrixCurve};
use fanning_core::congruence::{congruent_parameterized, congruent_symplectic, congruent_unparameterized, Verdict};
use fanning_core::curves::uniform_samples;
use fanning_core::gallery;
use fanning_core::invariants::{fundamental, fundamental_jets, horizontal_derivative, horizontal_subspace, jacobi, schwarzian};
use fanning_core::lagrangian::{lagrange_system_frame, lagrange_system_schwarzian, lagrangian_property_suite, wronskian};
use fanning_core::mats::{anticommutator, expm, norm2, symplectic_j};
use fanning_core::normalize::special_parameterization;
use fanning_core::oracles::{ahdout_check, equivariance_fuzz, finite_difference_convergence, laurent_extract};
use fanning_core::{FrameCurve, Mat, MatPoly, ParamMap, PolyMap, Result, Subspace, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: (f64, f64) = (-0.5, 0.5);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Polynomial,
    Exponential,
    Lagrange,
    Transformed,
    Reparameterized,
    Sampled,
}

const KINDS: [Kind; 6] = [Kind::Polynomial, Kind::Exponential, Kind::Lagrange, Kind::Transformed, Kind::Reparameterized, Kind::Sampled];

fn analytic() -> Tolerances {
    Tolerances::analytic()
}

fn random_curve(rng: &mut ChaCha8Rng, kind: Kind, n: usize) -> FrameCurve {
    let tol = analytic();
    match kind {
        Kind::Polynomial => gallery::random_polynomial(rng, n, WINDOW),
        Kind::Exponential => gallery::random_exponential(rng, n, WINDOW),
        Kind::Lagrange => gallery::random_lagrange_system(rng, n, WINDOW, &tol),
        Kind::Transformed => gallery::random_transformed(rng, n, WINDOW, &tol),
        Kind::Reparameterized => gallery::random_reparameterized(rng, n, WINDOW),
        Kind::Sampled => {
            let base = gallery::random_exponential(rng, n, (-0.8, 0.8));
            gallery::sampled_from(&base, (-0.7, 0.7), 113).expect("sampled curve")
        }
    }
}

fn close(a: &Mat, b: &Mat) -> f64 {
    norm2(&(a - b)) / norm2(b).max(1.0)
}

fn angle(a: &Mat, b: &Mat) -> Result<f64> {
    let tol = analytic();
    Ok(Subspace::span(a, &tol)?.max_angle(&Subspace::span(b, &tol)?))
}

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = Result<(bool, String)>;

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let tol = analytic();
    let (mut worst_analytic, mut worst_sampled) = (0.0f64, 0.0f64);
    for kind in KINDS {
        for i in 0..50 {
            let curve = random_curve(&mut rng, kind, 1 + i % 4);
            let dim = 2 * curve.n();
            let id = Mat::identity(dim, dim);
            for t in uniform_samples((-0.45, 0.45), 10) {
                let (f, fd, fdd) = fundamental_jets(&curve, t, &tol)?;
                let (f, fd, fdd) = (f.mat, fd.mat, fdd.mat);
                let (nf, nd, ndd) = (norm2(&f), norm2(&fd), norm2(&fdd));
                let r = [
                    norm2(&(&f * &f)) / (nf * nf),
                    norm2(&(&fd * &fd - &id)) / (nd * nd),
                    norm2(&anticommutator(&f, &fd)) / (nf * nd),
                    norm2(&anticommutator(&fd, &fdd)) / (nd * ndd.max(1.0)),
                    norm2(&(anticommutator(&f, &fdd) + &id * 2.0)) / (nf * ndd),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                if kind == Kind::Sampled {
                    worst_sampled = worst_sampled.max(r);
                } else {
                    worst_analytic = worst_analytic.max(r);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_analytic <= 1e-8 && worst_sampled <= 1e-4 && secs <= 30.0;
    Ok((pass, format!("analytic {worst_analytic:.2e} (<= 1e-8), sampled {worst_sampled:.2e} (<= 1e-4), {secs:.1}s (<= 30s)")))
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let tol = analytic();
    let (mut char_worst, mut block_worst) = (0.0f64, 0.0f64);
    for kind in KINDS.into_iter().filter(|k| *k != Kind::Sampled) {
        for i in 0..50 {
            let curve = random_curve(&mut rng, kind, 1 + i % 4);
            for t in uniform_samples((-0.45, 0.45), 10) {
                let a = curve.eval(t)?;
                let k = jacobi(&curve, t, &tol)?.mat;
                let s = schwarzian(&curve, t, &tol)?.s;
                let h = horizontal_derivative(&curve, t, &tol)?;
                let scale = (norm2(&k) * norm2(&a)).max(norm2(&a));
                char_worst = char_worst.max(norm2(&(&k * &a - &a * &s * 0.5)) / scale);
                // K in the basis [A | H] is diag(S/2, S/2)
                let g = fanning_core::mats::hcat(&a, &h);
                let n = curve.n();
                let mut d = Mat::zeros(2 * n, 2 * n);
                d.view_mut((0, 0), (n, n)).copy_from(&(&s * 0.5));
                d.view_mut((n, n), (n, n)).copy_from(&(&s * 0.5));
                let block = norm2(&(&k * &g - &g * &d)) / (norm2(&k).max(1.0) * norm2(&g));
                block_worst = block_worst.max(block);
            }
        }
    }
    Ok((char_worst <= 1e-8 && block_worst <= 1e-8, format!("K A - A S/2 {char_worst:.2e}, block form {block_worst:.2e} (<= 1e-8)")))
}

fn scalar_schwarzian(d: &[f64; 5]) -> f64 {
    d[3] / d[1] - 1.5 * (d[2] / d[1]).powi(2)
}

fn random_map(rng: &mut ChaCha8Rng, i: usize) -> Arc<dyn ParamMap> {
    if i.is_multiple_of(2) {
        Arc::new(gallery::random_mobius(rng))
    } else {
        Arc::new(PolyMap::new(vec![rng.gen_range(-0.1..0.1), rng.gen_range(0.8..1.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.1..0.1)]).expect("monotone"))
    }
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let tol = analytic();
    let mut worst = [0.0f64; 11];
    let t = 0.2;
    for i in 0..20 {
        let n = 1 + i % 4;
        let curve = gallery::random_polynomial(&mut rng, n, (-1.5, 1.5));
        let tm = gallery::random_invertible(&mut rng, 2 * n);
        let tinv = tm.clone().try_inverse().expect("invertible");
        let x = MatPoly::new(vec![gallery::random_invertible(&mut rng, n), gallery::random_matrix(&mut rng, n, n, 0.1)])?;
        let xt = x.eval(t);
        let xinv = xt.clone().try_inverse().expect("invertible");
        let moved = curve.transform_left(&tm, &tol)?;
        let gauged = curve.transform_right(x, &tol)?;
        let map = random_map(&mut rng, i);
        let d = map.derivs(t)?;
        let re = curve.reparameterize_arc(Arc::clone(&map))?;
        let (sigma, sd) = (d[0], d[1]);
        let ss = scalar_schwarzian(&d);

        let f = fundamental(&curve, t, &tol)?.mat;
        worst[0] = worst[0].max(close(&fundamental(&gauged, t, &tol)?.mat, &f));
        worst[1] = worst[1].max(close(&fundamental(&moved, t, &tol)?.mat, &(&tm * &f * &tinv)));
        worst[2] = worst[2].max(close(&fundamental(&re, t, &tol)?.mat, &(fundamental(&curve, sigma, &tol)?.mat / sd)));

        let h = horizontal_derivative(&curve, t, &tol)?;
        worst[3] = worst[3].max(close(&horizontal_derivative(&gauged, t, &tol)?, &(&h * &xt)));
        worst[4] = worst[4].max(close(&horizontal_derivative(&moved, t, &tol)?, &(&tm * &h)));
        // the curve is the -1 eigenspace of F', so the correction term enters with a minus sign
        let h_expected = horizontal_derivative(&curve, sigma, &tol)? * sd - curve.eval(sigma)? * (0.5 * d[2] / sd);
        worst[5] = worst[5].max(close(&horizontal_derivative(&re, t, &tol)?, &h_expected));

        let s = schwarzian(&curve, t, &tol)?.s;
        worst[6] = worst[6].max(close(&schwarzian(&moved, t, &tol)?.s, &s));
        worst[7] = worst[7].max(close(&schwarzian(&gauged, t, &tol)?.s, &(&xinv * &s * &xt)));
        let s_expected = schwarzian(&curve, sigma, &tol)?.s * (sd * sd) + Mat::identity(n, n) * ss;
        worst[8] = worst[8].max(close(&schwarzian(&re, t, &tol)?.s, &s_expected));

        let k_expected = jacobi(&curve, sigma, &tol)?.mat * (sd * sd) + Mat::identity(2 * n, 2 * n) * (0.5 * ss);
        worst[9] = worst[9].max(close(&jacobi(&re, t, &tol)?.mat, &k_expected));

        let m: Arc<dyn MatrixCurve> = Arc::new(MatPoly::new(vec![
            gallery::random_matrix(&mut rng, n, n, 0.3),
            gallery::random_invertible(&mut rng, n),
            gallery::random_matrix(&mut rng, n, n, 0.3),
        ])?);
        let frac = FractionalLinear::new(
            Arc::clone(&m),
            gallery::random_invertible(&mut rng, n),
            gallery::random_matrix(&mut rng, n, n, 0.2),
            gallery::random_matrix(&mut rng, n, n, 1.0),
            gallery::random_invertible(&mut rng, n),
            &tol,
        )?;
        let u = frac.denominator(t)?;
        let uinv = u.clone().try_inverse().expect("invertible");
        let expected = &u * matrix_schwarzian(m.as_ref(), t, &tol)? * uinv;
        worst[10] = worst[10].max(close(&matrix_schwarzian(&frac, t, &tol)?, &expected));
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    let names = ["F.gauge", "F.left", "F.reparam", "H.gauge", "H.left", "H.reparam", "S.left", "S.gauge", "S.reparam", "K.reparam", "fractional"];
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    Ok((max <= 1e-7, format!("max {max:.2e} (<= 1e-7); {}", detail.join(", "))))
}

fn ac4() -> Outcome {
    let tol = analytic();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut ok = true;
    let probe = uniform_samples(WINDOW, 25);

    let mut par_worst = 0.0f64;
    for i in 0..20 {
        let n = 1 + i % 4;
        let kind = [Kind::Polynomial, Kind::Exponential, Kind::Lagrange, Kind::Transformed][i % 4];
        let a = random_curve(&mut rng, kind, n);
        let tm = gallery::random_invertible(&mut rng, 2 * n);
        let x = MatPoly::new(vec![gallery::random_invertible(&mut rng, n), gallery::random_matrix(&mut rng, n, n, 0.1)])?;
        let b = a.transform_right(x, &tol)?.transform_left(&tm, &tol)?;
        let r = congruent_parameterized(&a, &b, WINDOW, &tol)?;
        ok &= r.verdict == Verdict::Congruent;
        let mut residual = r.residual;
        if let Some(t) = &r.t {
            for &s in &probe {
                residual = residual.max(angle(&(t * a.eval(s)?), &b.eval(s)?)?);
            }
        } else {
            residual = f64::INFINITY;
        }
        par_worst = par_worst.max(residual);
    }
    ok &= par_worst <= 1e-6;

    let (mut sym_worst, mut sym_j) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let n = 1 + i % 4;
        let a = gallery::random_lagrange_system(&mut rng, n, WINDOW, &tol);
        let s0 = gallery::random_symplectic(&mut rng, n);
        let b = a.transform_left(&s0, &tol)?;
        let r = congruent_symplectic(&a, &b, WINDOW, &tol)?;
        ok &= r.verdict == Verdict::Congruent;
        match &r.t {
            Some(t) => {
                let j = symplectic_j(n);
                sym_j = sym_j.max(norm2(&(t.transpose() * &j * t - &j)));
                sym_worst = sym_worst.max(r.residual);
            }
            None => sym_worst = f64::INFINITY,
        }
    }
    ok &= sym_worst <= 1e-6 && sym_j <= 1e-8;

    let (mut un_worst, mut un_align) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let n = 2 + i % 3;
        let m = loop {
            let m = gallery::random_mobius(&mut rng);
            if m.c * WINDOW.0 + m.d > 0.0 && m.c * WINDOW.1 + m.d > 0.0 {
                break m;
            }
        };
        let wa = (m.apply(WINDOW.0).min(m.apply(WINDOW.1)), m.apply(WINDOW.0).max(m.apply(WINDOW.1)));
        let a = gallery::random_polynomial(&mut rng, n, wa);
        let t0 = gallery::random_invertible(&mut rng, 2 * n);
        let b = a.reparameterize(m)?.transform_left(&t0, &tol)?;
        let r = congruent_unparameterized(&a, wa, &b, WINDOW, &tol)?;
        ok &= r.verdict == Verdict::Congruent;
        un_worst = un_worst.max(if r.verdict == Verdict::Congruent { r.residual } else { f64::INFINITY });
        if let Some(al) = &r.alignment {
            for s in uniform_samples((-0.45, 0.45), 7) {
                un_align = un_align.max((al.map(s)? - m.apply(s)).abs());
            }
        }
    }
    ok &= un_worst <= 1e-5;

    let osc = gallery::oscillator(WINDOW, &tol)?;
    let free = gallery::free_particle(WINDOW, &tol)?;
    let neg_par = congruent_parameterized(&osc, &free, WINDOW, &tol)?.verdict;
    let neg_sym = congruent_symplectic(&osc, &free, WINDOW, &tol)?.verdict;
    ok &= neg_par == Verdict::NotCongruent && neg_sym == Verdict::NotCongruent;

    Ok((
        ok,
        format!(
            "parameterized {par_worst:.2e} (<= 1e-6); symplectic {sym_worst:.2e}, |T^T J T - J| {sym_j:.2e} (<= 1e-8); unparameterized {un_worst:.2e} (<= 1e-5), alignment {un_align:.1e}; controls {} / {}",
            neg_par.as_str(),
            neg_sym.as_str()
        ),
    ))
}

fn ac5() -> Outcome {
    let tol = analytic();
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst_trace = 0.0f64;
    let mut count = 0;
    for kind in KINDS {
        for n in 1..=4 {
            let curve = random_curve(&mut rng, kind, n);
            let sp = special_parameterization(&curve, 0.0, (-0.45, 0.45), &tol)?;
            let re = sp.reparameterized_curve()?;
            for sigma in uniform_samples(sp.image(), 25) {
                let k = jacobi(&re, sigma, &tol)?.mat;
                worst_trace = worst_trace.max(k.trace().abs());
            }
            count += 1;
        }
    }
    let osc = gallery::oscillator(WINDOW, &tol)?;
    let sp = special_parameterization(&osc, 0.0, WINDOW, &tol)?;
    let tan_err = uniform_samples(WINDOW, 101).into_iter().map(|t| (sp.s(t) - t.tan()).abs()).fold(0.0, f64::max);
    Ok((worst_trace <= 1e-7 && tan_err <= 1e-7, format!("|tr K| {worst_trace:.2e} over {count} curves x 25 samples (<= 1e-7); tan error {tan_err:.2e} (<= 1e-7)")))
}

fn ac6() -> Outcome {
    let tol = analytic();
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut ok = true;
    let mut nilpotent = 0.0f64;
    for n in 1..=4 {
        let random_line = FrameCurve::polynomial(vec![gallery::random_matrix(&mut rng, 2 * n, n, 1.0), gallery::random_matrix(&mut rng, 2 * n, n, 1.0)])?;
        for line in [gallery::standard_line(n), random_line] {
            ok &= classify(&line, WINDOW, 25, &tol)?.zero_jacobi.value;
            let x = reconstruct_generator(&line, 0.0, WINDOW, &tol)?;
            nilpotent = nilpotent.max(norm2(&(&x * &x)));
        }
    }
    let osc = classify(&gallery::oscillator(WINDOW, &tol)?, WINDOW, 25, &tol)?;
    ok &= osc.parallel.value;
    let mut orbit_angle = 0.0f64;
    for _ in 0..5 {
        let curve = gallery::random_exponential(&mut rng, 2, WINDOW);
        let report = classify(&curve, WINDOW, 25, &tol)?;
        ok &= report.weakly_parallel.value;
        match report.generator {
            Some(x) => {
                let a0 = curve.eval(0.0)?;
                for t in uniform_samples(WINDOW, 25) {
                    orbit_angle = orbit_angle.max(angle(&(expm(&(&x * t))? * &a0), &curve.eval(t)?)?);
                }
            }
            None => orbit_angle = f64::INFINITY,
        }
    }
    ok &= orbit_angle <= 1e-6 && nilpotent <= 1e-8;
    Ok((ok, format!("lines zero_jacobi, oscillator parallel, orbits weakly parallel; orbit angle {orbit_angle:.2e} (<= 1e-6); |X^2| {nilpotent:.2e} (<= 1e-8)")))
}

fn ac7() -> Outcome {
    let tol = analytic();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let (mut asym, mut drift, mut closed, mut sw, mut iso) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..10 {
        let n = 1 + i % 4;
        let (k, v) = gallery::random_lagrange_coefficients(&mut rng, n);
        let s0 = gallery::random_symplectic(&mut rng, n);
        let Some(k0inv) = k.eval(0.0).try_inverse() else { continue };
        let a0 = s0.columns(0, n).into_owned();
        let da0 = s0.columns(n, n).into_owned() * k0inv;
        let curve = lagrange_system_frame(k.clone(), v.clone(), a0, da0, 0.0, WINDOW, &tol)?;
        for t in uniform_samples(WINDOW, 11) {
            let w = wronskian(&curve, t, &tol)?.w;
            asym = asym.max(norm2(&(&w - w.transpose())) / norm2(&w));
            let engine = schwarzian(&curve, t, &tol)?.s;
            closed = closed.max(close(&lagrange_system_schwarzian(&k, &v, t, &tol)?, &engine));
        }
        let report = lagrangian_property_suite(&curve, WINDOW, 11, &tol)?;
        drift = drift.max(report.normal_wronskian_drift);
        sw = sw.max(report.schwarzian_wronskian_asymmetry);
        iso = iso.max(report.horizontal_isotropy);
    }
    let ok = asym <= 1e-8 && drift <= 1e-8 && closed <= 1e-7 && sw <= 1e-8 && iso <= 1e-8;
    Ok((
        ok,
        format!("W asymmetry {asym:.2e}, normal W drift {drift:.2e}, S W^-1 asymmetry {sw:.2e}, h isotropy {iso:.2e} (<= 1e-8); closed-form Schwarzian {closed:.2e} (<= 1e-7)"),
    ))
}

fn ac8() -> Outcome {
    let tol = analytic();
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let len = WINDOW.1 - WINDOW.0;
    let (mut residue, mut constant, mut ahdout, mut order) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    let mut exact = 0;
    for i in 0..20 {
        let n = 1 + i % 4;
        let kind = [Kind::Polynomial, Kind::Exponential, Kind::Lagrange, Kind::Transformed, Kind::Reparameterized][i % 5];
        let curve = random_curve(&mut rng, kind, n);
        let tau = rng.gen_range(-0.2..0.2);
        let linf = Subspace::span(&gallery::random_matrix(&mut rng, 2 * n, n, 1.0), &tol)?;
        let f = fundamental(&curve, tau, &tol)?.mat;
        let h = horizontal_subspace(&curve, tau, &tol)?;
        let lc = laurent_extract(&curve, tau, &linf, 1e-3 * len, &tol)?;
        residue = residue.max(norm2(&(&lc.residue - &f)) / norm2(&f));
        let id = Mat::identity(2 * n, 2 * n);
        constant = constant.max(linf.transform(&(id + &lc.constant), &tol)?.max_angle(&h));
        ahdout = ahdout.max(ahdout_check(&curve, tau, &h, 1e-2 * len, &tol)?);
        let fd = finite_difference_convergence(&curve, tau, 0.1 * len, &tol)?;
        exact += fd.exact as usize;
        order = order.min(fd.observed_order);
    }
    let ok = residue <= 1e-5 && constant <= 1e-5 && ahdout <= 1e-5 && order >= 2.0;
    Ok((ok, format!("residue vs F {residue:.2e}, (I+N0) linf vs h {constant:.2e}, second-derivative test {ahdout:.2e} (<= 1e-5); min observed order {order:.2} (>= 2), {exact} of 20 reproduced exactly")))
}

fn ac9() -> Outcome {
    let tol = analytic();
    let a = equivariance_fuzz(42, 100, 2, &tol)?;
    let b = equivariance_fuzz(42, 100, 2, &tol)?;
    let same = serde_json::to_string(&a).expect("serializes") == serde_json::to_string(&b).expect("serializes");
    Ok((a.max_residual <= 1e-8 && same, format!("max residual {:.2e} (<= 1e-8), repeat run identical: {same}", a.max_residual)))
}

fn ac10(suite_start: Instant) -> Outcome {
    let cases = common::cases();
    let failures: Vec<String> = cases.iter().filter_map(|c| common::check(c).err()).collect();
    let commands: std::collections::BTreeSet<&str> = cases.iter().map(|c| c.args[0].as_str()).collect();
    let covered = ["invariants", "congruent", "classify", "lagrangian", "normalize", "oracle"].iter().all(|c| commands.contains(c));
    let secs = suite_start.elapsed().as_secs_f64();
    let detail = if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) };
    Ok((
        failures.is_empty() && covered && secs <= 300.0,
        format!("{} golden files byte-identical, all six subcommands covered: {covered}; suite time {secs:.1}s (<= 300s){detail}", cases.len() - failures.len()),
    ))
}

fn main() {
    let suite_start = Instant::now();
    let criteria: [(&str, &str, &dyn Fn() -> Outcome); 9] = [
        ("AC1", "algebraic identities", &ac1),
        ("AC2", "Schwarzian characterization", &ac2),
        ("AC3", "transformation laws", &ac3),
        ("AC4", "congruence round trips", &ac4),
        ("AC5", "special parameterization", &ac5),
        ("AC6", "classification", &ac6),
        ("AC7", "Lagrangian layer", &ac7),
        ("AC8", "oracle agreement", &ac8),
        ("AC9", "equivariance fuzz", &ac9),
    ];
    let mut all = true;
    let mut report = |id: &str, title: &str, start: Instant, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= pass;
        println!("{id} {} {title}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    };
    for (id, title, run) in criteria {
        let start = Instant::now();
        report(id, title, start, run());
    }
    let start = Instant::now();
    report("AC10", "CLI determinism", start, ac10(suite_start));
    if !all {
        std::process::exit(1);
    }
}
