//! Subcommand implementations. Each returns a JSON document or a sample table.

use fanning_core::classify::{classify, ClassificationReport, Flag};
use fanning_core::congruence::{congruent_parameterized, congruent_symplectic, congruent_unparameterized, CongruenceResult, Verdict};
use fanning_core::curves::{is_fanning, uniform_samples};
use fanning_core::invariants::{
    fundamental, fundamental_derivatives_from_jet, horizontal_subspace, jacobi, jacobi_from_jet, pq_from_jet,
    quartic_from_schwarzian, schwarzian_from_jet,
};
use fanning_core::lagrangian::{lagrangian_normal_frame, lagrangian_property_suite, signature, wronskian};
use fanning_core::normalize::{normal_frame, normality_residual, special_normal_frame, SpecialNormalFrame};
use fanning_core::oracles::{ahdout_check, equivariance_fuzz, finite_difference_convergence, laurent_extract};
use fanning_core::{CurveKind, CurveSpec, Error, FrameCurve, Mat, Result, Subspace, Tolerances};
use serde_json::{json, Map, Value};

use crate::output::{matrix, number, opt_matrix, row_major, Table};

/// Fine grid used to locate fanning failures before sampling.
const FANNING_SCAN: usize = 401;
/// Depth limit for halving a window whose special parameter leaves the affine chart.
const MAX_SPLIT_DEPTH: usize = 6;

pub fn tolerances_for(curve: &FrameCurve, rtol: Option<f64>) -> Result<Tolerances> {
    let base = if curve.kind() == CurveKind::Sampled { Tolerances::finite_difference() } else { Tolerances::analytic() };
    let tol = match rtol {
        Some(r) => base.with_residual_rtol(r),
        None => base,
    };
    tol.validate()?;
    Ok(tol)
}

/// The override if given, otherwise the declared window; either way it must sit inside every declared window.
pub fn resolve_window(specs: &[&CurveSpec], window: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let declared = specs.iter().map(|s| s.window()).fold((f64::NEG_INFINITY, f64::INFINITY), |a, w| (a.0.max(w.0), a.1.min(w.1)));
    let w = window.unwrap_or(declared);
    if !(w.0 < w.1) {
        return Err(Error::InvalidSpec(format!("empty window [{}, {}]", w.0, w.1)));
    }
    if w.0 < declared.0 || w.1 > declared.1 {
        return Err(Error::InvalidSpec(format!("window [{}, {}] is outside the declared window [{}, {}]", w.0, w.1, declared.0, declared.1)));
    }
    Ok(w)
}

fn require_fanning(curve: &FrameCurve, window: (f64, f64), tol: &Tolerances) -> Result<()> {
    let report = is_fanning(curve, window, FANNING_SCAN, tol)?;
    match report.first_failure {
        Some(_) => Err(Error::NotFanning { t: report.worst_t }),
        None => Ok(()),
    }
}

fn meta(command: &str, n: usize, window: (f64, f64)) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("n".into(), json!(n));
    m.insert("window".into(), json!([number(window.0), number(window.1)]));
    m
}

pub fn invariants(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<(Map<String, Value>, Table)> {
    require_fanning(curve, window, tol)?;
    let n = curve.n();
    let mut columns = vec!["t".to_string()];
    for (name, dim) in [("F", 2 * n), ("dF", 2 * n), ("ddF", 2 * n)] {
        columns.extend(Table::matrix_columns(name, dim, dim));
    }
    columns.extend(Table::matrix_columns("P", n, n));
    columns.extend(Table::matrix_columns("K", 2 * n, 2 * n));
    columns.extend(Table::matrix_columns("S", n, n));
    columns.extend(["trK".to_string(), "quartic".to_string()]);
    let mut rows = Vec::with_capacity(samples);
    for t in uniform_samples(window, samples) {
        let jet = curve.eval_jet(t, 3)?;
        let f = fundamental_derivatives_from_jet(&jet, tol)?;
        let p = pq_from_jet(&jet, tol)?.p;
        let k = jacobi_from_jet(&jet, tol)?;
        let s = schwarzian_from_jet(&jet, tol)?;
        let mut row = vec![t];
        for m in [&f[0], &f[1], &f[2], &p, &k, &s] {
            row.extend(row_major(m));
        }
        row.push(k.trace());
        row.push(quartic_from_schwarzian(&s));
        rows.push(row);
    }
    Ok((meta("invariants", n, window), Table { columns, rows }))
}

fn special_pieces(curve: &FrameCurve, window: (f64, f64), depth: usize, tol: &Tolerances, out: &mut Vec<SpecialNormalFrame>) -> Result<()> {
    let mid = 0.5 * (window.0 + window.1);
    match special_normal_frame(curve, mid, window, tol) {
        Ok(frame) => {
            out.push(frame);
            Ok(())
        }
        Err(Error::WindowTooWide { .. }) if depth < MAX_SPLIT_DEPTH => {
            special_pieces(curve, (window.0, mid), depth + 1, tol, out)?;
            special_pieces(curve, (mid, window.1), depth + 1, tol, out)
        }
        Err(e) => Err(e),
    }
}

pub fn normalize(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<(Map<String, Value>, Table)> {
    require_fanning(curve, window, tol)?;
    let n = curve.n();
    let anchor = 0.5 * (window.0 + window.1);
    let normal = normal_frame(curve, anchor, window, tol)?;
    let normal_curve = normal.curve();
    let mut pieces = Vec::new();
    special_pieces(curve, window, 0, tol, &mut pieces)?;
    let special_curves: Vec<FrameCurve> = pieces.iter().map(|p| p.frame.curve()).collect();

    let mut columns = vec!["t".to_string()];
    columns.extend(Table::matrix_columns("N", 2 * n, n));
    columns.push("normality".into());
    columns.extend(["piece".to_string(), "s".to_string()]);
    columns.extend(Table::matrix_columns("Z", 2 * n, n));
    columns.push("special_trK".into());
    let mut rows = Vec::with_capacity(samples);
    for t in uniform_samples(window, samples) {
        let mut row = vec![t];
        row.extend(row_major(&normal_curve.eval(t)?));
        row.push(normality_residual(&normal_curve, t, tol)?);
        let index = pieces.iter().position(|p| t <= p.parameterization.window().1).unwrap_or(pieces.len() - 1);
        let sigma = pieces[index].parameterization.s(t);
        row.push(index as f64);
        row.push(sigma);
        row.extend(row_major(&special_curves[index].eval(sigma)?));
        row.push(jacobi(&special_curves[index], sigma, tol)?.mat.trace());
        rows.push(row);
    }
    let mut m = meta("normalize", n, window);
    m.insert("anchor".into(), number(anchor));
    let piece_info: Vec<Value> = pieces
        .iter()
        .map(|p| {
            let (w, img) = (p.parameterization.window(), p.parameterization.image());
            json!({"window": [number(w.0), number(w.1)], "anchor": number(p.parameterization.anchor()), "image": [number(img.0), number(img.1)]})
        })
        .collect();
    m.insert("pieces".into(), Value::Array(piece_info));
    Ok((m, Table { columns, rows }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Parameterized,
    Unparameterized,
    Symplectic,
}

impl Mode {
    fn as_str(&self) -> &'static str {
        match self {
            Mode::Parameterized => "parameterized",
            Mode::Unparameterized => "unparameterized",
            Mode::Symplectic => "symplectic",
        }
    }
}

pub fn congruent(a: &FrameCurve, wa: (f64, f64), b: &FrameCurve, wb: (f64, f64), mode: Mode, tol: &Tolerances) -> Result<(Value, Verdict)> {
    let r: CongruenceResult = match mode {
        Mode::Parameterized => congruent_parameterized(a, b, wa, tol)?,
        Mode::Symplectic => congruent_symplectic(a, b, wa, tol)?,
        Mode::Unparameterized => congruent_unparameterized(a, wa, b, wb, tol)?,
    };
    let mobius = r.mobius().map(|m| Value::Array(m.as_array().iter().map(|v| number(*v)).collect())).unwrap_or(Value::Null);
    let doc = json!({
        "command": "congruent",
        "mode": mode.as_str(),
        "verdict": r.verdict.as_str(),
        "residual": number(r.residual),
        "nullity": r.nullity,
        "X": opt_matrix(r.x.as_ref()),
        "T": opt_matrix(r.t.as_ref()),
        "mobius": mobius,
        "note": r.note,
        "window_a": [number(wa.0), number(wa.1)],
        "window_b": [number(wb.0), number(wb.1)],
    });
    Ok((doc, r.verdict))
}

fn flag(f: &Flag) -> Value {
    json!({"value": f.value, "residual": number(f.residual)})
}

pub fn classify_report(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<Value> {
    require_fanning(curve, window, tol)?;
    let r: ClassificationReport = classify(curve, window, samples, tol)?;
    let mut m = meta("classify", curve.n(), window);
    m.insert("zero_jacobi".into(), flag(&r.zero_jacobi));
    m.insert("parallel".into(), flag(&r.parallel));
    m.insert("weakly_parallel".into(), flag(&r.weakly_parallel));
    m.insert("isospectral_drift".into(), number(r.isospectral_drift));
    m.insert("lax_y".into(), opt_matrix(r.lax_y.as_ref()));
    m.insert("generator".into(), opt_matrix(r.generator.as_ref()));
    m.insert("generator_residual".into(), r.generator_residual.map(number).unwrap_or(Value::Null));
    Ok(Value::Object(m))
}

pub fn lagrangian_report(curve: &FrameCurve, window: (f64, f64), samples: usize, tol: &Tolerances) -> Result<Value> {
    let report = lagrangian_property_suite(curve, window, samples, tol)?;
    let sig = signature(curve, window, tol)?;
    let anchor = 0.5 * (window.0 + window.1);
    let normal = lagrangian_normal_frame(curve, anchor, window, tol)?;
    let normal_w = wronskian(&normal.curve(), anchor, tol)?.w;
    let certificate: Vec<Value> = sig
        .certificate
        .iter()
        .map(|(t, values)| json!({"t": number(*t), "eigenvalues": values.iter().map(|v| number(*v)).collect::<Vec<_>>()}))
        .collect();
    let max = report.max();
    let mut m = meta("lagrangian", curve.n(), window);
    m.insert("signature".into(), json!({"index": sig.index, "certificate": certificate}));
    m.insert("wronskian_at_anchor".into(), matrix(&wronskian(curve, anchor, tol)?.w));
    m.insert("normal_frame".into(), json!({"anchor": number(anchor), "index": normal.index, "wronskian": matrix(&normal_w)}));
    m.insert(
        "properties".into(),
        json!({
            "horizontal_isotropy": number(report.horizontal_isotropy),
            "schwarzian_wronskian_asymmetry": number(report.schwarzian_wronskian_asymmetry),
            "normal_velocity_isotropy": number(report.normal_velocity_isotropy),
            "normal_wronskian_drift": number(report.normal_wronskian_drift),
        }),
    );
    m.insert("max_residual".into(), number(max));
    m.insert("pass".into(), json!(max <= tol.residual_rtol));
    Ok(Value::Object(m))
}

fn curve_oracles(curve: &FrameCurve, window: (f64, f64), tol: &Tolerances) -> Result<Value> {
    require_fanning(curve, window, tol)?;
    let len = window.1 - window.0;
    let tau = 0.5 * (window.0 + window.1);
    let jet = curve.eval_jet(tau, 1)?;
    // the velocity span is transversal to the curve at a fanning point
    let linf = Subspace::span(jet.d(1), tol)?;
    let f = fundamental(curve, tau, tol)?.mat;
    let h = horizontal_subspace(curve, tau, tol)?;
    let laurent = laurent_extract(curve, tau, &linf, 1e-3 * len, tol)?;
    let id = Mat::identity(2 * curve.n(), 2 * curve.n());
    let moved = linf.transform(&(id + &laurent.constant), tol)?;
    let ahdout = ahdout_check(curve, tau, &h, 1e-2 * len, tol)?;
    let fd = finite_difference_convergence(curve, tau, 0.1 * len, tol)?;
    Ok(json!({
        "tau": number(tau),
        "laurent": {
            "residue": matrix(&laurent.residue),
            "residue_error": number((&laurent.residue - &f).norm() / f.norm().max(1.0)),
            "constant_angle_to_horizontal": number(moved.max_angle(&h)),
            "residue_change": number(laurent.residue_change),
            "constant_change": number(laurent.constant_change),
        },
        "ahdout_residual": number(ahdout),
        "finite_difference": {
            "steps": fd.steps.iter().map(|v| number(*v)).collect::<Vec<_>>(),
            "errors": fd.errors.iter().map(|v| number(*v)).collect::<Vec<_>>(),
            "exact": fd.exact,
            "observed_order": if fd.exact { Value::Null } else { number(fd.observed_order) },
        },
    }))
}

pub fn oracle(curve: Option<(&FrameCurve, (f64, f64))>, seed: u64, trials: usize, n: usize, tol: &Tolerances) -> Result<Value> {
    let fuzz = equivariance_fuzz(seed, trials, n, tol)?;
    let residuals: Map<String, Value> = fuzz.residuals.iter().map(|(k, v)| (k.clone(), number(*v))).collect();
    let mut m = Map::new();
    m.insert("command".into(), json!("oracle"));
    m.insert("fuzz".into(), json!({"seed": seed, "trials": trials, "n": n, "max_residual": number(fuzz.max_residual), "residuals": residuals}));
    if let Some((c, w)) = curve {
        m.insert("curve".into(), curve_oracles(c, w, tol)?);
    }
    Ok(Value::Object(m))
}
