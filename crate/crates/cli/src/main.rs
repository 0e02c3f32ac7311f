//! `fanning`: invariants, normal forms, congruence and classification of fanning curves.
//!
//! Exit codes: 0 ok or congruent, 1 not congruent, 2 parse or usage error, 3 curve not fanning,
//! 4 inconclusive, 5 not Lagrangian, 6 any other failure.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fanning_core::congruence::Verdict;
use fanning_core::{CurveSpec, Error, FrameCurve};
use serde_json::Value;

use commands::Mode;
use output::{Format, Table};

#[derive(Parser)]
#[command(name = "fanning", version, about = "Invariants and congruence of fanning curves in Grassmannians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args)]
struct Common {
    /// Evaluation window `t0:t1`; defaults to the declared window of the input
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Number of uniform samples
    #[arg(long, global = true, default_value_t = 25, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    /// Relative residual tolerance
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample table of F, F', F'', P, K, Schwarzian, tr K and the quartic invariant
    Invariants { spec: PathBuf },
    /// Decide whether two curves are congruent
    Congruent {
        spec_a: PathBuf,
        spec_b: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Parameterized)]
        mode: Mode,
    },
    /// Zero-Jacobi, parallel and weakly parallel flags
    Classify { spec: PathBuf },
    /// Wronskian signature and Lagrangian property residuals
    Lagrangian { spec: PathBuf },
    /// Normal frame and special normal frame sample table
    Normalize { spec: PathBuf },
    /// Cross-checks and randomized equivariance fuzzing
    Oracle {
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Half dimension for fuzzing when no spec is given
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected t0:t1")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad t0: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad t1: {e}"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err("window needs finite t0 < t1".into());
    }
    Ok((a, b))
}

enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::InvalidSpec(_)) | Failure::Core(Error::InvalidTolerances(_)) => 2,
            Failure::Core(Error::NotFanning { .. }) => 3,
            Failure::Core(Error::NotLagrangian { .. }) => 5,
            Failure::Core(_) | Failure::Io(_) => 6,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn load(path: &PathBuf) -> Result<CurveSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    CurveSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn build(spec: &CurveSpec, rtol: Option<f64>) -> Result<(FrameCurve, fanning_core::Tolerances), Failure> {
    let probe = spec.build(&fanning_core::Tolerances::analytic())?;
    let tol = commands::tolerances_for(&probe, rtol)?;
    Ok((spec.build(&tol)?, tol))
}

enum Output {
    Document(Value),
    Table(serde_json::Map<String, Value>, Table),
}

fn emit(common: &Common, out: Output) -> Result<(), Failure> {
    let io_err = |e: &dyn std::fmt::Display| Failure::Io(e.to_string());
    let sink: Box<dyn Write> = match &common.out {
        Some(p) => Box::new(File::create(p).map_err(|e| io_err(&e))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match (common.format, out) {
        (Format::Json, Output::Document(doc)) => output::write_json(&mut w, &doc).map_err(|e| io_err(&e))?,
        (Format::Json, Output::Table(meta, table)) => output::write_json(&mut w, &output::table_document(meta, &table)).map_err(|e| io_err(&e))?,
        (Format::Csv, Output::Document(doc)) => output::write_document_csv(&mut w, &doc).map_err(|e| io_err(&e))?,
        (Format::Csv, Output::Table(_, table)) => output::write_table_csv(&mut w, &table).map_err(|e| io_err(&e))?,
    }
    w.flush().map_err(|e| io_err(&e))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let c = &cli.common;
    let samples = c.samples as usize;
    let (out, code) = match &cli.command {
        Command::Invariants { spec } => {
            let spec = load(spec)?;
            let (curve, tol) = build(&spec, c.rtol)?;
            let w = commands::resolve_window(&[&spec], c.window)?;
            let (meta, table) = commands::invariants(&curve, w, samples, &tol)?;
            (Output::Table(meta, table), 0)
        }
        Command::Normalize { spec } => {
            let spec = load(spec)?;
            let (curve, tol) = build(&spec, c.rtol)?;
            let w = commands::resolve_window(&[&spec], c.window)?;
            let (meta, table) = commands::normalize(&curve, w, samples, &tol)?;
            (Output::Table(meta, table), 0)
        }
        Command::Classify { spec } => {
            let spec = load(spec)?;
            let (curve, tol) = build(&spec, c.rtol)?;
            let w = commands::resolve_window(&[&spec], c.window)?;
            (Output::Document(commands::classify_report(&curve, w, samples, &tol)?), 0)
        }
        Command::Lagrangian { spec } => {
            let spec = load(spec)?;
            let (curve, tol) = build(&spec, c.rtol)?;
            let w = commands::resolve_window(&[&spec], c.window)?;
            (Output::Document(commands::lagrangian_report(&curve, w, samples, &tol)?), 0)
        }
        Command::Congruent { spec_a, spec_b, mode } => {
            let (sa, sb) = (load(spec_a)?, load(spec_b)?);
            if sa.n != sb.n {
                return Err(Failure::Usage(format!("specs have different n ({} and {})", sa.n, sb.n)));
            }
            let (a, tol_a) = build(&sa, c.rtol)?;
            let (b, tol_b) = build(&sb, c.rtol)?;
            let tol = if tol_a.residual_rtol >= tol_b.residual_rtol { tol_a } else { tol_b };
            let (wa, wb) = match mode {
                Mode::Unparameterized => (commands::resolve_window(&[&sa], c.window)?, commands::resolve_window(&[&sb], c.window)?),
                _ => {
                    let w = commands::resolve_window(&[&sa, &sb], c.window)?;
                    (w, w)
                }
            };
            let (doc, verdict) = commands::congruent(&a, wa, &b, wb, *mode, &tol)?;
            let code = match verdict {
                Verdict::Congruent => 0,
                Verdict::NotCongruent => 1,
                Verdict::Inconclusive => 4,
            };
            (Output::Document(doc), code)
        }
        Command::Oracle { spec, seed, trials, n } => {
            let doc = match spec {
                Some(path) => {
                    let spec = load(path)?;
                    let (curve, tol) = build(&spec, c.rtol)?;
                    let w = commands::resolve_window(&[&spec], c.window)?;
                    commands::oracle(Some((&curve, w)), *seed, *trials, spec.n, &tol)?
                }
                None => {
                    let tol = fanning_core::Tolerances::analytic();
                    let tol = match c.rtol {
                        Some(r) => tol.with_residual_rtol(r),
                        None => tol,
                    };
                    tol.validate()?;
                    commands::oracle(None, *seed, *trials, *n, &tol)?
                }
            };
            (Output::Document(doc), 0)
        }
    };
    emit(c, out)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
