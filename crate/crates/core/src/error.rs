use thiserror::Error;

/// Failures raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("singular matrix (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("ambiguous signature: eigenvalue {eigenvalue:.3e} lies inside the zero band")]
    AmbiguousSignature { eigenvalue: f64 },
    #[error("jet order {requested} exceeds provider limit {max}")]
    JetOrderUnsupported { requested: usize, max: usize },
    #[error("curve is not fanning at t = {t}")]
    NotFanning { t: f64 },
    #[error("right gauge factor is not invertible at t = {t}")]
    NonInvertibleGauge { t: f64 },
    #[error("reparameterization is not monotone at t = {t}")]
    NonMonotoneReparameterization { t: f64 },
    #[error("frame is not Lagrangian at t = {t} (residual {residual:.3e})")]
    NotLagrangian { t: f64, residual: f64 },
    #[error("initial frame of the Lagrange system is not symplectic (residual {residual:.3e})")]
    NotSymplecticInitialFrame { residual: f64 },
    #[error("kinetic matrix K is singular at t = {t}")]
    SingularK { t: f64 },
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
    #[error("window too wide: the special parameter leaves the affine chart near t = {t}")]
    WindowTooWide { t: f64 },
    #[error("curve is not weakly parallel (verification residual {residual:.3e})")]
    NotWeaklyParallel { residual: f64 },
    #[error("subspaces are not transversal")]
    NotTransversal,
    #[error("t = {t} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { t: f64, lo: f64, hi: f64 },
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
}

pub type Result<T> = std::result::Result<T, Error>;
