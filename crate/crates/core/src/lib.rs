//! Geometry of fanning curves in the Grassmannian of n-planes in R^{2n} and in the
//! Lagrangian Grassmannian: fundamental endomorphism, horizontal curve, Jacobi
//! endomorphism, matrix Schwarzian, normal frames, Wronskians, congruence and
//! classification.

pub mod classify;
pub mod congruence;
pub mod curves;
pub mod gallery;
pub mod invariants;
pub mod lagrangian;
pub mod error;
pub mod mats;
pub mod normalize;
pub mod oracles;
mod fit;
mod ode;

pub use curves::{CurveKind, CurveSpec, FrameCurve, Jet, JetProvider, MatPoly, Mobius, ParamMap, PolyMap};
pub use error::{Error, Result};
pub use mats::{Mat, Subspace, Tolerances};
