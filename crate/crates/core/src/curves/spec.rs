//! JSON curve descriptions.

use serde::{Deserialize, Serialize};

use crate::curves::{FrameCurve, LagrangeSystem, MatPoly, Mobius, PolyMap};
use crate::error::{Error, Result};
use crate::mats::{Mat, Tolerances};

/// Row-major nested array.
pub type Rows = Vec<Vec<f64>>;

/// One matrix or a list of polynomial coefficient matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyRows {
    Coefficients(Vec<Rows>),
    Constant(Rows),
}

impl PolyRows {
    fn to_poly(&self, shape: (usize, usize), what: &str) -> Result<MatPoly> {
        let rows: Vec<&Rows> = match self {
            PolyRows::Coefficients(c) => c.iter().collect(),
            PolyRows::Constant(c) => vec![c],
        };
        let mats = rows.into_iter().map(|r| to_mat(r, shape, what)).collect::<Result<Vec<_>>>()?;
        MatPoly::new(mats)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub n: usize,
    #[serde(flatten)]
    pub body: SpecBody,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum SpecBody {
    Polynomial {
        coeffs: Vec<Rows>,
    },
    Exponential {
        #[serde(rename = "X")]
        x: Rows,
        #[serde(rename = "A0")]
        a0: Rows,
    },
    LagrangeSystem {
        #[serde(rename = "K")]
        k: PolyRows,
        #[serde(rename = "V")]
        v: PolyRows,
        frame0: Rows,
        dframe0: Rows,
        #[serde(default)]
        t0: f64,
    },
    Sampled {
        t: Vec<f64>,
        #[serde(rename = "A")]
        a: Vec<Rows>,
    },
    Transformed {
        base: Box<CurveSpec>,
        #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
        left: Option<Rows>,
        #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
        right: Option<PolyRows>,
    },
    Reparameterized {
        base: Box<CurveSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mobius: Option<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        poly: Option<Vec<f64>>,
    },
}

pub fn to_mat(rows: &Rows, shape: (usize, usize), what: &str) -> Result<Mat> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::InvalidSpec(format!("{what}: expected a {}x{} array", shape.0, shape.1)));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("{what}: non-finite entry")));
    }
    Ok(Mat::from_fn(shape.0, shape.1, |r, c| rows[r][c]))
}

pub fn to_rows(m: &Mat) -> Rows {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

impl CurveSpec {
    pub fn from_json(text: &str) -> Result<CurveSpec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window[0], self.window[1])
    }

    pub fn build(&self, tol: &Tolerances) -> Result<FrameCurve> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        let (w0, w1) = self.window();
        if !(w0.is_finite() && w1.is_finite() && w0 < w1) {
            return Err(Error::InvalidSpec("window must be a finite interval [t0, t1] with t0 < t1".into()));
        }
        let frame = (2 * n, n);
        match &self.body {
            SpecBody::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSpec("polynomial needs at least one coefficient".into()));
                }
                let mats = coeffs.iter().map(|c| to_mat(c, frame, "polynomial coefficient")).collect::<Result<Vec<_>>>()?;
                FrameCurve::polynomial(mats)
            }
            SpecBody::Exponential { x, a0 } => {
                FrameCurve::exponential(to_mat(x, (2 * n, 2 * n), "X")?, to_mat(a0, frame, "A0")?)
            }
            SpecBody::LagrangeSystem { k, v, frame0, dframe0, t0 } => {
                let sys = LagrangeSystem::new(
                    k.to_poly((n, n), "K")?,
                    v.to_poly((n, n), "V")?,
                    to_mat(frame0, frame, "frame0")?,
                    to_mat(dframe0, frame, "dframe0")?,
                    *t0,
                    (w0, w1),
                    tol,
                )?;
                Ok(FrameCurve::from_provider(sys))
            }
            SpecBody::Sampled { t, a } => {
                let mats = a.iter().map(|m| to_mat(m, frame, "sampled frame")).collect::<Result<Vec<_>>>()?;
                FrameCurve::sampled(t.clone(), mats)
            }
            SpecBody::Transformed { base, left, right } => {
                if base.n != n {
                    return Err(Error::InvalidSpec("nested spec has a different n".into()));
                }
                let mut curve = base.build(tol)?;
                if let Some(x) = right {
                    curve = curve.transform_right(x.to_poly((n, n), "X")?, tol)?;
                }
                if let Some(t) = left {
                    curve = curve.transform_left(&to_mat(t, (2 * n, 2 * n), "T")?, tol)?;
                }
                Ok(curve)
            }
            SpecBody::Reparameterized { base, mobius, poly } => {
                if base.n != n {
                    return Err(Error::InvalidSpec("nested spec has a different n".into()));
                }
                let curve = base.build(tol)?;
                match (mobius, poly) {
                    (Some([a, b, c, d]), None) => curve.reparameterize(Mobius::new(*a, *b, *c, *d)?),
                    (None, Some(p)) => curve.reparameterize(PolyMap::new(p.clone())?),
                    _ => Err(Error::InvalidSpec("reparameterization needs exactly one of \"mobius\" or \"poly\"".into())),
                }
            }
        }
    }
}
