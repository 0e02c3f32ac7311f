use crate::curves::{CurveKind, Jet, JetProvider, MatPoly};
use crate::error::{Error, Result};
use crate::mats::{check_finite, expm, Mat};

/// Highest jet order served by the exact providers.
pub const EXACT_JET_ORDER: usize = 8;

fn check_frame_shape(m: &Mat, n: usize, what: &str) -> Result<()> {
    if m.shape() != (2 * n, n) {
        return Err(Error::DimensionMismatch(format!("{what}: expected {}x{n}, got {}x{}", 2 * n, m.nrows(), m.ncols())));
    }
    Ok(())
}

/// `A(t) = sum_j M_j t^j`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    n: usize,
    poly: MatPoly,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Mat>) -> Result<Polynomial> {
        let poly = MatPoly::new(coeffs)?;
        let (r, c) = poly.shape();
        if c == 0 || r != 2 * c {
            return Err(Error::DimensionMismatch(format!("polynomial frame coefficients must be 2n x n, got {r}x{c}")));
        }
        Ok(Polynomial { n: c, poly })
    }
}

impl JetProvider for Polynomial {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn max_jet_order(&self) -> usize {
        EXACT_JET_ORDER
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Polynomial
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        Ok(Jet { t, values: self.poly.derivs(t, order) })
    }
}

/// `A(t) = exp(tX) A0`.
#[derive(Debug, Clone)]
pub struct Exponential {
    n: usize,
    x: Mat,
    a0: Mat,
}

impl Exponential {
    pub fn new(x: Mat, a0: Mat) -> Result<Exponential> {
        let n = a0.ncols();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty initial frame".into()));
        }
        check_frame_shape(&a0, n, "exponential initial frame")?;
        if x.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch("exponential generator must be 2n x 2n".into()));
        }
        check_finite(&x, "exponential generator")?;
        check_finite(&a0, "exponential initial frame")?;
        Ok(Exponential { n, x, a0 })
    }

    pub fn generator(&self) -> &Mat {
        &self.x
    }
}

impl JetProvider for Exponential {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn max_jet_order(&self) -> usize {
        EXACT_JET_ORDER
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Exponential
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let mut v = expm(&(&self.x * t))? * &self.a0;
        let mut values = Vec::with_capacity(order + 1);
        values.push(v.clone());
        for _ in 0..order {
            v = &self.x * v;
            values.push(v.clone());
        }
        Ok(Jet { t, values })
    }
}

/// Tabulated frames with jets from a local degree-6 interpolant.
#[derive(Debug, Clone)]
pub struct Sampled {
    n: usize,
    ts: Vec<f64>,
    frames: Vec<Mat>,
}

const STENCIL_NODES: usize = 7;

impl Sampled {
    pub fn new(ts: Vec<f64>, frames: Vec<Mat>) -> Result<Sampled> {
        if ts.len() < STENCIL_NODES {
            return Err(Error::InvalidSpec(format!("sampled curve needs at least {STENCIL_NODES} points")));
        }
        if ts.len() != frames.len() {
            return Err(Error::InvalidSpec("sampled curve: t and A tables differ in length".into()));
        }
        if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("sampled grid must be finite and strictly increasing".into()));
        }
        let n = frames[0].ncols();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty sampled frame".into()));
        }
        for f in &frames {
            check_frame_shape(f, n, "sampled frame")?;
            check_finite(f, "sampled frame")?;
        }
        Ok(Sampled { n, ts, frames })
    }

    fn stencil_start(&self, t: f64) -> usize {
        let idx = match self.ts.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.ts.len() || (t - self.ts[i - 1]) <= (self.ts[i] - t) {
                    i - 1
                } else {
                    i
                }
            }
        };
        idx.saturating_sub(STENCIL_NODES / 2).min(self.ts.len() - STENCIL_NODES)
    }

    fn step(&self, start: usize) -> f64 {
        0.5 * (self.ts[start + STENCIL_NODES - 1] - self.ts[start]) / (STENCIL_NODES - 1) as f64
    }

    fn interpolate(&self, start: usize, x: f64) -> Mat {
        let nodes = &self.ts[start..start + STENCIL_NODES];
        let mut acc = Mat::zeros(2 * self.n, self.n);
        for (j, &tj) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (k, &tk) in nodes.iter().enumerate() {
                if k != j {
                    w *= (x - tk) / (tj - tk);
                }
            }
            acc += &self.frames[start + j] * w;
        }
        acc
    }

    fn differences(&self, start: usize, t: f64, h: f64) -> [Mat; 5] {
        let f: Vec<Mat> = (-2..=2).map(|m| self.interpolate(start, t + m as f64 * h)).collect();
        let d1 = (&f[0] - &f[1] * 8.0 + &f[3] * 8.0 - &f[4]) / (12.0 * h);
        let d2 = (-&f[0] + &f[1] * 16.0 - &f[2] * 30.0 + &f[3] * 16.0 - &f[4]) / (12.0 * h * h);
        let d3 = (-&f[0] + &f[1] * 2.0 - &f[3] * 2.0 + &f[4]) / (2.0 * h * h * h);
        let d4 = (&f[0] - &f[1] * 4.0 + &f[2] * 6.0 - &f[3] * 4.0 + &f[4]) / (h * h * h * h);
        [f[2].clone(), d1, d2, d3, d4]
    }
}

impl JetProvider for Sampled {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn max_jet_order(&self) -> usize {
        4
    }
    fn kind(&self) -> CurveKind {
        CurveKind::Sampled
    }
    fn domain(&self) -> Option<(f64, f64)> {
        let first = 2.0 * self.step(0);
        let last = 2.0 * self.step(self.ts.len() - STENCIL_NODES);
        Some((self.ts[0] + first, self.ts[self.ts.len() - 1] - last))
    }
    fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let start = self.stencil_start(t);
        let h = self.step(start);
        let (lo, hi) = (self.ts[0], self.ts[self.ts.len() - 1]);
        if t - 2.0 * h < lo - 1e-12 * h || t + 2.0 * h > hi + 1e-12 * h {
            return Err(Error::OutsideDomain { t, lo: lo + 2.0 * h, hi: hi - 2.0 * h });
        }
        let coarse = self.differences(start, t, h);
        let fine = self.differences(start, t, 0.5 * h);
        let mut values = vec![fine[0].clone()];
        for k in 1..=order {
            let gain = if k <= 2 { 16.0 } else { 4.0 };
            values.push((&fine[k] * gain - &coarse[k]) / (gain - 1.0));
        }
        Ok(Jet { t, values })
    }
}
