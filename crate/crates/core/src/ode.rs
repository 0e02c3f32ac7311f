//! Fixed-step Runge-Kutta tables with cubic Hermite dense output.

use crate::error::{Error, Result};
use crate::mats::Mat;

pub(crate) fn rk4_step<F>(f: &F, t: f64, y: &Mat, h: f64) -> Result<Mat>
where
    F: Fn(f64, &Mat) -> Result<Mat>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Cubic Hermite value and derivative on `[t0, t0 + h]` at offset `s = t - t0`.
pub(crate) fn hermite(h: f64, s: f64, y0: &Mat, d0: &Mat, y1: &Mat, d1: &Mat) -> (Mat, Mat) {
    let u = s / h;
    let (u2, u3) = (u * u, u * u * u);
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    let value = y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h);
    let g00 = (6.0 * u2 - 6.0 * u) / h;
    let g10 = 3.0 * u2 - 4.0 * u + 1.0;
    let g01 = (-6.0 * u2 + 6.0 * u) / h;
    let g11 = 3.0 * u2 - 2.0 * u;
    let deriv = y0 * g00 + d0 * g10 + y1 * g01 + d1 * g11;
    (value, deriv)
}

/// Solution values and rates on a grid `anchor + k h`, closed off by nodes placed
/// exactly at the ends of the requested span.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub h: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<Mat>,
    pub rates: Vec<Mat>,
}

fn grid(anchor: f64, span: (f64, f64), h: f64) -> Vec<f64> {
    let mut back = Vec::new();
    let mut k = 1.0;
    while anchor - k * h > span.0 + 1e-9 * h {
        back.push(anchor - k * h);
        k += 1.0;
    }
    if anchor > span.0 {
        back.push(span.0);
    }
    back.reverse();
    let mut nodes = back;
    nodes.push(anchor);
    let mut k = 1.0;
    while anchor + k * h < span.1 - 1e-9 * h {
        nodes.push(anchor + k * h);
        k += 1.0;
    }
    if anchor < span.1 {
        nodes.push(span.1);
    }
    nodes
}

impl Table {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Index of the cell `[nodes[i], nodes[i+1]]` containing t (clamped).
    pub fn cell(&self, t: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.len() - 2)
    }

    /// Index of the node nearest to t.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.cell(t);
        if (t - self.nodes[i]).abs() <= (self.nodes[i + 1] - t).abs() {
            i
        } else {
            i + 1
        }
    }

    pub fn dense(&self, t: f64) -> (Mat, Mat) {
        let i = self.cell(t);
        let h = self.nodes[i + 1] - self.nodes[i];
        hermite(h, t - self.nodes[i], &self.values[i], &self.rates[i], &self.values[i + 1], &self.rates[i + 1])
    }

    fn build<F>(f: &F, anchor: f64, span: (f64, f64), y0: &Mat, h: f64) -> Result<Table>
    where
        F: Fn(f64, &Mat) -> Result<Mat>,
    {
        let nodes = grid(anchor, span, h);
        let a = nodes.iter().position(|&x| x == anchor).expect("anchor is a node");
        let mut values = vec![Mat::zeros(0, 0); nodes.len()];
        values[a] = y0.clone();
        for i in (0..a).rev() {
            values[i] = rk4_step(f, nodes[i + 1], &values[i + 1], nodes[i] - nodes[i + 1])?;
        }
        for i in a + 1..nodes.len() {
            values[i] = rk4_step(f, nodes[i - 1], &values[i - 1], nodes[i] - nodes[i - 1])?;
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::IntegrationFailure("non-finite state".into()));
        }
        let rates = nodes.iter().zip(&values).map(|(&t, v)| f(t, v)).collect::<Result<Vec<_>>>()?;
        Ok(Table { h, nodes, values, rates })
    }

    /// Integrates from `anchor` over `span`, halving the step until two successive
    /// tables agree at shared nodes to `target` relative to the state scale.
    pub fn integrate<F>(f: &F, anchor: f64, span: (f64, f64), y0: &Mat, h0: f64, target: f64, max_nodes: usize) -> Result<Table>
    where
        F: Fn(f64, &Mat) -> Result<Mat>,
    {
        if !(span.0 <= anchor && anchor <= span.1) || !(h0 > 0.0) {
            return Err(Error::IntegrationFailure("anchor outside the integration span".into()));
        }
        let mut coarse = Table::build(f, anchor, span, y0, h0)?;
        loop {
            let h = coarse.h * 0.5;
            if coarse.len() * 2 > max_nodes {
                return Err(Error::IntegrationFailure(format!("step control did not converge down to h = {h:.3e}")));
            }
            let fine = Table::build(f, anchor, span, y0, h)?;
            let scale = fine.values.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
            let mut diff = 0.0f64;
            for (t, v) in coarse.nodes.iter().zip(&coarse.values) {
                let j = fine.nearest(*t);
                diff = diff.max((v - &fine.values[j]).norm());
            }
            if diff <= target * scale {
                return Ok(fine);
            }
            coarse = fine;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_table_matches_closed_form() {
        // y = (x, v), x'' = -x
        let f = |_t: f64, y: &Mat| Ok(Mat::from_column_slice(2, 1, &[y[1], -y[0]]));
        let y0 = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        let table = Table::integrate(&f, 0.2, (-1.0, 1.0), &y0, 0.1, 1e-10, 1 << 20).unwrap();
        for &t in &[-0.93, -0.2, 0.2, 0.61, 0.999] {
            let (v, d) = table.dense(t);
            assert!((v[0] - (t - 0.2f64).sin()).abs() < 1e-8);
            assert!((d[0] - (t - 0.2f64).cos()).abs() < 1e-7);
        }
    }
}
