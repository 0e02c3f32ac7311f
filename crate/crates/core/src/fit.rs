//! Small dense Levenberg-Marquardt solver with forward-difference Jacobians.

use nalgebra::DVector;

use crate::mats::Mat;

#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub x: Vec<f64>,
    pub cost: f64,
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimizes `||r(x)||` starting from `x0`; stops once the cost is below `target`.
pub(crate) fn levenberg_marquardt<F>(r: F, x0: &[f64], target: f64, max_iter: usize) -> Fit
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut c = cost(&res);
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        if c <= target || !c.is_finite() {
            break;
        }
        let m = res.len();
        let mut jac = Mat::zeros(m, p);
        for j in 0..p {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xh = x.clone();
            xh[j] += h;
            let rh = r(&xh);
            for i in 0..m {
                jac[(i, j)] = (rh[i] - res[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&res);
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for j in 0..p {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = r(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let small = step.norm() <= 1e-15 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
                x = trial;
                res = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !small;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Fit { x, cost: c }
}
