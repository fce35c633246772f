//! ε-insensitive support-vector regression trained by SMO.
//!
//! The dual is posed over 2n variables (one pair per example) and solved
//! with second-order working-set selection. Labels are min-max scaled to
//! [0, 1] before training and mapped back on prediction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RBF_GAMMAS: [f64; 3] = [0.01, 0.1, 1.0];

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Polynomial { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Polynomial { degree, coef0 } => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + coef0).powi(degree as i32)
            }
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
}

impl SvrParams {
    pub fn polynomial() -> Self {
        SvrParams {
            kernel: Kernel::Polynomial { degree: 1, coef0: 0.0 },
            c: 1.0,
            epsilon: 1e-3,
            tolerance: 1e-3,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        SvrParams {
            kernel: Kernel::Rbf { gamma },
            ..SvrParams::polynomial()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.c) || !pos(self.tolerance) || !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("svr needs c > 0, tolerance > 0 and epsilon >= 0"));
        }
        match self.kernel {
            Kernel::Rbf { gamma } if !pos(gamma) => Err(Error::invalid("rbf gamma must be positive")),
            Kernel::Polynomial { degree: 0, .. } => Err(Error::invalid("polynomial degree must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub support: Vec<Vec<f64>>,
    /// Dual coefficients α_i − α*_i, one per training example.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub label_min: f64,
    pub label_max: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, params: &SvrParams) -> Result<SvrModel> {
        params.validate()?;
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::invalid("svr on zero rows"));
        }
        let points: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        let (lo, hi) = (y.min(), y.max());
        let n = points.len();
        if hi <= lo {
            return Ok(SvrModel {
                params: params.clone(),
                support: points,
                coef: vec![0.0; n],
                rho: 0.0,
                label_min: lo,
                label_max: hi,
                iterations: 0,
            });
        }
        let scaled: Vec<f64> = y.iter().map(|v| (v - lo) / (hi - lo)).collect();
        let k = DMatrix::from_fn(n, n, |i, j| params.kernel.eval(&points[i], &points[j]));
        let sol = smo(&k, &scaled, params)?;
        Ok(SvrModel {
            params: params.clone(),
            support: points,
            coef: sol.coef,
            rho: sol.rho,
            label_min: lo,
            label_max: hi,
            iterations: sol.iterations,
        })
    }

    /// Decision value in scaled label units.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, &c)| c * self.params.kernel.eval(s, x))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.label_max <= self.label_min {
            return self.label_min;
        }
        self.label_min + self.decision(x) * (self.label_max - self.label_min)
    }
}

struct SmoSolution {
    coef: Vec<f64>,
    rho: f64,
    iterations: usize,
}

/// Solves min ½ aᵀQa + pᵀa, Σ s_t a_t = 0, 0 ≤ a_t ≤ C over t in 0..2n.
fn smo(k: &DMatrix<f64>, y: &[f64], params: &SvrParams) -> Result<SmoSolution> {
    let n = y.len();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |t: usize, u: usize| sign(t) * sign(u) * k[(t % n, u % n)];
    let qd: Vec<f64> = (0..l).map(|t| k[(t % n, t % n)]).collect();

    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    loop {
        // Working-set selection.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let v = if sign(t) > 0.0 {
                (!upper(alpha[t])).then(|| -grad[t])
            } else {
                (!lower(alpha[t])).then(|| grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..l {
            let (eligible, gv) = if sign(t) > 0.0 {
                (!lower(alpha[t]), grad[t])
            } else {
                (!upper(alpha[t]), -grad[t])
            };
            if !eligible {
                continue;
            }
            gmax2 = gmax2.max(gv);
            let Some(i) = i_sel else { continue };
            let diff = gmax + gv;
            if diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * sign(i) * sign(t) * q(i, t);
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if gmax + gmax2 < params.tolerance {
            break;
        }
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::Numerical("svr solver did not converge".into()));
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = qd[i] + qd[j] + 2.0 * qij;
            let delta = (-grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * qij;
            let delta = (grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Bias from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if upper(alpha[t]) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    let coef = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    Ok(SmoSolution { coef, rho, iterations })
}
