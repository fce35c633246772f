use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, with_intercept, REL_RANK_TOL};

/// Ridge penalty used when the design matrix is rank deficient. The
/// intercept is never penalised.
pub const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// True when the ridge fallback was used.
    pub ridge: bool,
}

impl LinearModel {
    pub fn constant(value: f64, dim: usize) -> Self {
        LinearModel {
            intercept: value,
            coef: vec![0.0; dim],
            ridge: false,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Ordinary least squares with an intercept.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearModel> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::invalid("least squares on zero rows"));
    }
    let a = with_intercept(x);
    let sol = lstsq_min_norm(&a, y, REL_RANK_TOL)?;
    let (beta, ridge) = if sol.rank == a.ncols() {
        (sol.coef, false)
    } else {
        (ridge_solve(&a, y).unwrap_or(sol.coef), true)
    };
    Ok(LinearModel {
        intercept: beta[0],
        coef: beta.iter().skip(1).copied().collect(),
        ridge,
    })
}

fn ridge_solve(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let mut gram = a.transpose() * a;
    for j in 1..gram.ncols() {
        gram[(j, j)] += RIDGE_LAMBDA;
    }
    let rhs = a.transpose() * y;
    let beta = gram.cholesky()?.solve(&rhs);
    beta.iter().all(|v| v.is_finite()).then_some(beta)
}
