//! Dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `REL_RANK_TOL * sigma_max` are treated as zero.
pub const REL_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub coef: DVector<f64>,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a x ≈ b` via the SVD.
///
/// Singular values `σ < rel_tol · σ_max` are dropped, which makes the result
/// the pseudoinverse solution for rank-deficient or underdetermined systems.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Result<LstsqSolution> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    if a.ncols() == 0 {
        return Ok(LstsqSolution {
            coef: DVector::zeros(0),
            rank: 0,
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in least-squares system".into()));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;

    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_tol * sigma_max;
    let utb = u.tr_mul(b);
    let mut scaled = DVector::zeros(sigma.len());
    let mut rank = 0;
    for (k, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            scaled[k] = utb[k] / s;
            rank += 1;
        }
    }
    let coef = v_t.tr_mul(&scaled);
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite least-squares coefficients".into()));
    }
    Ok(LstsqSolution { coef, rank })
}

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    out.columns_mut(1, x.ncols()).copy_from(x);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_full_rank_is_exact_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let sol = lstsq_min_norm(&a, &b, REL_RANK_TOL).unwrap();
        assert_eq!(sol.rank, 2);
        assert!((sol.coef[0] - 0.8).abs() < 1e-12);
        assert!((sol.coef[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_gives_minimum_norm_split() {
        // x1 = x2, y = 2 x1: min-norm puts weight 1 on each copy.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let sol = lstsq_min_norm(&a, &b, REL_RANK_TOL).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.coef[0] - 1.0).abs() < 1e-12);
        assert!((sol.coef[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_system() {
        // one equation x + y = 2 -> (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let sol = lstsq_min_norm(&a, &b, REL_RANK_TOL).unwrap();
        assert!((sol.coef[0] - 1.0).abs() < 1e-12);
        assert!((sol.coef[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatch_and_nan() {
        let a = DMatrix::zeros(3, 2);
        assert!(lstsq_min_norm(&a, &DVector::zeros(2), REL_RANK_TOL).is_err());
        let mut a = DMatrix::from_element(2, 2, 1.0);
        a[(0, 0)] = f64::NAN;
        assert!(lstsq_min_norm(&a, &DVector::zeros(2), REL_RANK_TOL).is_err());
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let a = DMatrix::zeros(3, 2);
        let sol = lstsq_min_norm(&a, &DVector::from_vec(vec![1.0, 2.0, 3.0]), REL_RANK_TOL).unwrap();
        assert_eq!(sol.rank, 0);
        assert!(sol.coef.iter().all(|&c| c == 0.0));
    }
}
