//! Single-hidden-layer feedforward networks trained as Extreme Learning
//! Machines: input weights and biases are drawn at random and frozen, the
//! output weights are the minimum-norm least-squares fit of the hidden-layer
//! activations to the targets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, REL_RANK_TOL};
use crate::seed;

/// Logistic activation, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A trained network. Weight arrays are stored flat so the JSON dump is
/// readable outside Rust; `input_weights` is row-major `hidden × input_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    pub input_weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub output_weights: Vec<f64>,
}

impl ElmModel {
    /// Draws the random hidden layer: weights ~ U[-1, 1], biases ~ U[0, 1].
    /// Output weights start at zero.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Result<ElmModel> {
        if hidden < 1 {
            return Err(Error::invalid("hidden-neuron count must be at least 1"));
        }
        let mut rng = seed::rng(seed);
        let input_weights = (0..hidden * input_dim)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let biases = (0..hidden).map(|_| rng.random_range(0.0..=1.0)).collect();
        Ok(ElmModel {
            input_dim,
            hidden,
            seed,
            input_weights,
            biases,
            output_weights: vec![0.0; hidden],
        })
    }

    /// Trains on a numeric design matrix (rows × input_dim).
    pub fn fit(x: &DMatrix<f64>, targets: &DVector<f64>, hidden: usize, seed: u64) -> Result<ElmModel> {
        if x.nrows() == 0 {
            return Err(Error::invalid("cannot train on zero rows"));
        }
        if x.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: targets.len(),
            });
        }
        let mut model = ElmModel::init(x.ncols(), hidden, seed)?;
        let h = model.hidden_matrix(x)?;
        assert!(
            h.iter().all(|v| v.is_finite()),
            "hidden activations must be finite for finite inputs"
        );
        let sol = lstsq_min_norm(&h, targets, REL_RANK_TOL)?;
        model.output_weights = sol.coef.iter().copied().collect();
        Ok(model)
    }

    fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.hidden, self.input_dim, &self.input_weights)
    }

    /// Hidden-layer activations `H[i][j] = g(w_j · x_i + b_j)`.
    pub fn hidden_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.ncols(),
            });
        }
        let mut h = x * self.weight_matrix().transpose();
        for (j, mut col) in h.column_iter_mut().enumerate() {
            let b = self.biases[j];
            col.apply(|v| *v = sigmoid(*v + b));
        }
        Ok(h)
    }

    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
        let h = self.hidden_matrix(rows)?;
        let beta = DVector::from_column_slice(&self.output_weights);
        Ok((h * beta).iter().copied().collect())
    }
}

/// Trains on a normalized dataset.
pub fn train_elm(train: &Dataset, hidden: usize, seed: u64) -> Result<ElmModel> {
    if !train.is_normalized() {
        return Err(Error::NotNormalized(train.name.clone()));
    }
    ElmModel::fit(&train.feature_matrix()?, &train.target_vector(), hidden, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseScore {
    pub value: f64,
    pub n: usize,
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<RmseScore> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::invalid("rmse of an empty sequence"));
    }
    let n = targets.len();
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(RmseScore {
        value: (sse / n as f64).sqrt(),
        n,
    })
}
