use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// 1-nearest-neighbour under Euclidean distance on scaled features. Ties go
/// to the earliest training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbor {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl NearestNeighbor {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        NearestNeighbor {
            points: x.row_iter().map(|r| r.iter().copied().collect()).collect(),
            labels: y.iter().copied().collect(),
        }
    }

    pub fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    pub fn predict(&self, q: &[f64]) -> f64 {
        self.labels[self.nearest(q)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_points_are_reproduced_and_ties_pick_first() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let y = DVector::from_vec(vec![5.0, 7.0, 9.0]);
        let m = NearestNeighbor::fit(&x, &y);
        assert_eq!(m.predict(&[0.0, 0.0]), 5.0);
        assert_eq!(m.predict(&[1.0, 0.0]), 7.0);
        assert_eq!(m.predict(&[0.5, 0.0]), 5.0);
        assert_eq!(m.predict(&[0.9, 0.3]), 7.0);
    }
}
