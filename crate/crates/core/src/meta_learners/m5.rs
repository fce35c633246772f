//! M5 model trees.
//!
//! Splits maximise the standard-deviation reduction of the labels. Every
//! node carries a linear model; when pruning is on, node models are
//! simplified by greedy term elimination and subtrees are collapsed when the
//! node model's estimated error is no worse. Predictions are smoothed on the
//! way back up from the leaf.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linear::{fit_ols, LinearModel};
use crate::error::{Error, Result};
use crate::stats::pop_std;

/// Growth stops once a node's label standard deviation falls below this
/// fraction of the root's.
pub const SD_STOP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M5Params {
    pub min_leaf: usize,
    pub smoothing_k: f64,
    pub prune: bool,
}

impl Default for M5Params {
    fn default() -> Self {
        M5Params {
            min_leaf: 4,
            smoothing_k: 15.0,
            prune: true,
        }
    }
}

impl M5Params {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf < 2 {
            return Err(Error::invalid("m5 min_leaf must be at least 2"));
        }
        if !(self.smoothing_k.is_finite() && self.smoothing_k >= 0.0) {
            return Err(Error::invalid("m5 smoothing_k must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum M5Node {
    Leaf {
        n: usize,
        model: LinearModel,
    },
    Split {
        n: usize,
        feature: usize,
        threshold: f64,
        sdr: f64,
        model: LinearModel,
        left: Box<M5Node>,
        right: Box<M5Node>,
    },
}

impl M5Node {
    pub fn n(&self) -> usize {
        match self {
            M5Node::Leaf { n, .. } | M5Node::Split { n, .. } => *n,
        }
    }

    pub fn model(&self) -> &LinearModel {
        match self {
            M5Node::Leaf { model, .. } | M5Node::Split { model, .. } => model,
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            M5Node::Leaf { .. } => 1,
            M5Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M5Tree {
    pub params: M5Params,
    pub root: M5Node,
}

/// Mean absolute residual inflated by (n + v) / (n - v) for v parameters.
fn estimated_error(mean_abs: f64, n: usize, v: usize) -> f64 {
    if n > v {
        mean_abs * (n + v) as f64 / (n - v) as f64
    } else {
        f64::INFINITY
    }
}

struct NodeFit {
    model: LinearModel,
    error: f64,
}

struct Grower<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: &'a M5Params,
    sd_floor: f64,
}

impl Grower<'_> {
    fn fit_subset(&self, idx: &[usize], attrs: &[usize]) -> Result<(LinearModel, f64)> {
        let sub = DMatrix::from_fn(idx.len(), attrs.len(), |r, c| self.x[(idx[r], attrs[c])]);
        let ys = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        let fitted = if attrs.is_empty() {
            LinearModel::constant(ys.mean(), 0)
        } else {
            fit_ols(&sub, &ys)?
        };
        let mut coef = vec![0.0; self.x.ncols()];
        for (c, &a) in attrs.iter().enumerate() {
            coef[a] = fitted.coef[c];
        }
        let model = LinearModel {
            intercept: fitted.intercept,
            coef,
            ridge: fitted.ridge,
        };
        let mae = idx
            .iter()
            .map(|&i| (self.y[i] - model.predict(&row(self.x, i))).abs())
            .sum::<f64>()
            / idx.len() as f64;
        Ok((model, estimated_error(mae, idx.len(), attrs.len() + 1)))
    }

    fn node_model(&self, idx: &[usize]) -> Result<NodeFit> {
        let all: Vec<usize> = (0..self.x.ncols()).collect();
        if !self.params.prune {
            let (model, error) = self.fit_subset(idx, &all)?;
            return Ok(NodeFit { model, error });
        }
        // Attributes constant within the node cannot contribute.
        let mut attrs: Vec<usize> = all
            .into_iter()
            .filter(|&a| {
                let first = self.x[(idx[0], a)];
                idx.iter().any(|&i| self.x[(i, a)] != first)
            })
            .collect();
        let (mut model, mut error) = self.fit_subset(idx, &attrs)?;
        while !attrs.is_empty() {
            let mut best: Option<(usize, LinearModel, f64)> = None;
            for drop in 0..attrs.len() {
                let cand: Vec<usize> = attrs.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, &a)| a).collect();
                let (m, e) = self.fit_subset(idx, &cand)?;
                if best.as_ref().is_none_or(|b| e < b.2) {
                    best = Some((drop, m, e));
                }
            }
            let (drop, m, e) = best.expect("at least one candidate");
            if e <= error || error.is_infinite() {
                attrs.remove(drop);
                model = m;
                error = e;
            } else {
                break;
            }
        }
        Ok(NodeFit { model, error })
    }

    fn grow(&self, idx: &[usize]) -> Result<(M5Node, f64)> {
        let n = idx.len();
        let own = self.node_model(idx)?;
        let labels: Vec<f64> = idx.iter().map(|&i| self.y[i]).collect();
        let sd = pop_std(&labels);
        let split = if n < 2 * self.params.min_leaf || sd <= self.sd_floor {
            None
        } else {
            best_split(self.x, self.y, idx, self.params.min_leaf)
        };
        let Some(split) = split else {
            return Ok((leaf(n, own.model), own.error));
        };
        let (li, ri): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[(i, split.feature)] <= split.threshold);
        let (left, le) = self.grow(&li)?;
        let (right, re) = self.grow(&ri)?;
        let subtree_error = (li.len() as f64 * le + ri.len() as f64 * re) / n as f64;
        if self.params.prune && own.error <= subtree_error {
            return Ok((leaf(n, own.model), own.error));
        }
        Ok((
            M5Node::Split {
                n,
                feature: split.feature,
                threshold: split.threshold,
                sdr: split.sdr,
                model: own.model,
                left: Box::new(left),
                right: Box::new(right),
            },
            subtree_error,
        ))
    }
}

fn leaf(n: usize, model: LinearModel) -> M5Node {
    M5Node::Leaf { n, model }
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub sdr: f64,
}

/// Standard-deviation reduction of splitting `parent` into `left` and `right`.
pub fn sdr(parent: &[f64], left: &[f64], right: &[f64]) -> f64 {
    let n = parent.len() as f64;
    pop_std(parent) - left.len() as f64 / n * pop_std(left) - right.len() as f64 / n * pop_std(right)
}

/// Best split of the rows `idx` over all features and all cut points that
/// leave at least `min_leaf` rows on each side. Only positive reductions
/// count; the first maximum in (feature, cut) order wins.
pub fn best_split(x: &DMatrix<f64>, y: &[f64], idx: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n = idx.len();
    if min_leaf == 0 || n < 2 * min_leaf {
        return None;
    }
    let parent: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut best: Option<SplitChoice> = None;
    for feature in 0..x.ncols() {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| x[(a, feature)].total_cmp(&x[(b, feature)]).then(a.cmp(&b)));
        let sorted_y: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        for k in min_leaf..=n - min_leaf {
            let lo = x[(order[k - 1], feature)];
            let hi = x[(order[k], feature)];
            if lo >= hi {
                continue;
            }
            let reduction = sdr(&parent, &sorted_y[..k], &sorted_y[k..]);
            if reduction > 0.0 && best.is_none_or(|b| reduction > b.sdr) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    sdr: reduction,
                });
            }
        }
    }
    best
}

impl M5Tree {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, params: &M5Params) -> Result<M5Tree> {
        params.validate()?;
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::invalid("m5 on zero rows"));
        }
        let labels: Vec<f64> = y.iter().copied().collect();
        let grower = Grower {
            x,
            y: &labels,
            params,
            sd_floor: SD_STOP_FRACTION * pop_std(&labels),
        };
        let idx: Vec<usize> = (0..x.nrows()).collect();
        let (root, _) = grower.grow(&idx)?;
        Ok(M5Tree {
            params: params.clone(),
            root,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_node(&self.root, x)
    }

    fn predict_node(&self, node: &M5Node, x: &[f64]) -> f64 {
        match node {
            M5Node::Leaf { model, .. } => model.predict(x),
            M5Node::Split {
                feature,
                threshold,
                model,
                left,
                right,
                ..
            } => {
                let child = if x[*feature] <= *threshold { left } else { right };
                let p = self.predict_node(child, x);
                let k = self.params.smoothing_k;
                if k > 0.0 {
                    let nc = child.n() as f64;
                    (nc * p + k * model.predict(x)) / (nc + k)
                } else {
                    p
                }
            }
        }
    }
}
