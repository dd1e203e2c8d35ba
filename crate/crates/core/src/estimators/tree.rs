//! CART-style decision tree with greedy splits.
//!
//! Regression nodes split on squared-error reduction, classification nodes
//! on Gini impurity. Tie-breaks are deterministic: the scan runs over
//! features in ascending index order and thresholds in ascending value
//! order, and only a strictly better split replaces the incumbent.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    RegressionLeaf {
        value: f64,
    },
    ClassLeaf {
        probabilities: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Walks the tree; rows go left when `x[feature] <= threshold`.
    pub fn eval(&self, x: &[f64]) -> &TreeNode {
        match self {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
            leaf => leaf,
        }
    }

    pub fn regression_value(&self, x: &[f64]) -> f64 {
        match self.eval(x) {
            TreeNode::RegressionLeaf { value } => *value,
            _ => f64::NAN,
        }
    }

    pub fn class_probabilities(&self, x: &[f64]) -> Vec<f64> {
        match self.eval(x) {
            TreeNode::ClassLeaf { probabilities } => probabilities.clone(),
            _ => Vec::new(),
        }
    }
}

pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf_size: usize,
}

enum TargetView<'a> {
    Regression(&'a [f64]),
    Classification { labels: &'a [usize], n_classes: usize },
}

/// Fits a regression tree on `targets`.
pub fn fit_regression_tree(
    features: &DMatrix<f64>,
    targets: &[f64],
    params: &TreeParams,
) -> Result<TreeNode> {
    check_params(params)?;
    let rows: Vec<usize> = (0..features.nrows()).collect();
    Ok(build(
        features,
        &TargetView::Regression(targets),
        &rows,
        params.max_depth,
        params,
    ))
}

/// Fits a classification tree on class labels.
pub fn fit_classification_tree(
    features: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    params: &TreeParams,
) -> Result<TreeNode> {
    check_params(params)?;
    let rows: Vec<usize> = (0..features.nrows()).collect();
    Ok(build(
        features,
        &TargetView::Classification { labels, n_classes },
        &rows,
        params.max_depth,
        params,
    ))
}

fn check_params(params: &TreeParams) -> Result<()> {
    if params.max_depth == 0 {
        return Err(CsgeError::InvalidHyperParams(
            "tree max_depth must be at least 1".into(),
        ));
    }
    if params.min_leaf_size == 0 {
        return Err(CsgeError::InvalidHyperParams(
            "tree min_leaf_size must be at least 1".into(),
        ));
    }
    Ok(())
}

fn leaf(view: &TargetView, rows: &[usize]) -> TreeNode {
    match view {
        TargetView::Regression(targets) => {
            let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / rows.len() as f64;
            TreeNode::RegressionLeaf { value: mean }
        }
        TargetView::Classification { labels, n_classes } => {
            let mut counts = vec![0usize; *n_classes];
            for &r in rows {
                counts[labels[r]] += 1;
            }
            let total = rows.len() as f64;
            TreeNode::ClassLeaf {
                probabilities: counts.iter().map(|&c| c as f64 / total).collect(),
            }
        }
    }
}

fn impurity(view: &TargetView, rows: &[usize]) -> f64 {
    match view {
        TargetView::Regression(targets) => {
            let n = rows.len() as f64;
            let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n;
            rows.iter().map(|&r| (targets[r] - mean).powi(2)).sum()
        }
        TargetView::Classification { labels, n_classes } => {
            let mut counts = vec![0usize; *n_classes];
            for &r in rows {
                counts[labels[r]] += 1;
            }
            let n = rows.len() as f64;
            let gini = 1.0
                - counts
                    .iter()
                    .map(|&c| {
                        let p = c as f64 / n;
                        p * p
                    })
                    .sum::<f64>();
            gini * n
        }
    }
}

fn is_pure(view: &TargetView, rows: &[usize]) -> bool {
    match view {
        TargetView::Regression(targets) => {
            rows.windows(2).all(|w| targets[w[0]] == targets[w[1]])
        }
        TargetView::Classification { labels, .. } => {
            rows.windows(2).all(|w| labels[w[0]] == labels[w[1]])
        }
    }
}

fn build(
    features: &DMatrix<f64>,
    view: &TargetView,
    rows: &[usize],
    depth_left: usize,
    params: &TreeParams,
) -> TreeNode {
    if depth_left == 0 || rows.len() < 2 * params.min_leaf_size || is_pure(view, rows) {
        return leaf(view, rows);
    }

    let parent_impurity = impurity(view, rows);
    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)

    for feature in 0..features.ncols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| features[(r, feature)]).collect();
        values.sort_unstable_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| features[(r, feature)] <= threshold);
            if left.len() < params.min_leaf_size || right.len() < params.min_leaf_size {
                continue;
            }
            let decrease = parent_impurity - impurity(view, &left) - impurity(view, &right);
            if best.is_none_or(|(incumbent, _, _)| decrease > incumbent + 1e-12) {
                best = Some((decrease, feature, threshold));
            }
        }
    }

    match best {
        Some((decrease, feature, threshold)) if decrease > 1e-12 => {
            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| features[(r, feature)] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(build(features, view, &left, depth_left - 1, params)),
                right: Box::new(build(features, view, &right, depth_left - 1, params)),
            }
        }
        _ => leaf(view, rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_depth: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_leaf_size: 1,
        }
    }

    #[test]
    fn depth_one_stump_on_step_data_splits_at_the_step() {
        let features = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let targets = [0.0, 0.0, 10.0, 10.0];
        let tree = fit_regression_tree(&features, &targets, &params(1)).unwrap();
        match &tree {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 1.5).abs() < 1e-12);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.regression_value(&[0.5]), 0.0);
        assert_eq!(tree.regression_value(&[2.5]), 10.0);
    }

    #[test]
    fn pure_node_stays_a_leaf() {
        let features = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        let targets = [5.0, 5.0, 5.0];
        let tree = fit_regression_tree(&features, &targets, &params(5)).unwrap();
        assert_eq!(tree, TreeNode::RegressionLeaf { value: 5.0 });
    }

    #[test]
    fn deeper_trees_fit_piecewise_data() {
        let xs: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let features = DMatrix::from_column_slice(32, 1, &xs);
        let targets: Vec<f64> = xs.iter().map(|&x| (x / 8.0).floor()).collect();
        let tree = fit_regression_tree(&features, &targets, &params(6)).unwrap();
        for (x, y) in xs.iter().zip(&targets) {
            assert_eq!(tree.regression_value(&[*x]), *y);
        }
    }

    #[test]
    fn classification_leaves_hold_distributions() {
        let features = DMatrix::from_column_slice(6, 1, &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let labels = [0, 0, 1, 1, 1, 1];
        let tree = fit_classification_tree(&features, &labels, 2, &params(1)).unwrap();
        let p_left = tree.class_probabilities(&[1.0]);
        let p_right = tree.class_probabilities(&[11.0]);
        assert!((p_left.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p_right.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p_right[1] > p_left[1]);
    }

    #[test]
    fn min_leaf_size_blocks_small_splits() {
        let features = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let targets = [0.0, 0.0, 0.0, 10.0];
        let tree = fit_regression_tree(
            &features,
            &targets,
            &TreeParams {
                max_depth: 3,
                min_leaf_size: 2,
            },
        )
        .unwrap();
        // only the 2/2 split is admissible
        match tree {
            TreeNode::Split { threshold, .. } => assert!((threshold - 1.5).abs() < 1e-12),
            other => panic!("expected a split, got {other:?}"),
        }
    }
}
