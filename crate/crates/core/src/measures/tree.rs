//! DCP, TD_P and TD_U from CART trees grown on the whole dataset.

use crate::dataset::Dataset;
use crate::folds::{stratified_kfold_with, SmallClassPolicy};
use crate::metrics::log_loss;
use crate::models::{Classifier, DecisionTree, TrainingSet, TreeParams};
use crate::rng::derive_seed;

/// Cost-complexity penalties tried when pruning.
pub const PRUNING_GRID: [f64; 5] = [0.0, 0.001, 0.005, 0.01, 0.05];
pub const PRUNING_FOLDS: usize = 3;

#[derive(Debug, Clone)]
pub struct TreeMeasures {
    pub dcp: Vec<f64>,
    pub td_pruned: Vec<f64>,
    pub td_unpruned: Vec<f64>,
    pub unpruned: DecisionTree,
    pub pruned: DecisionTree,
    /// Penalty chosen by cross-validation.
    pub alpha: f64,
}

/// Grows an unpruned tree on all instances and a pruned copy whose penalty
/// minimizes 3-fold cross-validated log-loss over [`PRUNING_GRID`] (ties to
/// the smaller penalty).
///
/// `DCP(x) = 1 - (x's class count in its leaf) / (leaf size)`, taken from
/// the unpruned tree unless `dcp_from_pruned`. `TD(x)` is the depth of x's
/// leaf over the deepest leaf, 0 for a single-leaf tree.
pub fn measure_tree_based(dataset: &Dataset, seed: u64, dcp_from_pruned: bool) -> TreeMeasures {
    let data = TrainingSet::new(dataset.features(), dataset.labels(), dataset.n_classes());
    let unpruned = DecisionTree::fit(&data, &TreeParams::default(), None);
    let alpha = select_pruning_penalty(dataset, seed);
    let pruned = unpruned.prune(alpha);

    let depth_ratio = |tree: &DecisionTree| -> Vec<f64> {
        let max = tree.max_leaf_depth();
        dataset
            .features()
            .outer_iter()
            .map(|row| {
                if max == 0 {
                    0.0
                } else {
                    tree.nodes()[tree.leaf_of(row)].depth as f64 / max as f64
                }
            })
            .collect()
    };
    let disjunct_tree = if dcp_from_pruned { &pruned } else { &unpruned };
    let dcp = dataset
        .features()
        .outer_iter()
        .zip(dataset.labels())
        .map(|(row, &l)| {
            let leaf = &disjunct_tree.nodes()[disjunct_tree.leaf_of(row)];
            1.0 - leaf.counts[l] as f64 / leaf.size() as f64
        })
        .collect();

    TreeMeasures {
        dcp,
        td_pruned: depth_ratio(&pruned),
        td_unpruned: depth_ratio(&unpruned),
        unpruned,
        pruned,
        alpha,
    }
}

fn select_pruning_penalty(dataset: &Dataset, seed: u64) -> f64 {
    let Ok(folds) = stratified_kfold_with(
        dataset.labels(),
        PRUNING_FOLDS,
        derive_seed(seed, &[0x7d]),
        SmallClassPolicy::Reduce,
    ) else {
        return PRUNING_GRID[0];
    };
    let x = dataset.features();
    let mut total = [0.0; PRUNING_GRID.len()];
    for fold in 0..folds.k() {
        let train = folds.train_indices(fold);
        let tx = x.select(ndarray::Axis(0), &train);
        let ty: Vec<usize> = train.iter().map(|&i| dataset.label(i)).collect();
        let tree = DecisionTree::fit(
            &TrainingSet::new(tx.view(), &ty, dataset.n_classes()),
            &TreeParams::default(),
            None,
        );
        for (slot, &alpha) in total.iter_mut().zip(PRUNING_GRID.iter()) {
            let pruned = tree.prune(alpha);
            *slot += folds
                .test_indices(fold)
                .iter()
                .map(|&i| log_loss(pruned.predict_proba(x.row(i))[dataset.label(i)]))
                .sum::<f64>();
        }
    }
    let mut best = 0;
    for (i, &v) in total.iter().enumerate() {
        if v < total[best] {
            best = i;
        }
    }
    PRUNING_GRID[best]
}
