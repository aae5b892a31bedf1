//! Random forest of CART trees on bootstrap samples.

use ndarray::{ArrayView1, Axis};
use rand::Rng;

use super::cart::{fit_random_tree, DecisionTree, TreeParams};
use super::{depth_param, param, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;
use crate::rng::{derive_seed, rng};

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    /// Each tree sees a bootstrap sample and `floor(sqrt(d))` random features
    /// per node.
    pub fn fit(
        data: &TrainingSet<'_>,
        n_trees: usize,
        max_depth: Option<usize>,
        seed: u64,
    ) -> Self {
        let n = data.len();
        let d = data.x.ncols();
        let params = TreeParams {
            max_depth,
            max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
        };
        let trees = (0..n_trees)
            .map(|t| {
                let tree_seed = derive_seed(seed, &[t as u64]);
                let mut draw = rng(tree_seed);
                let sample: Vec<usize> = (0..n).map(|_| draw.random_range(0..n)).collect();
                let x = data.x.select(Axis(0), &sample);
                let y: Vec<usize> = sample.iter().map(|&i| data.y[i]).collect();
                let boot = TrainingSet::new(x.view(), &y, data.n_classes);
                fit_random_tree(&boot, &params, derive_seed(tree_seed, &[1]))
            })
            .collect();
        RandomForest {
            trees,
            n_classes: data.n_classes,
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

impl Classifier for RandomForest {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (acc, v) in p.iter_mut().zip(tree.leaf_distribution(row)) {
                *acc += v;
            }
        }
        p.iter_mut().for_each(|v| *v /= self.trees.len() as f64);
        p
    }
}

#[derive(Debug, Clone)]
pub struct RandomForestLearner {
    pub tree_counts: Vec<usize>,
    pub depths: Vec<f64>,
}

impl Default for RandomForestLearner {
    fn default() -> Self {
        RandomForestLearner {
            tree_counts: vec![50, 100],
            depths: vec![5.0, f64::INFINITY],
        }
    }
}

impl Learner for RandomForestLearner {
    fn name(&self) -> &str {
        "random_forest"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        self.tree_counts
            .iter()
            .flat_map(|&t| {
                self.depths
                    .iter()
                    .map(move |&d| ParamSet::new(vec![("n_trees", t as f64), ("max_depth", d)]))
            })
            .collect()
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        let n_trees = param(params, "n_trees")? as usize;
        let depth = depth_param(param(params, "max_depth")?);
        Ok(Box::new(RandomForest::fit(data, n_trees, depth, seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::{accuracy, assert_distribution, blobs};

    #[test]
    fn forest_is_seeded_and_accurate() {
        let (x, y) = blobs(100, 0.7, 1);
        let data = TrainingSet::new(x.view(), &y, 2);
        let a = RandomForest::fit(&data, 20, None, 3);
        let b = RandomForest::fit(&data, 20, None, 3);
        for row in x.outer_iter() {
            let p = a.predict_proba(row);
            assert_eq!(p, b.predict_proba(row));
            assert_distribution(&p);
        }
        assert!(accuracy(&a, &x, &y) > 0.95);
        assert_eq!(a.n_trees(), 20);
    }
}
