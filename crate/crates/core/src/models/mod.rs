//! Classifiers used by the hardness measures and the evaluation pool.
//!
//! Every model is fitted from a [`TrainingSet`] and predicts a probability
//! distribution over all classes of the dataset, including classes absent from
//! its training data.

use std::fmt;

use ndarray::{ArrayView1, ArrayView2};

use crate::error::Result;

pub mod boosting;
pub mod cart;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod naive_bayes;

pub use boosting::{BoostedStumps, BoostedStumpsLearner};
pub use cart::{DecisionTree, DecisionTreeLearner, TreeParams};
pub use forest::{RandomForest, RandomForestLearner};
pub use knn::{KnnClassifier, KnnLearner};
pub use linear::{LinearSvm, LinearSvmLearner, LogisticRegression, LogisticRegressionLearner};
pub use naive_bayes::{GaussianNaiveBayes, NaiveBayesLearner};

#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [usize],
    pub n_classes: usize,
}

impl<'a> TrainingSet<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [usize], n_classes: usize) -> Self {
        debug_assert_eq!(x.nrows(), y.len());
        TrainingSet { x, y, n_classes }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in self.y {
            counts[l] += 1;
        }
        counts
    }
}

/// A fitted model.
pub trait Classifier: Send + Sync {
    /// Probability per class; non-negative and summing to one.
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64>;
}

/// One point of a hyperparameter grid, as ordered `(name, value)` pairs.
/// Unbounded settings (tree depth) use `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet(Vec<(&'static str, f64)>);

impl ParamSet {
    pub fn new(pairs: Vec<(&'static str, f64)>) -> Self {
        ParamSet(pairs)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
    }

    pub fn pairs(&self) -> &[(&'static str, f64)] {
        &self.0
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if v.is_infinite() {
                write!(f, "{k}=inf")?;
            } else {
                write!(f, "{k}={v}")?;
            }
        }
        Ok(())
    }
}

/// A classifier family with a finite hyperparameter grid.
pub trait Learner: Send + Sync {
    fn name(&self) -> &str;

    fn hyper_grid(&self) -> Vec<ParamSet>;

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        seed: u64,
    ) -> Result<Box<dyn Classifier>>;
}

pub(crate) fn param(params: &ParamSet, key: &str) -> Result<f64> {
    params.get(key).ok_or_else(|| {
        crate::error::Error::InvalidParameter(format!("missing hyperparameter `{key}` in {params}"))
    })
}

/// Converts an optional depth parameter (`inf` = unbounded).
pub(crate) fn depth_param(v: f64) -> Option<usize> {
    if v.is_finite() {
        Some(v as usize)
    } else {
        None
    }
}

pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
