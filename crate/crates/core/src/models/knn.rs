//! k-nearest-neighbor voting.

use ndarray::{Array2, ArrayView1};

use super::{param, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;

/// Uniform vote among the `k` nearest training points (Euclidean, ties by
/// training position).
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    x: Array2<f64>,
    y: Vec<usize>,
    n_classes: usize,
    k: usize,
}

impl KnnClassifier {
    pub fn fit(data: &TrainingSet<'_>, k: usize) -> Self {
        KnnClassifier {
            x: data.x.to_owned(),
            y: data.y.to_vec(),
            n_classes: data.n_classes,
            k: k.clamp(1, data.len().max(1)),
        }
    }
}

impl Classifier for KnnClassifier {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .outer_iter()
            .enumerate()
            .map(|(i, t)| {
                let d2: f64 = t
                    .iter()
                    .zip(row.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut p = vec![0.0; self.n_classes];
        for &(_, i) in &dist[..self.k] {
            p[self.y[i]] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= self.k as f64);
        p
    }
}

#[derive(Debug, Clone)]
pub struct KnnLearner {
    pub ks: Vec<usize>,
}

impl Default for KnnLearner {
    fn default() -> Self {
        KnnLearner { ks: vec![3, 5, 11] }
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> &str {
        "knn"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        self.ks
            .iter()
            .map(|&k| ParamSet::new(vec![("k", k as f64)]))
            .collect()
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(KnnClassifier::fit(
            data,
            param(params, "k")? as usize,
        )))
    }
}
