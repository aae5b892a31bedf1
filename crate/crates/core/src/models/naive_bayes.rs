//! Gaussian naive Bayes.

use ndarray::ArrayView1;

use super::{param, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;

/// Per-class, per-feature Gaussian densities with priors from class
/// frequencies. Variances are population variances plus
/// `var_smoothing * (largest per-feature variance of the training data)`.
#[derive(Debug, Clone)]
pub struct GaussianNaiveBayes {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNaiveBayes {
    pub fn fit(data: &TrainingSet<'_>, var_smoothing: f64) -> Self {
        let (n, d) = data.x.dim();
        let k = data.n_classes;
        let counts = data.class_counts();

        let mut largest = 0.0f64;
        for col in data.x.columns() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            largest = largest.max(var);
        }
        let epsilon = if largest > 0.0 {
            var_smoothing * largest
        } else {
            var_smoothing
        };

        let mut means = vec![vec![0.0; d]; k];
        let mut variances = vec![vec![0.0; d]; k];
        for (i, row) in data.x.outer_iter().enumerate() {
            let c = data.y[i];
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
            }
        }
        for (i, row) in data.x.outer_iter().enumerate() {
            let c = data.y[i];
            for j in 0..d {
                variances[c][j] += (row[j] - means[c][j]).powi(2);
            }
        }
        for c in 0..k {
            for v in variances[c].iter_mut() {
                *v = if counts[c] > 0 {
                    *v / counts[c] as f64
                } else {
                    0.0
                } + epsilon;
            }
        }
        let log_priors = counts
            .iter()
            .map(|&c| {
                if c > 0 {
                    (c as f64 / n as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        GaussianNaiveBayes {
            log_priors,
            means,
            variances,
        }
    }

    fn joint_log_likelihood(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        (0..self.log_priors.len())
            .map(|c| {
                if self.log_priors[c] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let mut ll = self.log_priors[c];
                for (j, x) in row.iter().enumerate() {
                    let var = self.variances[c][j];
                    let diff = x - self.means[c][j];
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
                }
                ll
            })
            .collect()
    }
}

impl Classifier for GaussianNaiveBayes {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut p = self.joint_log_likelihood(row);
        super::softmax_in_place(&mut p);
        p
    }
}

#[derive(Debug, Clone)]
pub struct NaiveBayesLearner {
    pub smoothing: Vec<f64>,
}

impl Default for NaiveBayesLearner {
    fn default() -> Self {
        NaiveBayesLearner {
            smoothing: vec![1e-9, 1e-6],
        }
    }
}

impl Learner for NaiveBayesLearner {
    fn name(&self) -> &str {
        "naive_bayes"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        self.smoothing
            .iter()
            .map(|&s| ParamSet::new(vec![("var_smoothing", s)]))
            .collect()
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(GaussianNaiveBayes::fit(
            data,
            param(params, "var_smoothing")?,
        )))
    }
}
