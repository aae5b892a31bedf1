//! L2-regularized linear models trained by accelerated gradient descent.
//!
//! Both models append an unpenalized intercept. Step size is the inverse of a
//! Lipschitz bound on the gradient computed from the mean squared row norm.

use ndarray::{Array2, ArrayView1};

use super::{param, sigmoid, softmax_in_place, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;

const ITERATIONS: usize = 500;

/// Weights as `n_outputs x (d + 1)`; the last column is the intercept.
fn scores(w: &Array2<f64>, row: ArrayView1<'_, f64>) -> Vec<f64> {
    let d = row.len();
    w.outer_iter()
        .map(|wr| wr[d] + wr.iter().zip(row.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn mean_sq_norm(data: &TrainingSet<'_>) -> f64 {
    let n = data.len().max(1) as f64;
    data.x
        .outer_iter()
        .map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / n
}

/// Nesterov-accelerated gradient descent from zero weights.
fn accelerated_descent<G>(outputs: usize, d: usize, step: f64, mut gradient: G) -> Array2<f64>
where
    G: FnMut(&Array2<f64>) -> Array2<f64>,
{
    let mut w = Array2::<f64>::zeros((outputs, d + 1));
    let mut look = w.clone();
    let mut t = 1.0f64;
    for _ in 0..ITERATIONS {
        let g = gradient(&look);
        let next = &look - &(g * step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        look = &next + &((&next - &w) * ((t - 1.0) / t_next));
        w = next;
        t = t_next;
    }
    w
}

/// Multinomial logistic regression.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    weights: Array2<f64>,
}

impl LogisticRegression {
    pub fn fit(data: &TrainingSet<'_>, lambda: f64) -> Self {
        let (n, d) = data.x.dim();
        let k = data.n_classes;
        let step = 1.0 / (0.5 * mean_sq_norm(data) + lambda);
        let weights = accelerated_descent(k, d, step, |w| {
            let mut g = Array2::<f64>::zeros((k, d + 1));
            for (i, row) in data.x.outer_iter().enumerate() {
                let mut p = scores(w, row);
                softmax_in_place(&mut p);
                p[data.y[i]] -= 1.0;
                for c in 0..k {
                    for j in 0..d {
                        g[[c, j]] += p[c] * row[j];
                    }
                    g[[c, d]] += p[c];
                }
            }
            g /= n as f64;
            for c in 0..k {
                for j in 0..d {
                    g[[c, j]] += lambda * w[[c, j]];
                }
            }
            g
        });
        LogisticRegression { weights }
    }
}

impl Classifier for LogisticRegression {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut p = scores(&self.weights, row);
        softmax_in_place(&mut p);
        p
    }
}

/// Linear soft-margin SVM with squared hinge loss, one-vs-rest.
///
/// Probabilities come from a unit-scale logistic link on the signed margin:
/// with two classes `p(second) = sigmoid(margin)`; with more, the per-class
/// sigmoids are normalized.
#[derive(Debug, Clone)]
pub struct LinearSvm {
    weights: Array2<f64>,
    n_classes: usize,
}

impl LinearSvm {
    pub fn fit(data: &TrainingSet<'_>, lambda: f64) -> Self {
        let (n, d) = data.x.dim();
        let k = data.n_classes;
        // Binary problems need only the second class against the first.
        let outputs = if k == 2 { 1 } else { k };
        let target = |i: usize, c: usize| {
            let positive = if k == 2 {
                data.y[i] == 1
            } else {
                data.y[i] == c
            };
            if positive {
                1.0
            } else {
                -1.0
            }
        };
        let step = 1.0 / (2.0 * mean_sq_norm(data) + lambda);
        let weights = accelerated_descent(outputs, d, step, |w| {
            let mut g = Array2::<f64>::zeros((outputs, d + 1));
            for (i, row) in data.x.outer_iter().enumerate() {
                let s = scores(w, row);
                for c in 0..outputs {
                    let t = target(i, c);
                    let slack = 1.0 - t * s[c];
                    if slack > 0.0 {
                        let coef = -2.0 * slack * t;
                        for j in 0..d {
                            g[[c, j]] += coef * row[j];
                        }
                        g[[c, d]] += coef;
                    }
                }
            }
            g /= n as f64;
            for c in 0..outputs {
                for j in 0..d {
                    g[[c, j]] += lambda * w[[c, j]];
                }
            }
            g
        });
        LinearSvm {
            weights,
            n_classes: k,
        }
    }

    pub fn margins(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        scores(&self.weights, row)
    }
}

impl Classifier for LinearSvm {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let m = self.margins(row);
        if self.n_classes == 2 {
            let p1 = sigmoid(m[0]);
            return vec![1.0 - p1, p1];
        }
        let mut p: Vec<f64> = m.into_iter().map(sigmoid).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }
}

fn lambda_grid(lambdas: &[f64]) -> Vec<ParamSet> {
    lambdas
        .iter()
        .map(|&l| ParamSet::new(vec![("lambda", l)]))
        .collect()
}

const DEFAULT_LAMBDAS: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone)]
pub struct LogisticRegressionLearner {
    pub lambdas: Vec<f64>,
}

impl Default for LogisticRegressionLearner {
    fn default() -> Self {
        LogisticRegressionLearner {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
        }
    }
}

impl Learner for LogisticRegressionLearner {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        lambda_grid(&self.lambdas)
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(LogisticRegression::fit(
            data,
            param(params, "lambda")?,
        )))
    }
}

#[derive(Debug, Clone)]
pub struct LinearSvmLearner {
    pub lambdas: Vec<f64>,
}

impl Default for LinearSvmLearner {
    fn default() -> Self {
        LinearSvmLearner {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
        }
    }
}

impl Learner for LinearSvmLearner {
    fn name(&self) -> &str {
        "linear_svm"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        lambda_grid(&self.lambdas)
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(LinearSvm::fit(data, param(params, "lambda")?)))
    }
}
