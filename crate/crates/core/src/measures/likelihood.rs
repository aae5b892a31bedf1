//! CL and CLD from an in-sample Gaussian naive Bayes posterior.

use crate::dataset::Dataset;
use crate::models::{Classifier, GaussianNaiveBayes, TrainingSet};

pub const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMeasures {
    pub cl: Vec<f64>,
    pub cld: Vec<f64>,
}

/// `CL = 1 - P(c_x | x)`; `CLD = (1 - (P(c_x | x) - max_{c != c_x} P(c | x))) / 2`.
pub fn likelihood_from_posterior(posterior: &[f64], label: usize) -> (f64, f64) {
    let own = posterior[label];
    let rival = posterior
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != label)
        .map(|(_, &p)| p)
        .fold(0.0, f64::max);
    let cl = (1.0 - own).clamp(0.0, 1.0);
    let cld = ((1.0 - (own - rival)) / 2.0).clamp(0.0, 1.0);
    (cl, cld)
}

pub fn measure_likelihood(dataset: &Dataset) -> LikelihoodMeasures {
    let data = TrainingSet::new(dataset.features(), dataset.labels(), dataset.n_classes());
    let nb = GaussianNaiveBayes::fit(&data, VAR_SMOOTHING);
    let (cl, cld) = dataset
        .features()
        .outer_iter()
        .zip(dataset.labels())
        .map(|(row, &l)| likelihood_from_posterior(&nb.predict_proba(row), l))
        .unzip();
    LikelihoodMeasures { cl, cld }
}
