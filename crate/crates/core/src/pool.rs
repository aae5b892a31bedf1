//! Cross-validated evaluation of a classifier pool.
//!
//! Every learner is tuned and scored inside each outer fold: an inner
//! stratified cross-validation on the outer training set picks the grid point
//! with the lowest mean log-loss, the winner is refit on the whole outer
//! training set, and the held-out fold receives its predicted probabilities.
//! Each instance is therefore predicted exactly once per learner.

use log::warn;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::folds::{stratified_kfold_with, FoldAssignment, SmallClassPolicy};
use crate::metrics::log_loss;
use crate::models::{
    BoostedStumpsLearner, Classifier, DecisionTreeLearner, KnnLearner, Learner, LinearSvmLearner,
    LogisticRegressionLearner, NaiveBayesLearner, RandomForestLearner, TrainingSet,
};
use crate::rng::derive_seed;

pub const INNER_FOLDS: usize = 3;

/// Tolerance on predicted distributions summing to one.
const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// The seven default learners, one per bias family.
pub fn default_pool() -> Vec<Box<dyn Learner>> {
    vec![
        Box::new(KnnLearner::default()),
        Box::new(NaiveBayesLearner::default()),
        Box::new(LogisticRegressionLearner::default()),
        Box::new(LinearSvmLearner::default()),
        Box::new(DecisionTreeLearner::default()),
        Box::new(RandomForestLearner::default()),
        Box::new(BoostedStumpsLearner::default()),
    ]
}

/// Default learners restricted to `names`, in the order given.
pub fn pool_from_names(names: &[String]) -> Result<Vec<Box<dyn Learner>>> {
    let mut available = default_pool();
    let mut pool = Vec::with_capacity(names.len());
    for name in names {
        let pos = available
            .iter()
            .position(|l| l.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown learner `{name}`")))?;
        pool.push(available.remove(pos));
    }
    if pool.is_empty() {
        return Err(Error::Config("learner pool is empty".into()));
    }
    Ok(pool)
}

/// `n x |A|` matrix; entry `(i, j)` is learner `j`'s probability for
/// instance `i`'s true class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    pub values: Array2<f64>,
    pub algorithm_names: Vec<String>,
}

/// `n x |A|` per-instance log-loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceMatrix {
    pub values: Array2<f64>,
    pub algorithm_names: Vec<String>,
}

impl PerformanceMatrix {
    pub fn from_probabilities(prob: &ProbabilityMatrix) -> Self {
        PerformanceMatrix {
            values: prob.values.mapv(log_loss),
            algorithm_names: prob.algorithm_names.clone(),
        }
    }

    pub fn n_algorithms(&self) -> usize {
        self.values.ncols()
    }
}

/// Which grid point won in one (learner, outer fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningRecord {
    pub learner: String,
    pub fold: usize,
    pub inner_folds: usize,
    pub chosen: String,
    /// Mean inner log-loss per grid point, in grid order.
    pub grid_scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PoolEvaluation {
    pub probabilities: ProbabilityMatrix,
    pub performance: PerformanceMatrix,
    pub tuning: Vec<TuningRecord>,
}

/// Stable key for a learner name, so seeds do not depend on pool order.
fn name_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn check_distribution(p: &[f64], n_classes: usize) -> std::result::Result<(), String> {
    if p.len() != n_classes {
        return Err(format!("{} probabilities for {n_classes} classes", p.len()));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(format!("invalid probabilities {p:?}"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(format!("probabilities sum to {total}"));
    }
    Ok(())
}

struct Cell<'a> {
    learner: &'a dyn Learner,
    fold: usize,
}

struct CellResult {
    test: Vec<usize>,
    true_class_prob: Vec<f64>,
    record: TuningRecord,
}

fn subset(x: ArrayView2<'_, f64>, labels: &[usize], idx: &[usize]) -> (Array2<f64>, Vec<usize>) {
    (
        x.select(Axis(0), idx),
        idx.iter().map(|&i| labels[i]).collect(),
    )
}

fn fit_checked(
    learner: &dyn Learner,
    fold: usize,
    params: &crate::models::ParamSet,
    data: &TrainingSet<'_>,
    seed: u64,
) -> Result<Box<dyn Classifier>> {
    learner
        .fit(params, data, seed)
        .map_err(|e| Error::LearnerFailed {
            learner: learner.name().to_string(),
            fold,
            reason: e.to_string(),
        })
}

fn predict_true_class(
    learner: &dyn Learner,
    fold: usize,
    model: &dyn Classifier,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    idx: &[usize],
    n_classes: usize,
) -> Result<Vec<f64>> {
    idx.iter()
        .map(|&i| {
            let p = model.predict_proba(x.row(i));
            check_distribution(&p, n_classes).map_err(|reason| Error::LearnerFailed {
                learner: learner.name().to_string(),
                fold,
                reason: format!("instance {i}: {reason}"),
            })?;
            Ok(p[labels[i]])
        })
        .collect()
}

fn evaluate_cell(
    dataset: &Dataset,
    folds: &FoldAssignment,
    cell: &Cell<'_>,
    seed: u64,
) -> Result<CellResult> {
    let learner = cell.learner;
    let fold = cell.fold;
    let k = dataset.n_classes();
    let x = dataset.features();
    let labels = dataset.labels();
    let task_seed = derive_seed(seed, &[name_key(learner.name()), fold as u64]);

    let train = folds.train_indices(fold);
    let test = folds.test_indices(fold);
    let (train_x, train_y) = subset(x, labels, &train);

    let grid = learner.hyper_grid();
    if grid.is_empty() {
        return Err(Error::LearnerFailed {
            learner: learner.name().to_string(),
            fold,
            reason: "empty hyperparameter grid".into(),
        });
    }

    let mut inner_k = 0;
    let mut grid_scores = vec![0.0; grid.len()];
    if grid.len() > 1 {
        let inner_seed = derive_seed(task_seed, &[0x1a]);
        let inner = match stratified_kfold_with(
            &train_y,
            INNER_FOLDS,
            inner_seed,
            SmallClassPolicy::Error,
        ) {
            Ok(f) => Some(f),
            Err(_) => {
                warn!(
                    "{} fold {fold}: too few instances per class for {INNER_FOLDS} inner folds, using 2",
                    learner.name()
                );
                stratified_kfold_with(&train_y, 2, inner_seed, SmallClassPolicy::Error).ok()
            }
        };
        match inner {
            Some(inner) => {
                inner_k = inner.k();
                for (g, params) in grid.iter().enumerate() {
                    let mut total = 0.0;
                    for inner_fold in 0..inner.k() {
                        let itrain = inner.train_indices(inner_fold);
                        let itest = inner.test_indices(inner_fold);
                        let (ix, iy) = subset(train_x.view(), &train_y, &itrain);
                        let data = TrainingSet::new(ix.view(), &iy, k);
                        let fit_seed = derive_seed(task_seed, &[g as u64, inner_fold as u64 + 1]);
                        let model = fit_checked(learner, fold, params, &data, fit_seed)?;
                        let probs = predict_true_class(
                            learner,
                            fold,
                            model.as_ref(),
                            train_x.view(),
                            &train_y,
                            &itest,
                            k,
                        )?;
                        total += probs.into_iter().map(log_loss).sum::<f64>();
                    }
                    grid_scores[g] = total / train.len() as f64;
                }
            }
            None => warn!(
                "{} fold {fold}: cannot build inner folds, keeping the first grid point",
                learner.name()
            ),
        }
    }
    let mut best = 0;
    for (g, &s) in grid_scores.iter().enumerate() {
        if s < grid_scores[best] {
            best = g;
        }
    }

    let data = TrainingSet::new(train_x.view(), &train_y, k);
    let model = fit_checked(
        learner,
        fold,
        &grid[best],
        &data,
        derive_seed(task_seed, &[u64::MAX]),
    )?;
    let true_class_prob = predict_true_class(learner, fold, model.as_ref(), x, labels, &test, k)?;

    Ok(CellResult {
        test,
        true_class_prob,
        record: TuningRecord {
            learner: learner.name().to_string(),
            fold,
            inner_folds: inner_k,
            chosen: grid[best].to_string(),
            grid_scores: if inner_k > 0 { grid_scores } else { Vec::new() },
        },
    })
}

/// Runs the nested cross-validation for every learner.
///
/// (learner, fold) cells are evaluated in parallel, each with a seed derived
/// from `(seed, learner name, fold)`, and assembled in fixed order, so the
/// output does not depend on thread scheduling.
pub fn evaluate_pool(
    dataset: &Dataset,
    folds: &FoldAssignment,
    pool: &[Box<dyn Learner>],
    seed: u64,
) -> Result<PoolEvaluation> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter("learner pool is empty".into()));
    }
    let mut names: Vec<String> = Vec::with_capacity(pool.len());
    for l in pool {
        if names.iter().any(|n| n == l.name()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate learner `{}`",
                l.name()
            )));
        }
        names.push(l.name().to_string());
    }
    if folds.assignments().len() != dataset.n_instances() {
        return Err(Error::InvalidParameter(
            "fold assignment does not match dataset".into(),
        ));
    }

    let cells: Vec<(usize, Cell<'_>)> = pool
        .iter()
        .enumerate()
        .flat_map(|(j, l)| {
            (0..folds.k()).map(move |fold| {
                (
                    j,
                    Cell {
                        learner: l.as_ref(),
                        fold,
                    },
                )
            })
        })
        .collect();
    let results: Vec<(usize, CellResult)> = cells
        .par_iter()
        .map(|(j, cell)| evaluate_cell(dataset, folds, cell, seed).map(|r| (*j, r)))
        .collect::<Result<_>>()?;

    let n = dataset.n_instances();
    let mut values = Array2::from_elem((n, pool.len()), f64::NAN);
    let mut tuning = Vec::with_capacity(results.len());
    for (j, r) in results {
        for (&i, &p) in r.test.iter().zip(&r.true_class_prob) {
            values[[i, j]] = p;
        }
        tuning.push(r.record);
    }
    debug_assert!(values.iter().all(|v| !v.is_nan()));

    let probabilities = ProbabilityMatrix {
        values,
        algorithm_names: names,
    };
    let performance = PerformanceMatrix::from_probabilities(&probabilities);
    Ok(PoolEvaluation {
        probabilities,
        performance,
        tuning,
    })
}

/// Instance hardness: one minus the mean true-class probability over the
/// pool, per instance.
pub fn instance_hardness(prob: &ProbabilityMatrix) -> Result<Vec<f64>> {
    let a = prob.values.ncols();
    if a == 0 || prob.values.nrows() == 0 {
        return Err(Error::InvalidParameter("empty probability matrix".into()));
    }
    Ok(prob
        .values
        .outer_iter()
        .map(|row| (1.0 - row.sum() / a as f64).clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folds::stratified_kfold;
    use ndarray::array;

    fn prob(values: Array2<f64>) -> ProbabilityMatrix {
        let names = (0..values.ncols()).map(|j| format!("a{j}")).collect();
        ProbabilityMatrix {
            values,
            algorithm_names: names,
        }
    }

    #[test]
    fn hardness_reference_rows() {
        let ih = instance_hardness(&prob(array![
            [1.0, 1.0, 1.0],
            [0.0, 0.0, 0.0],
            [1.0, 0.5, 0.0]
        ]))
        .unwrap();
        assert_eq!(ih, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn hardness_rejects_empty() {
        assert!(instance_hardness(&prob(Array2::zeros((3, 0)))).is_err());
    }

    #[test]
    fn default_pool_has_seven_distinct_learners() {
        let pool = default_pool();
        assert_eq!(pool.len(), 7);
        let mut names: Vec<&str> = pool.iter().map(|l| l.name()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 7);
        for l in &pool {
            assert!(!l.hyper_grid().is_empty());
        }
    }

    #[test]
    fn pool_by_name() {
        let pool = pool_from_names(&["random_forest".into(), "knn".into()]).unwrap();
        assert_eq!(pool[0].name(), "random_forest");
        assert!(pool_from_names(&["mlp".into()]).is_err());
        assert!(pool_from_names(&[]).is_err());
    }

    #[test]
    fn small_evaluation_is_complete_and_deterministic() {
        let (x, y) = crate::models::testing::blobs(40, 0.9, 3);
        let ds = Dataset::from_unscaled(x, y).unwrap();
        let folds = stratified_kfold(ds.labels(), 5, 1).unwrap();
        let pool =
            pool_from_names(&["knn".into(), "naive_bayes".into(), "decision_tree".into()]).unwrap();
        let a = evaluate_pool(&ds, &folds, &pool, 9).unwrap();
        let b = evaluate_pool(&ds, &folds, &pool, 9).unwrap();
        assert_eq!(a.probabilities, b.probabilities);
        assert_eq!(a.tuning, b.tuning);
        assert_eq!(a.tuning.len(), 15);
        assert!(a
            .probabilities
            .values
            .iter()
            .all(|p| (0.0..=1.0).contains(p)));
        let max = crate::metrics::max_log_loss();
        assert!(a.performance.values.iter().all(|l| (0.0..=max).contains(l)));
        for r in &a.tuning {
            assert_eq!(r.inner_folds, INNER_FOLDS);
        }
    }
}
