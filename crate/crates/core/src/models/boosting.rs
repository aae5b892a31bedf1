//! Gradient-boosted regression stumps with a softmax link.
//!
//! One stump per class per round fits the negative gradient `y_c - p_c`;
//! leaf values take the one-step Newton estimate
//! `(K - 1) / K * sum(r) / sum(|r| (1 - |r|))`.

use ndarray::ArrayView1;

use super::{param, softmax_in_place, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stump {
    feature: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

impl Stump {
    fn eval(&self, row: ArrayView1<'_, f64>) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoostedStumps {
    init: Vec<f64>,
    rate: f64,
    rounds: Vec<Vec<Stump>>,
}

fn newton_value(residuals: &[f64], k: usize) -> f64 {
    let num: f64 = residuals.iter().sum();
    let den: f64 = residuals.iter().map(|r| r.abs() * (1.0 - r.abs())).sum();
    if den < 1e-150 {
        0.0
    } else {
        (k as f64 - 1.0) / k as f64 * num / den
    }
}

/// Least-squares stump on `residuals`; constant fit when no feature varies.
fn fit_stump(data: &TrainingSet<'_>, residuals: &[f64], k: usize) -> Stump {
    let n = data.len();
    let total: f64 = residuals.iter().sum();
    let mut best: Option<(f64, usize, f64, usize)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for feature in 0..data.x.ncols() {
        order.sort_by(|&a, &b| {
            data.x[[a, feature]]
                .total_cmp(&data.x[[b, feature]])
                .then(a.cmp(&b))
        });
        let mut left_sum = 0.0;
        for p in 0..n - 1 {
            left_sum += residuals[order[p]];
            let here = data.x[[order[p], feature]];
            let next = data.x[[order[p + 1], feature]];
            if here >= next {
                continue;
            }
            let nl = (p + 1) as f64;
            let nr = (n - p - 1) as f64;
            let right_sum = total - left_sum;
            // SSE reduction is proportional to this gain.
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
            let mut threshold = 0.5 * (here + next);
            if threshold >= next {
                threshold = here;
            }
            if best.is_none_or(|(g, _, _, _)| gain > g) {
                best = Some((gain, feature, threshold, p + 1));
            }
        }
    }
    match best {
        None => {
            let v = newton_value(residuals, k);
            Stump {
                feature: 0,
                threshold: f64::INFINITY,
                left: v,
                right: v,
            }
        }
        Some((_, feature, threshold, _)) => {
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for i in 0..n {
                if data.x[[i, feature]] <= threshold {
                    l.push(residuals[i]);
                } else {
                    r.push(residuals[i]);
                }
            }
            Stump {
                feature,
                threshold,
                left: newton_value(&l, k),
                right: newton_value(&r, k),
            }
        }
    }
}

impl BoostedStumps {
    pub fn fit(data: &TrainingSet<'_>, n_rounds: usize, rate: f64) -> Self {
        let n = data.len();
        let k = data.n_classes;
        let counts = data.class_counts();
        // Absent classes start at a large negative score instead of -inf.
        let init: Vec<f64> = counts
            .iter()
            .map(|&c| {
                if c > 0 {
                    (c as f64 / n as f64).ln()
                } else {
                    -30.0
                }
            })
            .collect();
        let mut scores: Vec<Vec<f64>> = vec![init.clone(); n];
        let mut rounds = Vec::with_capacity(n_rounds);
        let mut residuals = vec![0.0; n];
        for _ in 0..n_rounds {
            let probs: Vec<Vec<f64>> = scores
                .iter()
                .map(|s| {
                    let mut p = s.clone();
                    softmax_in_place(&mut p);
                    p
                })
                .collect();
            let mut stumps = Vec::with_capacity(k);
            for c in 0..k {
                for i in 0..n {
                    let target = if data.y[i] == c { 1.0 } else { 0.0 };
                    residuals[i] = target - probs[i][c];
                }
                stumps.push(fit_stump(data, &residuals, k));
            }
            for (i, row) in data.x.outer_iter().enumerate() {
                for (c, stump) in stumps.iter().enumerate() {
                    scores[i][c] += rate * stump.eval(row);
                }
            }
            rounds.push(stumps);
        }
        BoostedStumps { init, rate, rounds }
    }
}

impl Classifier for BoostedStumps {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut s = self.init.clone();
        for stumps in &self.rounds {
            for (c, stump) in stumps.iter().enumerate() {
                s[c] += self.rate * stump.eval(row);
            }
        }
        softmax_in_place(&mut s);
        s
    }
}

#[derive(Debug, Clone)]
pub struct BoostedStumpsLearner {
    pub rounds: Vec<usize>,
    pub rates: Vec<f64>,
}

impl Default for BoostedStumpsLearner {
    fn default() -> Self {
        BoostedStumpsLearner {
            rounds: vec![50, 100],
            rates: vec![0.1, 0.3],
        }
    }
}

impl Learner for BoostedStumpsLearner {
    fn name(&self) -> &str {
        "gradient_boosting"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        self.rounds
            .iter()
            .flat_map(|&r| {
                self.rates.iter().map(move |&lr| {
                    ParamSet::new(vec![("n_rounds", r as f64), ("learning_rate", lr)])
                })
            })
            .collect()
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        let rounds = param(params, "n_rounds")? as usize;
        let rate = param(params, "learning_rate")?;
        Ok(Box::new(BoostedStumps::fit(data, rounds, rate)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::{accuracy, assert_distribution, blobs};
    use ndarray::array;

    #[test]
    fn boosting_learns_blobs() {
        let (x, y) = blobs(100, 0.6, 1);
        let m = BoostedStumps::fit(&TrainingSet::new(x.view(), &y, 2), 50, 0.3);
        assert!(accuracy(&m, &x, &y) > 0.95);
        assert_distribution(&m.predict_proba(x.row(3)));
    }

    #[test]
    fn constant_features_keep_prior() {
        let x = array![[0.2], [0.2], [0.2], [0.2]];
        let m = BoostedStumps::fit(&TrainingSet::new(x.view(), &[0, 0, 0, 1], 2), 10, 0.1);
        let p = m.predict_proba(x.row(0));
        assert!((p[0] - 0.75).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn stump_picks_the_separating_threshold() {
        let x = array![[0.0, 0.5], [0.1, 0.4], [0.8, 0.5], [0.9, 0.4]];
        let data = TrainingSet::new(x.view(), &[0, 0, 1, 1], 2);
        let s = fit_stump(&data, &[-0.5, -0.5, 0.5, 0.5], 2);
        assert_eq!(s.feature, 0);
        assert!((s.threshold - 0.45).abs() < 1e-12);
        assert!(s.left < 0.0 && s.right > 0.0);
    }
}
