//! CART classification trees with Gini impurity.
//!
//! Splits are binary thresholds `x[feature] <= threshold` placed at midpoints
//! between consecutive distinct values. Among equally good splits the lowest
//! feature index wins, then the lowest threshold. Growth stops at pure nodes,
//! at the depth limit, or when no feature varies.

use ndarray::ArrayView1;
use rand::seq::SliceRandom;

use super::{depth_param, param, Classifier, Learner, ParamSet, TrainingSet};
use crate::error::Result;
use crate::rng::{rng, Rng};

#[derive(Debug, Clone, Default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per node (random subset); `None` examines all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub depth: usize,
    /// Training instances per class that reached this node.
    pub counts: Vec<usize>,
    pub split: Option<Split>,
}

impl Node {
    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    fn gini(&self) -> f64 {
        let n = self.size();
        if n == 0 {
            return 0.0;
        }
        let sq: u64 = self.counts.iter().map(|&c| (c * c) as u64).sum();
        1.0 - sq as f64 / (n * n) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_classes: usize,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.score > other.score
            || (self.score == other.score
                && (self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)))
    }
}

impl DecisionTree {
    /// Grows a tree. `stream` is only drawn from when `max_features` limits
    /// the per-node feature set.
    pub fn fit(data: &TrainingSet<'_>, params: &TreeParams, mut stream: Option<&mut Rng>) -> Self {
        let d = data.x.ncols();
        let k = data.n_classes;
        let counts_of = |idx: &[usize]| {
            let mut c = vec![0usize; k];
            for &i in idx {
                c[data.y[i]] += 1;
            }
            c
        };

        let all: Vec<usize> = (0..data.len()).collect();
        let mut nodes = vec![Node {
            depth: 0,
            counts: counts_of(&all),
            split: None,
        }];
        let mut stack = vec![(0usize, all)];
        let mut features: Vec<usize> = (0..d).collect();

        while let Some((node_id, idx)) = stack.pop() {
            let node = &nodes[node_id];
            let pure = node.counts.iter().filter(|&&c| c > 0).count() <= 1;
            let at_limit = params.max_depth.is_some_and(|m| node.depth >= m);
            if pure || at_limit || idx.len() < 2 {
                continue;
            }
            let depth = node.depth;

            let limit = match (params.max_features, stream.as_deref_mut()) {
                (Some(m), Some(r)) if m < d => {
                    features.shuffle(r);
                    m.max(1)
                }
                _ => {
                    features.sort_unstable();
                    d
                }
            };

            let mut best: Option<Candidate> = None;
            for (pos, &feature) in features.iter().enumerate() {
                if pos >= limit && best.is_some() {
                    break;
                }
                if let Some(c) = best_threshold(data, &idx, feature, k) {
                    if best.as_ref().is_none_or(|b| c.beats(b)) {
                        best = Some(c);
                    }
                }
            }
            let Some(best) = best else { continue };

            let (left, right): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| data.x[[i, best.feature]] <= best.threshold);
            let left_id = nodes.len();
            nodes.push(Node {
                depth: depth + 1,
                counts: counts_of(&left),
                split: None,
            });
            nodes.push(Node {
                depth: depth + 1,
                counts: counts_of(&right),
                split: None,
            });
            nodes[node_id].split = Some(Split {
                feature: best.feature,
                threshold: best.threshold,
                left: left_id,
                right: left_id + 1,
            });
            stack.push((left_id + 1, right));
            stack.push((left_id, left));
        }

        DecisionTree {
            nodes,
            n_classes: k,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_of(&self, row: ArrayView1<'_, f64>) -> usize {
        let mut at = 0;
        while let Some(s) = self.nodes[at].split {
            at = if row[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            };
        }
        at
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    pub fn max_leaf_depth(&self) -> usize {
        self.leaves()
            .map(|i| self.nodes[i].depth)
            .max()
            .unwrap_or(0)
    }

    /// Class frequencies of the leaf reached by `row`.
    pub fn leaf_distribution(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let node = &self.nodes[self.leaf_of(row)];
        let n = node.size();
        if n == 0 {
            return vec![1.0 / self.n_classes as f64; self.n_classes];
        }
        node.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    /// Minimal cost-complexity pruning.
    ///
    /// Node risk is `(n_t / N) * gini(t)`. Returns the smallest subtree that
    /// minimizes `risk(leaves) + alpha * |leaves|`; a node collapses whenever
    /// keeping its subtree is not strictly cheaper.
    pub fn prune(&self, alpha: f64) -> DecisionTree {
        let total = self.nodes[0].size().max(1) as f64;
        let risk = |i: usize| self.nodes[i].size() as f64 / total * self.nodes[i].gini();

        // Children always have larger indices than their parent.
        let mut best_cost = vec![0.0; self.nodes.len()];
        let mut collapse = vec![false; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let leaf_cost = risk(i) + alpha;
            match self.nodes[i].split {
                None => best_cost[i] = leaf_cost,
                Some(s) => {
                    let subtree = best_cost[s.left] + best_cost[s.right];
                    if leaf_cost <= subtree {
                        collapse[i] = true;
                        best_cost[i] = leaf_cost;
                    } else {
                        best_cost[i] = subtree;
                    }
                }
            }
        }

        let mut nodes = Vec::new();
        let mut stack = vec![(0usize, None::<(usize, bool)>)];
        while let Some((old, parent)) = stack.pop() {
            let new_id = nodes.len();
            let mut node = self.nodes[old].clone();
            let kept = node.split.filter(|_| !collapse[old]);
            node.split = None;
            nodes.push(node);
            if let Some((p, is_left)) = parent {
                let split = nodes[p].split.as_mut().expect("parent keeps its split");
                if is_left {
                    split.left = new_id;
                } else {
                    split.right = new_id;
                }
            }
            if let Some(s) = kept {
                nodes[new_id].split = Some(Split {
                    left: usize::MAX,
                    right: usize::MAX,
                    ..s
                });
                stack.push((s.right, Some((new_id, false))));
                stack.push((s.left, Some((new_id, true))));
            }
        }
        DecisionTree {
            nodes,
            n_classes: self.n_classes,
        }
    }
}

impl Classifier for DecisionTree {
    fn predict_proba(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        self.leaf_distribution(row)
    }
}

/// Best Gini threshold on one feature, or `None` if the feature is constant
/// over `idx`. Score is `sum_c l_c^2 / n_l + sum_c r_c^2 / n_r`, which grows
/// as the weighted child impurity shrinks.
fn best_threshold(
    data: &TrainingSet<'_>,
    idx: &[usize],
    feature: usize,
    k: usize,
) -> Option<Candidate> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| {
        data.x[[a, feature]]
            .total_cmp(&data.x[[b, feature]])
            .then(a.cmp(&b))
    });
    let mut right = vec![0u64; k];
    for &i in &order {
        right[data.y[i]] += 1;
    }
    let mut left = vec![0u64; k];
    let mut left_sq: u64 = 0;
    let mut right_sq: u64 = right.iter().map(|c| c * c).sum();
    let n = order.len() as u64;

    let mut best: Option<Candidate> = None;
    for p in 0..order.len() - 1 {
        let c = data.y[order[p]];
        left_sq += 2 * left[c] + 1;
        left[c] += 1;
        right_sq -= 2 * right[c] - 1;
        right[c] -= 1;

        let here = data.x[[order[p], feature]];
        let next = data.x[[order[p + 1], feature]];
        if here >= next {
            continue;
        }
        let nl = p as u64 + 1;
        let score = left_sq as f64 / nl as f64 + right_sq as f64 / (n - nl) as f64;
        let mut threshold = 0.5 * (here + next);
        if threshold >= next {
            threshold = here;
        }
        let cand = Candidate {
            score,
            feature,
            threshold,
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    best
}

/// Single CART tree over the grid of depth limits.
#[derive(Debug, Clone)]
pub struct DecisionTreeLearner {
    pub depths: Vec<f64>,
}

impl Default for DecisionTreeLearner {
    fn default() -> Self {
        DecisionTreeLearner {
            depths: vec![3.0, 5.0, f64::INFINITY],
        }
    }
}

impl Learner for DecisionTreeLearner {
    fn name(&self) -> &str {
        "decision_tree"
    }

    fn hyper_grid(&self) -> Vec<ParamSet> {
        self.depths
            .iter()
            .map(|&d| ParamSet::new(vec![("max_depth", d)]))
            .collect()
    }

    fn fit(
        &self,
        params: &ParamSet,
        data: &TrainingSet<'_>,
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        let tree_params = TreeParams {
            max_depth: depth_param(param(params, "max_depth")?),
            max_features: None,
        };
        Ok(Box::new(DecisionTree::fit(data, &tree_params, None)))
    }
}

/// Convenience for seeded feature subsampling.
pub(crate) fn fit_random_tree(
    data: &TrainingSet<'_>,
    params: &TreeParams,
    seed: u64,
) -> DecisionTree {
    let mut stream = rng(seed);
    DecisionTree::fit(data, params, Some(&mut stream))
}
