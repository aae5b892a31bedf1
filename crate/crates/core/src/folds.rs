//! Stratified k-fold assignment.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng;

/// What to do when a class has fewer instances than requested folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallClassPolicy {
    #[default]
    Error,
    /// Lower k to the smallest class size (never below 2).
    Reduce,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, instance: usize) -> usize {
        self.fold_of[instance]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.fold_of
    }

    /// Test-fold instance ids in ascending order.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Training instance ids (all other folds) in ascending order.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Assigns each instance to one of `k` folds so that per-class counts across
/// folds differ by at most one.
///
/// Each class is shuffled with the seeded stream and dealt round-robin; the
/// dealing position carries over between classes so fold sizes stay balanced
/// too.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_kfold_with(labels, k, seed, SmallClassPolicy::Error)
}

pub fn stratified_kfold_with(
    labels: &[usize],
    k: usize,
    seed: u64,
    policy: SmallClassPolicy,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("fold count {k} < 2")));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let smallest = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    let k = if smallest < k {
        match policy {
            SmallClassPolicy::Error => {
                return Err(Error::InvalidParameter(format!(
                    "a class has {smallest} instance(s), fewer than {k} folds"
                )))
            }
            SmallClassPolicy::Reduce if smallest >= 2 => smallest,
            SmallClassPolicy::Reduce => {
                return Err(Error::InvalidParameter(format!(
                    "a class has {smallest} instance(s), cannot build 2 folds"
                )))
            }
        }
    } else {
        k
    };

    let mut stream = rng(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in &mut members {
        class.shuffle(&mut stream);
        for &i in class.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { fold_of, k, seed })
}
