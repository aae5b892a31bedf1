//! Nearest enemies, local sets and the LSC / LSR / U / H measures.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distance::DistanceIndex;

/// For every instance: its nearest enemy (closest instance of another class,
/// ties by id) and its local set (same-class instances strictly closer than
/// that enemy).
#[derive(Debug, Clone)]
pub struct LocalSetIndex {
    nearest_enemy: Vec<usize>,
    local_sets: Vec<Vec<usize>>,
    /// How many local sets contain each instance.
    membership: Vec<usize>,
    /// How many instances have each instance as nearest enemy.
    enemy_of: Vec<usize>,
}

impl LocalSetIndex {
    pub fn build(dataset: &Dataset, index: &DistanceIndex) -> Self {
        let labels = dataset.labels();
        let n = dataset.n_instances();
        let per_instance: Vec<(usize, Vec<usize>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let neighbors = index.neighbors(i);
                let enemy = *neighbors
                    .iter()
                    .find(|&&j| labels[j] != labels[i])
                    .expect("at least two classes");
                let radius = index.distance(i, enemy);
                let mut set: Vec<usize> = neighbors
                    .iter()
                    .take_while(|&&j| index.distance(i, j) < radius)
                    .copied()
                    .collect();
                set.sort_unstable();
                (enemy, set)
            })
            .collect();

        let mut membership = vec![0; n];
        let mut enemy_of = vec![0; n];
        for (enemy, set) in &per_instance {
            enemy_of[*enemy] += 1;
            for &z in set {
                membership[z] += 1;
            }
        }
        let (nearest_enemy, local_sets) = per_instance.into_iter().unzip();
        LocalSetIndex {
            nearest_enemy,
            local_sets,
            membership,
            enemy_of,
        }
    }

    pub fn nearest_enemy(&self, i: usize) -> usize {
        self.nearest_enemy[i]
    }

    pub fn local_set(&self, i: usize) -> &[usize] {
        &self.local_sets[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSetMeasures {
    pub lsc: Vec<f64>,
    pub lsr: Vec<f64>,
    pub usefulness: Vec<f64>,
    pub harmfulness: Vec<f64>,
}

/// With `n_c` the size of the instance's class:
/// - LSC = 1 - |LS(x)| / (n_c - 1)
/// - LSR = 1 - min(1, d(x, NE(x)) / max same-class distance), 1 if that max is 0
/// - U = 1 - |{z : x in LS(z)}| / (n_c - 1)
/// - H = |{z : NE(z) = x}| / (n - n_c)
pub fn measure_local_sets(
    dataset: &Dataset,
    index: &DistanceIndex,
    ls: &LocalSetIndex,
) -> LocalSetMeasures {
    let n = dataset.n_instances();
    let labels = dataset.labels();
    let class_sizes = dataset.class_counts();
    let mut out = LocalSetMeasures {
        lsc: Vec::with_capacity(n),
        lsr: Vec::with_capacity(n),
        usefulness: Vec::with_capacity(n),
        harmfulness: Vec::with_capacity(n),
    };
    for i in 0..n {
        let n_c = class_sizes[labels[i]];
        let mates = (n_c - 1) as f64;
        out.lsc.push(1.0 - ls.local_set(i).len() as f64 / mates);

        let farthest_mate = index
            .neighbors(i)
            .iter()
            .filter(|&&j| labels[j] == labels[i])
            .map(|&j| index.distance(i, j))
            .fold(0.0, f64::max);
        let lsr = if farthest_mate == 0.0 {
            1.0
        } else {
            1.0 - (index.distance(i, ls.nearest_enemy(i)) / farthest_mate).min(1.0)
        };
        out.lsr.push(lsr);

        out.usefulness.push(1.0 - ls.membership[i] as f64 / mates);
        out.harmfulness
            .push(ls.enemy_of[i] as f64 / (n - n_c) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::build_distance_index;
    use ndarray::Array2;

    fn line(positions: &[f64], labels: &[usize]) -> Dataset {
        let x = Array2::from_shape_vec((positions.len(), 1), positions.to_vec()).unwrap();
        Dataset::new(
            x,
            labels.to_vec(),
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn compact_class_far_from_enemies() {
        let ds = line(&[0.0, 0.05, 0.1, 0.9, 1.0], &[0, 0, 0, 1, 1]);
        let idx = build_distance_index(&ds);
        let ls = LocalSetIndex::build(&ds, &idx);
        assert_eq!(ls.nearest_enemy(0), 3);
        assert_eq!(ls.local_set(0), &[1, 2]);
        let m = measure_local_sets(&ds, &idx, &ls);
        assert_eq!(m.lsc[0], 0.0);
        // Nobody has instance 0 as nearest enemy.
        assert_eq!(m.harmfulness[0], 0.0);
        // Instance 2 is every class-1 member's nearest enemy.
        assert_eq!(m.harmfulness[2], 1.0);
        assert_eq!(m.usefulness[0], 0.0);
    }

    #[test]
    fn distances_equal_to_enemy_are_excluded() {
        let ds = line(&[0.5, 0.25, 0.75, 1.0], &[0, 0, 1, 1]);
        let idx = build_distance_index(&ds);
        let ls = LocalSetIndex::build(&ds, &idx);
        // 0.25 and 0.75 are both 0.25 away from 0.5.
        assert_eq!(ls.nearest_enemy(0), 2);
        assert!(ls.local_set(0).is_empty());
        let m = measure_local_sets(&ds, &idx, &ls);
        assert_eq!(m.lsc[0], 1.0);
        assert_eq!(m.lsr[0], 0.0);
    }
}
