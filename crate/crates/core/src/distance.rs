//! Pairwise Euclidean distances and sorted neighbor lists.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::dataset::Dataset;

/// Dense pairwise distances plus, for every instance, all other instances
/// sorted by `(distance, instance_id)`.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    n: usize,
    dist: Vec<f64>,
    neighbors: Vec<usize>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn build_distance_index(dataset: &Dataset) -> DistanceIndex {
    DistanceIndex::from_points(dataset.features())
}

impl DistanceIndex {
    pub fn from_points(points: ArrayView2<'_, f64>) -> Self {
        let n = points.nrows();
        let rows: Vec<Vec<f64>> = points.outer_iter().map(|r| r.to_vec()).collect();
        let dist: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let rows = &rows;
                (0..n).map(move |j| {
                    if i == j {
                        0.0
                    } else {
                        euclidean(&rows[i], &rows[j])
                    }
                })
            })
            .collect();
        let neighbors: Vec<usize> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = &dist[i * n..(i + 1) * n];
                let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                order
            })
            .collect();
        DistanceIndex { n, dist, neighbors }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Every other instance, nearest first; ties by ascending id.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        let w = self.n.saturating_sub(1);
        &self.neighbors[i * w..(i + 1) * w]
    }

    pub fn k_nearest(&self, i: usize, k: usize) -> &[usize] {
        &self.neighbors(i)[..k]
    }
}
