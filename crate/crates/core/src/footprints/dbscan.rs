//! Density-based clustering of good instances.

use std::collections::VecDeque;

use super::geometry::Point;

pub const DEFAULT_MIN_PTS: usize = 5;
/// Neighbor rank used for the default radius.
pub const DEFAULT_EPS_RANK: usize = 5;

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Median over points of the distance to their `rank`-th nearest other
/// point (capped at `n - 1`). `None` below two points.
pub fn default_eps(points: &[Point], rank: usize) -> Option<f64> {
    let n = points.len();
    if n < 2 || rank == 0 {
        return None;
    }
    let k = rank.min(n - 1);
    let mut kth: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &q)| dist(p, q))
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let mid = kth.len() / 2;
    Some(if kth.len() % 2 == 1 {
        kth[mid]
    } else {
        (kth[mid - 1] + kth[mid]) / 2.0
    })
}

/// DBSCAN. A point is core when at least `min_pts` points (itself included)
/// lie within distance `eps`. Points are scanned in index order, so cluster
/// ids and border assignment are deterministic. `None` marks noise.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    if n < min_pts.max(1) {
        return label;
    }
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| dist(points[i], points[j]) <= eps)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut next = 0;
    for start in 0..n {
        if label[start].is_some() || !core[start] {
            continue;
        }
        let id = next;
        next += 1;
        label[start] = Some(id);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            if !core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(id);
                    queue.push_back(q);
                }
            }
        }
    }
    label
}

pub fn cluster_count(labels: &[Option<usize>]) -> usize {
    labels.iter().flatten().max().map_or(0, |m| m + 1)
}
