//! Minimum spanning tree over the complete Euclidean graph, and N1.

use crate::dataset::Dataset;
use crate::distance::DistanceIndex;

#[derive(Debug, Clone)]
pub struct MstGraph {
    /// `(parent, child, weight)` in the order Prim attached each vertex.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<usize>>,
}

impl MstGraph {
    /// Prim's algorithm from vertex 0 on the dense distance matrix.
    ///
    /// The next vertex is the one with the smallest connection cost, ties by
    /// lowest id; a vertex's connection switches to a new tree vertex only
    /// when strictly cheaper, or equally cheap from a lower id.
    pub fn build(index: &DistanceIndex) -> Self {
        let n = index.len();
        let mut in_tree = vec![false; n];
        let mut cost = vec![f64::INFINITY; n];
        let mut via = vec![usize::MAX; n];
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        let mut adjacency = vec![Vec::new(); n];
        if n == 0 {
            return MstGraph { edges, adjacency };
        }
        cost[0] = 0.0;
        for _ in 0..n {
            let mut next = usize::MAX;
            for v in 0..n {
                if !in_tree[v] && (next == usize::MAX || cost[v] < cost[next]) {
                    next = v;
                }
            }
            in_tree[next] = true;
            if via[next] != usize::MAX {
                let p = via[next];
                edges.push((p, next, cost[next]));
                adjacency[p].push(next);
                adjacency[next].push(p);
            }
            let row = index.row(next);
            for v in 0..n {
                if in_tree[v] {
                    continue;
                }
                if row[v] < cost[v] || (row[v] == cost[v] && next < via[v]) {
                    cost[v] = row[v];
                    via[v] = next;
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        MstGraph { edges, adjacency }
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }
}

/// Share of a vertex's MST edges that connect to the other class(es).
pub fn measure_n1(dataset: &Dataset, mst: &MstGraph) -> Vec<f64> {
    let labels = dataset.labels();
    (0..dataset.n_instances())
        .map(|i| {
            let adj = mst.neighbors(i);
            if adj.is_empty() {
                return 0.0;
            }
            let cross = adj.iter().filter(|&&j| labels[j] != labels[i]).count();
            cross as f64 / adj.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn chain_on_a_line() {
        let idx = DistanceIndex::from_points(array![[0.0], [0.3], [0.1], [1.0]].view());
        let mst = MstGraph::build(&idx);
        assert_eq!(mst.edges().len(), 3);
        assert!((mst.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(mst.neighbors(2), &[0, 1]);
        assert_eq!(mst.neighbors(3), &[1]);
    }

    #[test]
    fn n1_leaf_and_homogeneous_cases() {
        let x = array![[0.0], [0.1], [0.2], [0.9]];
        let ds = Dataset::new(
            x,
            vec![0, 0, 1, 1],
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let idx = crate::distance::build_distance_index(&ds);
        let mst = MstGraph::build(&idx);
        let n1 = measure_n1(&ds, &mst);
        assert_eq!(n1[0], 0.0);
        assert_eq!(n1[1], 0.5);
        assert_eq!(n1[3], 0.0);
        assert_eq!(n1[2], 0.5);
    }
}
