//! Generators and brute-force reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use instance_space::Dataset;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform features in `[0, 1]`, `k` classes of near-equal size.
pub fn uniform_dataset(seed: u64, n: usize, d: usize, k: usize) -> Dataset {
    let mut r = rng(seed);
    let x = Array2::from_shape_fn((n, d), |_| r.random::<f64>());
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(&mut r);
    named(x, labels, k)
}

/// Gaussian class clouds with means at `± shift` on every axis (two
/// classes) or spread along the first axis (more classes), min-max scaled.
pub fn gaussian_dataset(seed: u64, n: usize, d: usize, k: usize, shift: f64) -> Dataset {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let x = Array2::from_shape_fn((n, d), |(i, j)| {
        let z: f64 = StandardNormal.sample(&mut r);
        let c = labels[i] as f64 - (k as f64 - 1.0) / 2.0;
        let centre = if k == 2 || j == 0 {
            2.0 * c * shift
        } else {
            0.0
        };
        centre + z
    });
    Dataset::from_unscaled(x, labels).unwrap()
}

fn named(x: Array2<f64>, labels: Vec<usize>, k: usize) -> Dataset {
    let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    let classes = (0..k).map(|c| format!("c{c}")).collect();
    Dataset::new(x, labels, names, classes).unwrap()
}

pub fn dist(ds: &Dataset, i: usize, j: usize) -> f64 {
    let (a, b) = (ds.row(i), ds.row(j));
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Every other instance ordered by (distance, index).
pub fn sorted_others(ds: &Dataset, i: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..ds.n_instances()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| dist(ds, i, a).total_cmp(&dist(ds, i, b)).then(a.cmp(&b)));
    others
}

pub fn kdn_oracle(ds: &Dataset, k: usize) -> Vec<f64> {
    let y = ds.labels();
    (0..ds.n_instances())
        .map(|i| {
            let bad = sorted_others(ds, i)[..k]
                .iter()
                .filter(|&&j| y[j] != y[i])
                .count();
            bad as f64 / k as f64
        })
        .collect()
}

/// Kruskal with union-find over all pairs, ties by (i, j).
pub fn kruskal(ds: &Dataset) -> Vec<(usize, usize, f64)> {
    let n = ds.n_instances();
    let mut edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, dist(ds, i, j)))
        .collect();
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut tree = Vec::new();
    for (i, j, w) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            tree.push((i, j, w));
        }
    }
    tree
}

/// Minimum spanning tree weight by enumerating every (n - 1)-edge subset.
pub fn exhaustive_mst_weight(ds: &Dataset) -> f64 {
    let n = ds.n_instances();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut best = f64::INFINITY;
    let mut chosen = Vec::new();
    fn spans(n: usize, subset: &[(usize, usize)]) -> bool {
        let mut comp: Vec<usize> = (0..n).collect();
        for &(a, b) in subset {
            let (ca, cb) = (comp[a], comp[b]);
            if ca == cb {
                return false;
            }
            for c in comp.iter_mut() {
                if *c == cb {
                    *c = ca;
                }
            }
        }
        true
    }
    fn walk(
        ds: &Dataset,
        edges: &[(usize, usize)],
        start: usize,
        need: usize,
        chosen: &mut Vec<(usize, usize)>,
        best: &mut f64,
    ) {
        if chosen.len() == need {
            if spans(ds.n_instances(), chosen) {
                let w: f64 = chosen.iter().map(|&(a, b)| dist(ds, a, b)).sum();
                *best = best.min(w);
            }
            return;
        }
        for e in start..edges.len() {
            chosen.push(edges[e]);
            walk(ds, edges, e + 1, need, chosen, best);
            chosen.pop();
        }
    }
    walk(ds, &edges, 0, n - 1, &mut chosen, &mut best);
    best
}

pub fn n1_oracle(ds: &Dataset, tree: &[(usize, usize, f64)]) -> Vec<f64> {
    let y = ds.labels();
    (0..ds.n_instances())
        .map(|v| {
            let incident: Vec<usize> = tree
                .iter()
                .filter_map(|&(a, b, _)| {
                    if a == v {
                        Some(b)
                    } else if b == v {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect();
            incident.iter().filter(|&&u| y[u] != y[v]).count() as f64 / incident.len() as f64
        })
        .collect()
}

pub fn n2_oracle(ds: &Dataset) -> Vec<f64> {
    let y = ds.labels();
    let n = ds.n_instances();
    (0..n)
        .map(|i| {
            let mut intra = f64::INFINITY;
            let mut extra = f64::INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                let d = dist(ds, i, j);
                if y[j] == y[i] {
                    intra = intra.min(d);
                } else {
                    extra = extra.min(d);
                }
            }
            if intra + extra == 0.0 {
                0.5
            } else {
                intra / (intra + extra)
            }
        })
        .collect()
}

pub fn f1_oracle(ds: &Dataset) -> Vec<f64> {
    let y = ds.labels();
    let (n, d, k) = (ds.n_instances(), ds.n_features(), ds.n_classes());
    let x = ds.features();
    (0..n)
        .map(|i| {
            let mut count = 0;
            for j in 0..d {
                let per_class_min = |c: usize| {
                    (0..n)
                        .filter(|&t| y[t] == c)
                        .map(|t| x[[t, j]])
                        .fold(f64::INFINITY, f64::min)
                };
                let per_class_max = |c: usize| {
                    (0..n)
                        .filter(|&t| y[t] == c)
                        .map(|t| x[[t, j]])
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let lo = (0..k).map(per_class_min).fold(f64::NEG_INFINITY, f64::max);
                let hi = (0..k).map(per_class_max).fold(f64::INFINITY, f64::min);
                if lo <= hi && lo <= x[[i, j]] && x[[i, j]] <= hi {
                    count += 1;
                }
            }
            count as f64 / d as f64
        })
        .collect()
}

pub struct LocalSetOracle {
    pub lsc: Vec<f64>,
    pub lsr: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn local_set_oracle(ds: &Dataset) -> LocalSetOracle {
    let y = ds.labels();
    let n = ds.n_instances();
    let size = |c: usize| y.iter().filter(|&&l| l == c).count();
    let enemy: Vec<usize> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| y[j] != y[i])
                .min_by(|&a, &b| dist(ds, i, a).total_cmp(&dist(ds, i, b)).then(a.cmp(&b)))
                .unwrap()
        })
        .collect();
    let local: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let r = dist(ds, i, enemy[i]);
            (0..n)
                .filter(|&z| z != i && y[z] == y[i] && dist(ds, i, z) < r)
                .collect()
        })
        .collect();
    let mut out = LocalSetOracle {
        lsc: vec![],
        lsr: vec![],
        u: vec![],
        h: vec![],
    };
    for i in 0..n {
        let n_c = size(y[i]);
        let mates = (n_c - 1) as f64;
        out.lsc.push(1.0 - local[i].len() as f64 / mates);
        let far = (0..n)
            .filter(|&z| z != i && y[z] == y[i])
            .map(|z| dist(ds, i, z))
            .fold(0.0, f64::max);
        out.lsr.push(if far == 0.0 {
            1.0
        } else {
            1.0 - (dist(ds, i, enemy[i]) / far).min(1.0)
        });
        let used = (0..n)
            .filter(|&z| y[z] == y[i] && local[z].contains(&i))
            .count();
        out.u.push(1.0 - used as f64 / mates);
        let harmed = (0..n).filter(|&z| enemy[z] == i).count();
        out.h.push(harmed as f64 / (n - n_c) as f64);
    }
    out
}

/// Writes a two-class Gaussian table (`f0..f{d-1}`, `label`) to `path`.
pub fn write_csv_dataset(path: &std::path::Path, seed: u64, n: usize, d: usize, shift: f64) {
    let mut r = rng(seed);
    let mut text = (0..d)
        .map(|j| format!("f{j}"))
        .collect::<Vec<_>>()
        .join(",");
    text.push_str(",label\n");
    for i in 0..n {
        let c = i % 2;
        let row: Vec<String> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                format!("{}", z + if c == 0 { -shift } else { shift })
            })
            .collect();
        text.push_str(&row.join(","));
        text.push_str(if c == 0 { ",neg\n" } else { ",pos\n" });
    }
    std::fs::write(path, text).unwrap();
}

/// A small config for `dataset` writing to `out`.
pub fn quick_config(
    dataset: &std::path::Path,
    out: &std::path::Path,
    seed: u64,
) -> instance_space::RunConfig {
    let mut c = instance_space::RunConfig::new(dataset, "label");
    c.output_dir = out.to_path_buf();
    c.seed = seed;
    c.restarts = 3;
    c
}
