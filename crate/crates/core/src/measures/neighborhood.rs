//! kDN and N2 from the sorted neighbor lists.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distance::DistanceIndex;
use crate::error::{Error, Result};

/// Fraction of the `k` nearest neighbors whose label differs.
pub fn measure_kdn(dataset: &Dataset, index: &DistanceIndex, k: usize) -> Result<Vec<f64>> {
    let n = dataset.n_instances();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "kDN neighbor count {k} outside 1..{n}"
        )));
    }
    let labels = dataset.labels();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let disagree = index
                .k_nearest(i, k)
                .iter()
                .filter(|&&j| labels[j] != labels[i])
                .count();
            disagree as f64 / k as f64
        })
        .collect())
}

/// `d_intra / (d_intra + d_extra)` with nearest same-label and nearest
/// other-label distances; `0.5` when both are zero.
pub fn measure_n2(dataset: &Dataset, index: &DistanceIndex) -> Vec<f64> {
    let labels = dataset.labels();
    (0..dataset.n_instances())
        .into_par_iter()
        .map(|i| {
            let nearest = |same: bool| {
                index
                    .neighbors(i)
                    .iter()
                    .find(|&&j| (labels[j] == labels[i]) == same)
                    .map(|&j| index.distance(i, j))
                    .expect("every class has two members and there are two classes")
            };
            n2_ratio(nearest(true), nearest(false))
        })
        .collect()
}

pub(crate) fn n2_ratio(intra: f64, extra: f64) -> f64 {
    let total = intra + extra;
    if total == 0.0 {
        0.5
    } else {
        intra / total
    }
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
    fn kdn_extremes() {
        let ds = line(&[0.0, 0.01, 0.02, 0.9, 0.91, 0.92], &[0, 0, 0, 1, 1, 1]);
        let idx = build_distance_index(&ds);
        assert!(measure_kdn(&ds, &idx, 2).unwrap().iter().all(|&v| v == 0.0));

        let ds = line(&[0.0, 0.1, 0.5, 0.6, 0.61, 0.62], &[0, 1, 0, 1, 0, 0]);
        let idx = build_distance_index(&ds);
        // Instance 1 at 0.1: neighbor 0 (class 0) is the single nearest.
        assert_eq!(measure_kdn(&ds, &idx, 1).unwrap()[1], 1.0);
    }

    #[test]
    fn kdn_rejects_bad_k() {
        let ds = line(&[0.0, 0.1, 0.5, 0.6], &[0, 1, 0, 1]);
        let idx = build_distance_index(&ds);
        assert!(measure_kdn(&ds, &idx, 0).is_err());
        assert!(measure_kdn(&ds, &idx, 4).is_err());
    }

    #[test]
    fn n2_reference_values() {
        assert_eq!(n2_ratio(0.0, 2.0), 0.0);
        assert_eq!(n2_ratio(1.5, 1.5), 0.5);
        assert_eq!(n2_ratio(3.0, 1.0), 0.75);
        assert_eq!(n2_ratio(0.0, 0.0), 0.5);
    }

    #[test]
    fn n2_on_duplicates() {
        let ds = line(&[0.2, 0.2, 0.8, 0.9], &[0, 0, 1, 1]);
        let idx = build_distance_index(&ds);
        let n2 = measure_n2(&ds, &idx);
        assert_eq!(n2[0], 0.0);
        assert!((n2[2] - 0.1 / (0.1 + 0.6)).abs() < 1e-12);
    }
}
