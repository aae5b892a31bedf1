//! F1: fraction of features on which an instance lies in the class-overlap
//! interval.

use crate::dataset::Dataset;

/// Per feature, the overlap interval is `[max_c min_c, min_c max_c]` over the
/// per-class ranges; it is empty when the lower end exceeds the upper.
pub fn overlap_intervals(dataset: &Dataset) -> Vec<Option<(f64, f64)>> {
    let k = dataset.n_classes();
    let labels = dataset.labels();
    dataset
        .features()
        .columns()
        .into_iter()
        .map(|col| {
            let mut lo = vec![f64::INFINITY; k];
            let mut hi = vec![f64::NEG_INFINITY; k];
            for (v, &l) in col.iter().zip(labels) {
                lo[l] = lo[l].min(*v);
                hi[l] = hi[l].max(*v);
            }
            let start = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let end = hi.iter().copied().fold(f64::INFINITY, f64::min);
            (start <= end).then_some((start, end))
        })
        .collect()
}

pub fn measure_f1(dataset: &Dataset) -> Vec<f64> {
    let intervals = overlap_intervals(dataset);
    let d = dataset.n_features() as f64;
    dataset
        .features()
        .outer_iter()
        .map(|row| {
            let inside = row
                .iter()
                .zip(&intervals)
                .filter(|(v, iv)| iv.is_some_and(|(lo, hi)| lo <= **v && **v <= hi))
                .count();
            inside as f64 / d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(x: ndarray::Array2<f64>, y: Vec<usize>) -> Dataset {
        let names = (0..x.ncols()).map(|j| format!("f{j}")).collect();
        Dataset::new(x, y, names, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn separated_ranges_give_zero() {
        let d = ds(
            array![[0.0, 1.0], [0.2, 0.9], [0.8, 0.1], [1.0, 0.0]],
            vec![0, 0, 1, 1],
        );
        assert_eq!(measure_f1(&d), vec![0.0; 4]);
    }

    #[test]
    fn identical_ranges_give_one() {
        let d = ds(
            array![[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]],
            vec![0, 0, 1, 1],
        );
        assert_eq!(measure_f1(&d), vec![1.0; 4]);
    }

    #[test]
    fn touching_ranges_overlap_at_a_point() {
        let d = ds(array![[0.0], [0.5], [0.5], [1.0]], vec![0, 0, 1, 1]);
        assert_eq!(overlap_intervals(&d), vec![Some((0.5, 0.5))]);
        assert_eq!(measure_f1(&d), vec![0.0, 1.0, 1.0, 0.0]);
    }
}
