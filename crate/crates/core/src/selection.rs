//! Ranking hardness measures against per-instance performance and building
//! the standardized metadata used by the projection.

use ndarray::{Array2, ArrayView1, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{HardnessMatrix, Measure};
use crate::pool::PerformanceMatrix;

/// Average (1-based) ranks, ties sharing the mean of their positions.
pub fn average_ranks(values: ArrayView1<'_, f64>) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman correlation with a flag set when either input is constant (the
/// correlation is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn spearman_correlation(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<Correlation> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "spearman needs two vectors of equal length >= 3, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    Ok(match pearson(&ra, &rb) {
        Some(value) => Correlation {
            value,
            degenerate: false,
        },
        None => Correlation {
            value: 0.0,
            degenerate: true,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredMeasure {
    pub measure: Measure,
    /// Spearman correlation with the algorithm's log-loss.
    pub correlation: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmRanking {
    pub algorithm: String,
    /// Strongest absolute correlation first.
    pub order: Vec<ScoredMeasure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedRank {
    pub measure: Measure,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRanking {
    pub per_algorithm: Vec<AlgorithmRanking>,
    pub aggregated: Vec<AggregatedRank>,
}

impl FeatureRanking {
    pub fn aggregated_order(&self) -> Vec<Measure> {
        self.aggregated.iter().map(|r| r.measure).collect()
    }
}

/// Mean-rank (Borda) aggregation of per-algorithm orders; ties fall back to
/// the fixed measure column order.
pub fn aggregate_rankings(per_algorithm: &[Vec<Measure>]) -> Vec<AggregatedRank> {
    let voters = per_algorithm.len().max(1) as f64;
    let mut totals = [0.0f64; Measure::COUNT];
    for order in per_algorithm {
        for (pos, m) in order.iter().enumerate() {
            totals[m.index()] += (pos + 1) as f64;
        }
    }
    let mut ranked: Vec<AggregatedRank> = Measure::ALL
        .iter()
        .map(|&measure| AggregatedRank {
            measure,
            mean_rank: totals[measure.index()] / voters,
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.mean_rank
            .total_cmp(&b.mean_rank)
            .then(a.measure.cmp(&b.measure))
    });
    ranked
}

/// Orders measures per algorithm by |Spearman| with its log-loss, then
/// aggregates the orders.
pub fn rank_and_aggregate(
    hardness: &HardnessMatrix,
    perf: &PerformanceMatrix,
) -> Result<FeatureRanking> {
    if hardness.n_instances() != perf.values.nrows() {
        return Err(Error::InvalidParameter(format!(
            "hardness has {} rows, performance {}",
            hardness.n_instances(),
            perf.values.nrows()
        )));
    }
    let mut per_algorithm = Vec::with_capacity(perf.n_algorithms());
    for (j, name) in perf.algorithm_names.iter().enumerate() {
        let loss = perf.values.column(j);
        let mut order = Measure::ALL
            .iter()
            .map(|&m| {
                let c = spearman_correlation(hardness.column(m), loss)?;
                Ok(ScoredMeasure {
                    measure: m,
                    correlation: c.value,
                    degenerate: c.degenerate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        order.sort_by(|a, b| {
            b.correlation
                .abs()
                .total_cmp(&a.correlation.abs())
                .then(a.measure.cmp(&b.measure))
        });
        per_algorithm.push(AlgorithmRanking {
            algorithm: name.clone(),
            order,
        });
    }
    let orders: Vec<Vec<Measure>> = per_algorithm
        .iter()
        .map(|r| r.order.iter().map(|s| s.measure).collect())
        .collect();
    Ok(FeatureRanking {
        aggregated: aggregate_rankings(&orders),
        per_algorithm,
    })
}

/// Mean and (population) standard deviation of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub std: f64,
    /// Constant column: standardized to zeros.
    pub constant: bool,
}

impl ColumnScale {
    pub fn fit(col: ArrayView1<'_, f64>) -> Self {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        // Relative threshold so rounding noise on a constant column does not
        // count as spread.
        let constant = std <= 1e-12 * mean.abs().max(1.0);
        ColumnScale {
            mean,
            std,
            constant,
        }
    }

    pub fn standardize(&self, v: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            (v - self.mean) / self.std
        }
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        if self.constant {
            self.mean
        } else {
            z * self.std + self.mean
        }
    }
}

fn standardize_columns(x: &Array2<f64>) -> (Array2<f64>, Vec<ColumnScale>) {
    let scales: Vec<ColumnScale> = x.axis_iter(Axis(1)).map(ColumnScale::fit).collect();
    let mut out = x.clone();
    for (mut col, s) in out.axis_iter_mut(Axis(1)).zip(&scales) {
        col.mapv_inplace(|v| s.standardize(v));
    }
    (out, scales)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub selected_measures: Vec<Measure>,
    /// `n x m` standardized measure values.
    pub feature_block: Array2<f64>,
    /// `n x |A|` standardized log-loss.
    pub performance_block: Array2<f64>,
    pub feature_scales: Vec<ColumnScale>,
    pub performance_scales: Vec<ColumnScale>,
    pub algorithm_names: Vec<String>,
}

impl MetaDataset {
    /// Builds directly from raw blocks, standardizing both.
    pub fn from_blocks(
        selected_measures: Vec<Measure>,
        features: &Array2<f64>,
        performance: &Array2<f64>,
        algorithm_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != performance.nrows() {
            return Err(Error::InvalidParameter(
                "metadata blocks differ in rows".into(),
            ));
        }
        if features.ncols() != selected_measures.len()
            || performance.ncols() != algorithm_names.len()
        {
            return Err(Error::InvalidParameter(
                "metadata block widths do not match names".into(),
            ));
        }
        let (feature_block, feature_scales) = standardize_columns(features);
        let (performance_block, performance_scales) = standardize_columns(performance);
        Ok(MetaDataset {
            selected_measures,
            feature_block,
            performance_block,
            feature_scales,
            performance_scales,
            algorithm_names,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.feature_block.nrows()
    }

    /// Recovers the unstandardized feature block.
    pub fn destandardized_features(&self) -> Array2<f64> {
        let mut out = self.feature_block.clone();
        for (mut col, s) in out.axis_iter_mut(Axis(1)).zip(&self.feature_scales) {
            col.mapv_inplace(|z| s.destandardize(z));
        }
        out
    }
}

/// Keeps the `m` best aggregated measures and standardizes them together
/// with every performance column.
pub fn select_and_standardize(
    hardness: &HardnessMatrix,
    perf: &PerformanceMatrix,
    ranking: &FeatureRanking,
    m: usize,
) -> Result<MetaDataset> {
    if !(2..=Measure::COUNT).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "keep count {m} outside 2..={}",
            Measure::COUNT
        )));
    }
    let selected: Vec<Measure> = ranking.aggregated_order().into_iter().take(m).collect();
    let cols: Vec<usize> = selected.iter().map(|s| s.index()).collect();
    let features = hardness.values().select(Axis(1), &cols);
    MetaDataset::from_blocks(
        selected,
        &features,
        &perf.values,
        perf.algorithm_names.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn spearman_reference_values() {
        let a = array![1.0, 2.0, 3.0, 4.0];
        assert!((spearman_correlation(a.view(), a.view()).unwrap().value - 1.0).abs() < 1e-15);
        let neg = a.mapv(|v| -v);
        assert!((spearman_correlation(a.view(), neg.view()).unwrap().value + 1.0).abs() < 1e-15);
        // ranks (1,3,2,4): 1 - 6 * 2 / (4 * 15) = 0.8
        let b = array![1.0, 3.0, 2.0, 4.0];
        assert!((spearman_correlation(a.view(), b.view()).unwrap().value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_constant_and_short_inputs() {
        let a = array![1.0, 2.0, 3.0];
        let c = array![5.0, 5.0, 5.0];
        let r = spearman_correlation(a.view(), c.view()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.degenerate);
        assert!(spearman_correlation(array![1.0, 2.0].view(), array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(array![3.0, 1.0, 3.0, 2.0].view()),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    fn order(ms: &[usize]) -> Vec<Measure> {
        let mut o: Vec<Measure> = ms.iter().map(|&i| Measure::ALL[i]).collect();
        o.extend(
            Measure::ALL
                .iter()
                .filter(|m| !o.contains(m))
                .copied()
                .collect::<Vec<_>>(),
        );
        o
    }

    #[test]
    fn single_voter_and_unanimity() {
        let one = order(&[5, 2, 9]);
        let agg: Vec<Measure> = aggregate_rankings(&[one.clone()])
            .into_iter()
            .map(|r| r.measure)
            .collect();
        assert_eq!(agg, one);
        let agg: Vec<Measure> = aggregate_rankings(&[one.clone(), one.clone()])
            .into_iter()
            .map(|r| r.measure)
            .collect();
        assert_eq!(agg, one);
    }

    #[test]
    fn reversed_voters_fall_back_to_column_order() {
        let fwd = order(&[4, 7, 1]);
        let mut rev = fwd.clone();
        rev[..3].reverse();
        let agg = aggregate_rankings(&[fwd, rev]);
        assert_eq!(agg[0].mean_rank, agg[1].mean_rank);
        assert_eq!(agg[1].mean_rank, agg[2].mean_rank);
        let first: Vec<Measure> = agg[..3].iter().map(|r| r.measure).collect();
        assert_eq!(
            first,
            vec![Measure::ALL[1], Measure::ALL[4], Measure::ALL[7]]
        );
    }

    #[test]
    fn standardization_contract_and_inverse() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [4.0, 5.0], [9.0, 5.0]];
        let y = array![[0.1], [0.3], [0.2], [0.9]];
        let meta = MetaDataset::from_blocks(
            vec![Measure::ClassLikelihood, Measure::Harmfulness],
            &x,
            &y,
            vec!["a".into()],
        )
        .unwrap();
        let col: Array1<f64> = meta.feature_block.column(0).to_owned();
        assert!(col.mean().unwrap().abs() < 1e-9);
        assert!((col.std(0.0) - 1.0).abs() < 1e-9);
        assert!(meta.feature_scales[1].constant);
        assert!(meta.feature_block.column(1).iter().all(|&v| v == 0.0));
        let back = meta.destandardized_features();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn keep_count_range() {
        let h = HardnessMatrix::from_values(Array2::zeros((5, 13))).unwrap();
        let p = PerformanceMatrix {
            values: Array2::zeros((5, 1)),
            algorithm_names: vec!["a".into()],
        };
        let r = rank_and_aggregate(&h, &p).unwrap();
        assert!(select_and_standardize(&h, &p, &r, 1).is_err());
        assert!(select_and_standardize(&h, &p, &r, 14).is_err());
        assert_eq!(
            select_and_standardize(&h, &p, &r, 13)
                .unwrap()
                .selected_measures
                .len(),
            13
        );
    }
}
