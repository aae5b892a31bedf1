//! Per-instance hardness measures.
//!
//! Thirteen measures, each oriented so larger values mean the instance is
//! harder to classify and bounded to `[0, 1]`. Columns of a
//! [`HardnessMatrix`] always follow [`Measure::ALL`].

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{build_distance_index, DistanceIndex};
use crate::error::{Error, Result};

pub mod likelihood;
pub mod local_set;
pub mod mst;
pub mod neighborhood;
pub mod overlap;
pub mod tree;

pub use likelihood::{measure_likelihood, LikelihoodMeasures};
pub use local_set::{measure_local_sets, LocalSetIndex, LocalSetMeasures};
pub use mst::{measure_n1, MstGraph};
pub use neighborhood::{measure_kdn, measure_n2};
pub use overlap::measure_f1;
pub use tree::{measure_tree_based, TreeMeasures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "kDN")]
    KDisagreeingNeighbors,
    #[serde(rename = "DCP")]
    DisjunctClassPercentage,
    #[serde(rename = "TD_P")]
    TreeDepthPruned,
    #[serde(rename = "TD_U")]
    TreeDepthUnpruned,
    #[serde(rename = "CL")]
    ClassLikelihood,
    #[serde(rename = "CLD")]
    ClassLikelihoodDifference,
    #[serde(rename = "F1")]
    FeatureOverlap,
    #[serde(rename = "N1")]
    BorderlinePoints,
    #[serde(rename = "N2")]
    IntraExtraRatio,
    #[serde(rename = "LSC")]
    LocalSetCardinality,
    #[serde(rename = "LSR")]
    LocalSetRadius,
    #[serde(rename = "U")]
    Usefulness,
    #[serde(rename = "H")]
    Harmfulness,
}

impl Measure {
    pub const COUNT: usize = 13;

    pub const ALL: [Measure; Measure::COUNT] = [
        Measure::KDisagreeingNeighbors,
        Measure::DisjunctClassPercentage,
        Measure::TreeDepthPruned,
        Measure::TreeDepthUnpruned,
        Measure::ClassLikelihood,
        Measure::ClassLikelihoodDifference,
        Measure::FeatureOverlap,
        Measure::BorderlinePoints,
        Measure::IntraExtraRatio,
        Measure::LocalSetCardinality,
        Measure::LocalSetRadius,
        Measure::Usefulness,
        Measure::Harmfulness,
    ];

    pub fn acronym(self) -> &'static str {
        match self {
            Measure::KDisagreeingNeighbors => "kDN",
            Measure::DisjunctClassPercentage => "DCP",
            Measure::TreeDepthPruned => "TD_P",
            Measure::TreeDepthUnpruned => "TD_U",
            Measure::ClassLikelihood => "CL",
            Measure::ClassLikelihoodDifference => "CLD",
            Measure::FeatureOverlap => "F1",
            Measure::BorderlinePoints => "N1",
            Measure::IntraExtraRatio => "N2",
            Measure::LocalSetCardinality => "LSC",
            Measure::LocalSetRadius => "LSR",
            Measure::Usefulness => "U",
            Measure::Harmfulness => "H",
        }
    }

    pub fn from_acronym(name: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.acronym() == name)
    }

    /// Column position in a [`HardnessMatrix`].
    pub fn index(self) -> usize {
        Measure::ALL
            .iter()
            .position(|&m| m == self)
            .expect("listed in ALL")
    }

    /// Attainable range. Every measure is normalized into `[0, 1]`; some
    /// endpoints are only approached (N2 and H maxima, U minimum).
    pub fn bounds(self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardnessConfig {
    /// Neighbor count for kDN.
    pub kdn_k: usize,
    pub seed: u64,
    /// Take DCP disjuncts from the pruned tree instead of the unpruned one.
    pub dcp_from_pruned: bool,
}

impl Default for HardnessConfig {
    fn default() -> Self {
        HardnessConfig {
            kdn_k: 5,
            seed: 0,
            dcp_from_pruned: false,
        }
    }
}

/// `n x 13` matrix of measure values, columns in [`Measure::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessMatrix {
    values: Array2<f64>,
}

impl HardnessMatrix {
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        if values.ncols() != Measure::COUNT {
            return Err(Error::InvalidParameter(format!(
                "hardness matrix needs {} columns, got {}",
                Measure::COUNT,
                values.ncols()
            )));
        }
        Ok(HardnessMatrix { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_instances(&self) -> usize {
        self.values.nrows()
    }

    pub fn column(&self, measure: Measure) -> ArrayView1<'_, f64> {
        self.values.column(measure.index())
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn measure_names() -> Vec<&'static str> {
        Measure::ALL.iter().map(|m| m.acronym()).collect()
    }

    /// First `(instance, measure, value)` outside the measure's bounds.
    pub fn bound_violation(&self) -> Option<(usize, Measure, f64)> {
        for (i, row) in self.values.outer_iter().enumerate() {
            for (m, &v) in Measure::ALL.iter().zip(row) {
                let (lo, hi) = m.bounds();
                if !(lo..=hi).contains(&v) {
                    return Some((i, *m, v));
                }
            }
        }
        None
    }

    /// CSV with header `instance_id,kDN,...,H`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["instance_id"];
        header.extend(Self::measure_names());
        w.write_record(&header)?;
        for (i, row) in self.values.outer_iter().enumerate() {
            let mut record = vec![i.to_string()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<hardness csv>", e))?;
        Ok(())
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// All thirteen measures for every instance.
pub fn compute_hardness_matrix(
    dataset: &Dataset,
    config: &HardnessConfig,
) -> Result<HardnessMatrix> {
    let index = build_distance_index(dataset);
    compute_hardness_matrix_with(dataset, &index, config)
}

/// As [`compute_hardness_matrix`] with a prebuilt distance index.
pub fn compute_hardness_matrix_with(
    dataset: &Dataset,
    index: &DistanceIndex,
    config: &HardnessConfig,
) -> Result<HardnessMatrix> {
    let n = dataset.n_instances();
    let kdn = measure_kdn(dataset, index, config.kdn_k)?;
    let trees = measure_tree_based(dataset, config.seed, config.dcp_from_pruned);
    let likelihood = measure_likelihood(dataset);
    let f1 = measure_f1(dataset);
    let mst = MstGraph::build(index);
    let n1 = measure_n1(dataset, &mst);
    let n2 = measure_n2(dataset, index);
    let ls_index = LocalSetIndex::build(dataset, index);
    let ls = measure_local_sets(dataset, index, &ls_index);

    let columns: [&[f64]; Measure::COUNT] = [
        &kdn,
        &trees.dcp,
        &trees.td_pruned,
        &trees.td_unpruned,
        &likelihood.cl,
        &likelihood.cld,
        &f1,
        &n1,
        &n2,
        &ls.lsc,
        &ls.lsr,
        &ls.usefulness,
        &ls.harmfulness,
    ];
    let values = Array2::from_shape_fn((n, Measure::COUNT), |(i, j)| columns[j][i]);
    let matrix = HardnessMatrix { values };
    if let Some((i, m, v)) = matrix.bound_violation() {
        return Err(Error::InvalidParameter(format!(
            "measure {} = {v} for instance {i} outside its bounds",
            m.acronym()
        )));
    }
    Ok(matrix)
}
