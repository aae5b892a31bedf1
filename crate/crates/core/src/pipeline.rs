//! End-to-end run: config, orchestration and the on-disk bundle.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::{load_dataset, Dataset, IngestOptions, RawRecords};
use crate::error::{Error, Result};
use crate::folds::stratified_kfold;
use crate::footprints::{
    compute_footprints, default_tau_good, label_by_hardness, label_by_log_loss, Footprint,
    FootprintConfig, DEFAULT_EASINESS_THRESHOLD, DEFAULT_PURITY_MIN, EASINESS_OWNER,
};
use crate::measures::{compute_hardness_matrix, HardnessConfig, HardnessMatrix, Measure};
use crate::pool::{
    default_pool, evaluate_pool, instance_hardness, pool_from_names, PerformanceMatrix,
    TuningRecord,
};
use crate::projection::{fit_projection, fit_rotation, ProjectionModel, DEFAULT_RESTARTS};
use crate::rng::derive_seed;
use crate::selection::{rank_and_aggregate, select_and_standardize, FeatureRanking};

pub const TOOL_NAME: &str = "instance-space";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COORDINATES_FILE: &str = "coordinates.csv";
pub const METADATA_FILE: &str = "metadata.csv";
pub const RAW_RECORDS_FILE: &str = "raw_records.csv";
pub const FOOTPRINTS_FILE: &str = "footprints.json";
pub const MODEL_FILE: &str = "model.json";
pub const RANKING_FILE: &str = "ranking.json";

pub const BUNDLE_FILES: [&str; 7] = [
    MANIFEST_FILE,
    COORDINATES_FILE,
    METADATA_FILE,
    RAW_RECORDS_FILE,
    FOOTPRINTS_FILE,
    MODEL_FILE,
    RANKING_FILE,
];

pub const IH_COLUMN: &str = "IH";
pub const CLASS_COLUMN: &str = "class";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Log-loss at or below which an algorithm counts as performing well.
    pub tau_good: f64,
    /// Instances with IH strictly below this are easy.
    pub easiness: f64,
    /// Minimum purity for a footprint hull to be kept.
    pub purity_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_good: default_tau_good(),
            easiness: DEFAULT_EASINESS_THRESHOLD,
            purity_min: DEFAULT_PURITY_MIN,
        }
    }
}

/// Run configuration, read from JSON. Only `dataset` and `target` are
/// required; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub target: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_kdn_k")]
    pub kdn_k: usize,
    /// Number of measures kept for the projection.
    #[serde(default = "default_keep")]
    pub keep: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Learner names; all seven when absent.
    #[serde(default)]
    pub learners: Option<Vec<String>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub impute_missing: bool,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    #[serde(default)]
    pub dcp_from_pruned: bool,
}

fn default_delimiter() -> String {
    ",".into()
}
fn default_folds() -> usize {
    5
}
fn default_kdn_k() -> usize {
    5
}
fn default_keep() -> usize {
    8
}
fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("bundle")
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, target: impl Into<String>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            target: target.into(),
            delimiter: default_delimiter(),
            seed: 0,
            folds: default_folds(),
            kdn_k: default_kdn_k(),
            keep: default_keep(),
            restarts: default_restarts(),
            thresholds: Thresholds::default(),
            learners: None,
            output_dir: default_output_dir(),
            impute_missing: false,
            categorical_columns: Vec::new(),
            ignore_columns: Vec::new(),
            dcp_from_pruned: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. Relative `dataset` and `output_dir` paths are
    /// taken relative to the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = RunConfig::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if config.dataset.is_relative() {
            config.dataset = base.join(&config.dataset);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.target.is_empty() {
            return fail("target column is empty".into());
        }
        if self.delimiter.len() != 1 {
            return fail(format!(
                "delimiter must be a single ASCII character, got {:?}",
                self.delimiter
            ));
        }
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.kdn_k < 1 {
            return fail("kdn_k must be at least 1".into());
        }
        if !(2..=Measure::COUNT).contains(&self.keep) {
            return fail(format!(
                "keep must be in 2..={}, got {}",
                Measure::COUNT,
                self.keep
            ));
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("tau_good", t.tau_good),
            ("easiness", t.easiness),
            ("purity_min", t.purity_min),
        ] {
            if !v.is_finite() {
                return fail(format!("threshold {name} is not finite"));
            }
        }
        if !(0.0..=1.0).contains(&t.purity_min) {
            return fail(format!("purity_min {} outside [0, 1]", t.purity_min));
        }
        if let Some(names) = &self.learners {
            pool_from_names(names)?;
        }
        Ok(())
    }

    fn ingest_options(&self) -> IngestOptions {
        let mut opts = IngestOptions::new(self.target.clone());
        opts.delimiter = self.delimiter.as_bytes()[0];
        opts.impute_missing = self.impute_missing;
        opts.categorical_columns = self.categorical_columns.clone();
        opts.ignore_columns = self.ignore_columns.clone();
        opts
    }
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct AnalysisBundle {
    pub config: RunConfig,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub labels: Vec<usize>,
    /// `n x 2`, rotated.
    pub coordinates: Array2<f64>,
    pub hardness: HardnessMatrix,
    /// Per-algorithm log-loss.
    pub performance: PerformanceMatrix,
    pub instance_hardness: Vec<f64>,
    pub raw_records: RawRecords,
    pub footprints: Vec<Footprint>,
    pub footprint_config: FootprintConfig,
    pub model: ProjectionModel,
    pub ranking: FeatureRanking,
    pub tuning: Vec<TuningRecord>,
}

impl AnalysisBundle {
    pub fn n_instances(&self) -> usize {
        self.coordinates.nrows()
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(Error::at_stage(name))
}

/// Loads the dataset and runs every stage. Nothing is written.
pub fn run_pipeline(config: &RunConfig) -> Result<AnalysisBundle> {
    stage("config", config.validate())?;
    info!("loading {}", config.dataset.display());
    let dataset = stage(
        "load",
        load_dataset(&config.dataset, &config.ingest_options()),
    )?;
    analyze(&dataset, config)
}

/// Runs every stage after loading on an in-memory dataset.
pub fn analyze(dataset: &Dataset, config: &RunConfig) -> Result<AnalysisBundle> {
    stage("config", config.validate())?;
    stage("load", dataset.check_min_size())?;
    let n = dataset.n_instances();
    info!(
        "{n} instances, {} features, {} classes",
        dataset.n_features(),
        dataset.n_classes()
    );

    let folds = stage(
        "folds",
        stratified_kfold(
            dataset.labels(),
            config.folds,
            derive_seed(config.seed, &[1]),
        ),
    )?;

    info!("computing hardness measures");
    let hardness_config = HardnessConfig {
        kdn_k: config.kdn_k,
        seed: derive_seed(config.seed, &[2]),
        dcp_from_pruned: config.dcp_from_pruned,
    };
    let hardness = stage(
        "hardness",
        compute_hardness_matrix(dataset, &hardness_config),
    )?;

    let pool = stage(
        "pool",
        match &config.learners {
            Some(names) => pool_from_names(names),
            None => Ok(default_pool()),
        },
    )?;
    info!(
        "evaluating {} learners over {} folds",
        pool.len(),
        config.folds
    );
    let evaluation = stage(
        "pool",
        evaluate_pool(dataset, &folds, &pool, derive_seed(config.seed, &[3])),
    )?;
    let ih = stage(
        "instance_hardness",
        instance_hardness(&evaluation.probabilities),
    )?;

    info!("ranking measures");
    let ranking = stage(
        "selection",
        rank_and_aggregate(&hardness, &evaluation.performance),
    )?;
    let meta = stage(
        "selection",
        select_and_standardize(&hardness, &evaluation.performance, &ranking, config.keep),
    )?;

    info!(
        "fitting projection with {} random restarts",
        config.restarts
    );
    let mut model = stage(
        "projection",
        fit_projection(&meta, config.restarts, derive_seed(config.seed, &[4])),
    )?;
    let unrotated = model.embed_unrotated(&meta.feature_block);
    stage("rotation", fit_rotation(&mut model, &unrotated, &ih))?;
    let coordinates = model.embed_standardized(&meta.feature_block);

    info!("computing footprints");
    let mut labelings: Vec<_> = evaluation
        .performance
        .algorithm_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = evaluation.performance.values.column(j).to_vec();
            label_by_log_loss(name, &col, config.thresholds.tau_good)
        })
        .collect();
    labelings.push(label_by_hardness(&ih, config.thresholds.easiness));
    let footprint_config = FootprintConfig {
        purity_min: config.thresholds.purity_min,
        ..FootprintConfig::default()
    };
    let footprints = stage(
        "footprints",
        compute_footprints(&coordinates, &labelings, &footprint_config),
    )?;

    Ok(AnalysisBundle {
        config: config.clone(),
        feature_names: dataset.feature_names().to_vec(),
        class_names: dataset.class_names().to_vec(),
        labels: dataset.labels().to_vec(),
        coordinates,
        hardness,
        performance: evaluation.performance,
        instance_hardness: ih,
        raw_records: dataset.raw_records().clone(),
        footprints,
        footprint_config,
        model,
        ranking,
        tuning: evaluation.tuning,
    })
}

/// Runs the pipeline and writes the bundle to `config.output_dir`.
pub fn run_and_write(config: &RunConfig) -> Result<AnalysisBundle> {
    let bundle = run_pipeline(config)?;
    stage("bundle", write_bundle(&bundle, &config.output_dir))?;
    Ok(bundle)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    created_unix: u64,
    seed: u64,
    config: &'a RunConfig,
    n_instances: usize,
    feature_names: &'a [String],
    class_names: &'a [String],
    algorithms: &'a [String],
    measures: Vec<&'static str>,
    files: [&'static str; 7],
}

#[derive(Serialize)]
struct FootprintsFile<'a> {
    tau_good: f64,
    easiness_threshold: f64,
    purity_min: f64,
    min_pts: usize,
    eps_rank: usize,
    footprints: &'a [Footprint],
}

#[derive(Serialize)]
struct ModelFile<'a> {
    projection: &'a ProjectionModel,
    tuning: &'a [TuningRecord],
}

#[derive(Serialize)]
struct RankingFile<'a> {
    selected: &'a [Measure],
    #[serde(flatten)]
    ranking: &'a FeatureRanking,
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidBundle(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// File name and contents of each bundle file, in [`BUNDLE_FILES`] order.
pub fn bundle_contents(bundle: &AnalysisBundle) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let n = bundle.n_instances();
    let algorithms = &bundle.performance.algorithm_names;
    let created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());

    let manifest = json_bytes(&Manifest {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        created_unix,
        seed: bundle.config.seed,
        config: &bundle.config,
        n_instances: n,
        feature_names: &bundle.feature_names,
        class_names: &bundle.class_names,
        algorithms,
        measures: HardnessMatrix::measure_names(),
        files: BUNDLE_FILES,
    })?;

    let coordinates = csv_bytes(
        &["instance_id".into(), "z1".into(), "z2".into()],
        bundle
            .coordinates
            .outer_iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r[0].to_string(), r[1].to_string()]),
    )?;

    let mut meta_header = vec!["instance_id".to_string()];
    meta_header.extend(
        HardnessMatrix::measure_names()
            .into_iter()
            .map(String::from),
    );
    meta_header.extend(algorithms.iter().cloned());
    meta_header.push(IH_COLUMN.into());
    meta_header.push(CLASS_COLUMN.into());
    let metadata = csv_bytes(
        &meta_header,
        (0..n).map(|i| {
            let mut row = vec![i.to_string()];
            row.extend(bundle.hardness.row(i).iter().map(f64::to_string));
            row.extend(bundle.performance.values.row(i).iter().map(f64::to_string));
            row.push(bundle.instance_hardness[i].to_string());
            row.push(bundle.class_names[bundle.labels[i]].clone());
            row
        }),
    )?;

    let mut raw_header = vec!["instance_id".to_string()];
    raw_header.extend(bundle.raw_records.header.iter().cloned());
    let raw = csv_bytes(
        &raw_header,
        bundle.raw_records.rows.iter().enumerate().map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(r.iter().cloned());
            row
        }),
    )?;

    let footprints = json_bytes(&FootprintsFile {
        tau_good: bundle.config.thresholds.tau_good,
        easiness_threshold: bundle.config.thresholds.easiness,
        purity_min: bundle.footprint_config.purity_min,
        min_pts: bundle.footprint_config.min_pts,
        eps_rank: bundle.footprint_config.eps_rank,
        footprints: &bundle.footprints,
    })?;
    let model = json_bytes(&ModelFile {
        projection: &bundle.model,
        tuning: &bundle.tuning,
    })?;
    let ranking = json_bytes(&RankingFile {
        selected: &bundle.model.selected_measures,
        ranking: &bundle.ranking,
    })?;

    Ok(vec![
        (MANIFEST_FILE, manifest),
        (COORDINATES_FILE, coordinates),
        (METADATA_FILE, metadata),
        (RAW_RECORDS_FILE, raw),
        (FOOTPRINTS_FILE, footprints),
        (MODEL_FILE, model),
        (RANKING_FILE, ranking),
    ])
}

fn is_replaceable(dir: &Path) -> Result<bool> {
    if !dir.exists() {
        return Ok(true);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut empty = true;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        empty = false;
        let name = entry.file_name();
        if !BUNDLE_FILES.iter().any(|f| name == *f) {
            return Ok(false);
        }
    }
    Ok(empty || dir.join(MANIFEST_FILE).exists())
}

/// Writes the seven files into `dir`. Files go to a sibling temporary
/// directory first, which replaces `dir` only once complete; an existing
/// `dir` is replaced only if it is empty or holds nothing but bundle files.
pub fn write_bundle(bundle: &AnalysisBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if !is_replaceable(dir)? {
        return Err(Error::InvalidBundle(format!(
            "{} exists and holds files other than a bundle",
            dir.display()
        )));
    }
    let contents = bundle_contents(bundle)?;
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let leaf = dir
        .file_name()
        .map_or("bundle".into(), |s| s.to_string_lossy().into_owned());
    let tmp = parent.join(format!(".{leaf}.partial-{}", std::process::id()));

    let written = (|| -> Result<()> {
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
        for (name, bytes) in &contents {
            let path = tmp.join(name);
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(bytes).map_err(|e| Error::io(&path, e))?;
        }
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))
    })();
    if written.is_err() && tmp.exists() {
        let _ = fs::remove_dir_all(&tmp);
    }
    written
}

/// What a valid bundle contains, as read back by [`validate_bundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSummary {
    pub n_instances: usize,
    pub algorithms: Vec<String>,
    pub footprint_owners: Vec<String>,
    pub selected_measures: Vec<Measure>,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidBundle(msg.into()))
}

fn read_csv(dir: &Path, name: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let path = dir.join(name);
    let mut r =
        csv::Reader::from_path(&path).map_err(|e| Error::InvalidBundle(format!("{name}: {e}")))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::InvalidBundle(format!("{name}: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidBundle(format!("{name}: {e}")))?;
    if header.first().map(String::as_str) != Some("instance_id") {
        return invalid(format!("{name}: first column must be instance_id"));
    }
    Ok((header, rows))
}

fn read_json(dir: &Path, name: &str) -> Result<Value> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidBundle(format!("{name}: {e}")))
}

fn ids_of(name: &str, rows: &[csv::StringRecord]) -> Result<Vec<usize>> {
    rows.iter()
        .enumerate()
        .map(|(r, rec)| {
            rec.get(0)
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| {
                    Error::InvalidBundle(format!("{name}: bad instance_id on row {}", r + 1))
                })
        })
        .collect()
}

fn check_numeric(
    name: &str,
    rows: &[csv::StringRecord],
    cols: std::ops::Range<usize>,
) -> Result<()> {
    for (r, rec) in rows.iter().enumerate() {
        for c in cols.clone() {
            let ok = rec
                .get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .is_some_and(f64::is_finite);
            if !ok {
                return invalid(format!(
                    "{name}: non-numeric value on row {} column {}",
                    r + 1,
                    c + 1
                ));
            }
        }
    }
    Ok(())
}

/// Checks presence of the seven files, their formats, and that every
/// cross-reference resolves.
pub fn validate_bundle(dir: impl AsRef<Path>) -> Result<BundleSummary> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return invalid(format!("{} is not a directory", dir.display()));
    }
    for f in BUNDLE_FILES {
        if !dir.join(f).is_file() {
            return invalid(format!("missing {f}"));
        }
    }

    let (coord_header, coord_rows) = read_csv(dir, COORDINATES_FILE)?;
    if coord_header != ["instance_id", "z1", "z2"] {
        return invalid(format!(
            "{COORDINATES_FILE}: header must be instance_id,z1,z2"
        ));
    }
    check_numeric(COORDINATES_FILE, &coord_rows, 1..3)?;
    let ids = ids_of(COORDINATES_FILE, &coord_rows)?;
    let id_set: BTreeSet<usize> = ids.iter().copied().collect();
    if id_set.len() != ids.len() {
        return invalid(format!("{COORDINATES_FILE}: duplicate instance_id"));
    }
    let n = ids.len();
    if n == 0 {
        return invalid(format!("{COORDINATES_FILE}: no instances"));
    }

    let check_ids = |name: &str, rows: &[csv::StringRecord]| -> Result<()> {
        let these = ids_of(name, rows)?;
        if these.len() != n {
            return invalid(format!("{name}: {} rows, expected {n}", these.len()));
        }
        let set: BTreeSet<usize> = these.into_iter().collect();
        if set != id_set {
            return invalid(format!(
                "{name}: instance ids differ from {COORDINATES_FILE}"
            ));
        }
        Ok(())
    };

    let (meta_header, meta_rows) = read_csv(dir, METADATA_FILE)?;
    check_ids(METADATA_FILE, &meta_rows)?;
    let measures = HardnessMatrix::measure_names();
    let k = meta_header.len();
    if k < 1 + Measure::COUNT + 1 + 2
        || meta_header[1..=Measure::COUNT] != measures[..]
        || meta_header[k - 2] != IH_COLUMN
        || meta_header[k - 1] != CLASS_COLUMN
    {
        return invalid(format!(
            "{METADATA_FILE}: header must be instance_id, the 13 measures, algorithm columns, {IH_COLUMN}, {CLASS_COLUMN}"
        ));
    }
    check_numeric(METADATA_FILE, &meta_rows, 1..k - 1)?;
    let algorithms: Vec<String> = meta_header[1 + Measure::COUNT..k - 2].to_vec();

    let (_, raw_rows) = read_csv(dir, RAW_RECORDS_FILE)?;
    check_ids(RAW_RECORDS_FILE, &raw_rows)?;

    let manifest = read_json(dir, MANIFEST_FILE)?;
    let manifest_algorithms: Option<Vec<String>> = manifest
        .get("algorithms")
        .and_then(|v| serde_json::from_value(v.clone()).ok());
    if manifest_algorithms.as_ref() != Some(&algorithms) {
        return invalid(format!(
            "{MANIFEST_FILE}: algorithms do not match {METADATA_FILE} columns"
        ));
    }
    if manifest.get("n_instances").and_then(Value::as_u64) != Some(n as u64) {
        return invalid(format!(
            "{MANIFEST_FILE}: n_instances does not match {COORDINATES_FILE}"
        ));
    }

    let footprints = read_json(dir, FOOTPRINTS_FILE)?;
    let list: Vec<Footprint> = footprints
        .get("footprints")
        .cloned()
        .ok_or_else(|| Error::InvalidBundle(format!("{FOOTPRINTS_FILE}: no footprints list")))
        .and_then(|v| {
            serde_json::from_value(v)
                .map_err(|e| Error::InvalidBundle(format!("{FOOTPRINTS_FILE}: {e}")))
        })?;
    let mut owners = Vec::with_capacity(list.len());
    for fp in &list {
        if fp.owner != EASINESS_OWNER && !algorithms.contains(&fp.owner) {
            return invalid(format!(
                "{FOOTPRINTS_FILE}: owner `{}` has no metadata column",
                fp.owner
            ));
        }
        if !(0.0..=1.0).contains(&fp.purity) || !(fp.area >= 0.0) || !(fp.density >= 0.0) {
            return invalid(format!(
                "{FOOTPRINTS_FILE}: metrics of `{}` out of range",
                fp.owner
            ));
        }
        if fp.polygons.iter().any(|p| p.vertices.len() < 3) {
            return invalid(format!(
                "{FOOTPRINTS_FILE}: polygon of `{}` has fewer than 3 vertices",
                fp.owner
            ));
        }
        owners.push(fp.owner.clone());
    }

    let model = read_json(dir, MODEL_FILE)?;
    let projection: ProjectionModel = model
        .get("projection")
        .cloned()
        .ok_or_else(|| Error::InvalidBundle(format!("{MODEL_FILE}: no projection")))
        .and_then(|v| {
            serde_json::from_value(v)
                .map_err(|e| Error::InvalidBundle(format!("{MODEL_FILE}: {e}")))
        })?;
    let m = projection.selected_measures.len();
    let a = projection.algorithm_names.len();
    if projection.projection.shape() != (2, m)
        || projection.feature_reconstruction.shape() != (m, 2)
        || projection.performance_reconstruction.shape() != (a, 2)
        || projection.rotation.shape() != (2, 2)
        || projection.feature_scales.len() != m
        || projection.performance_scales.len() != a
    {
        return invalid(format!("{MODEL_FILE}: matrix shapes are inconsistent"));
    }
    if projection.algorithm_names != algorithms {
        return invalid(format!(
            "{MODEL_FILE}: algorithms do not match {METADATA_FILE} columns"
        ));
    }

    let ranking = read_json(dir, RANKING_FILE)?;
    let selected: Vec<Measure> = ranking
        .get("selected")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .ok_or_else(|| Error::InvalidBundle(format!("{RANKING_FILE}: no selected measures")))?;
    if selected != projection.selected_measures {
        return invalid(format!(
            "{RANKING_FILE}: selected measures differ from {MODEL_FILE}"
        ));
    }
    let ranked: Option<Vec<BTreeMap<String, Value>>> = ranking
        .get("aggregated")
        .and_then(|v| serde_json::from_value(v.clone()).ok());
    if ranked.map(|r| r.len()) != Some(Measure::COUNT) {
        return invalid(format!(
            "{RANKING_FILE}: aggregated ranking must list all 13 measures"
        ));
    }

    Ok(BundleSummary {
        n_instances: n,
        algorithms,
        footprint_owners: owners,
        selected_measures: selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(r#"{"dataset": "d.csv", "target": "y"}"#).unwrap();
        assert_eq!(c, RunConfig::new("d.csv", "y"));
        assert_eq!(c.folds, 5);
        assert_eq!(c.keep, 8);
        assert_eq!(c.restarts, 10);
        assert_eq!(c.thresholds.easiness, 0.4);
        assert_eq!(c.thresholds.purity_min, 0.55);
        assert!((c.thresholds.tau_good - 0.5f64.ln().abs()).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"dataset": "d.csv", "target": "y", "fold": 3}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"dataset": "d.csv", "target": "y", "thresholds": {"tau": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            r#""folds": 1"#,
            r#""keep": 1"#,
            r#""keep": 14"#,
            r#""kdn_k": 0"#,
            r#""delimiter": ";;""#,
            r#""thresholds": {"purity_min": 1.5}"#,
            r#""learners": ["perceptron"]"#,
            r#""learners": []"#,
        ] {
            let text = format!(r#"{{"dataset": "d.csv", "target": "y", {bad}}}"#);
            assert!(
                matches!(RunConfig::from_json(&text), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn config_round_trips() {
        let mut c = RunConfig::new("a.csv", "label");
        c.learners = Some(vec!["knn".into(), "naive_bayes".into()]);
        c.seed = 42;
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn single_fold_fails_before_loading() {
        let mut c = RunConfig::new("/definitely/not/here.csv", "y");
        c.folds = 1;
        match run_pipeline(&c) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "config"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_dataset_names_the_load_stage() {
        let c = RunConfig::new("/definitely/not/here.csv", "y");
        match run_pipeline(&c) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "load"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
