//! Two-dimensional linear-trend projection of the metadata.
//!
//! With `X` the `n x m` standardized measure block, `Y` the `n x |A|`
//! standardized performance block and `Z = X Aᵀ` the `n x 2` coordinates,
//! the fit minimizes
//!
//! ```text
//! J(A, B, C) = ‖X - Z Bᵀ‖² + ‖Y - Z Cᵀ‖²
//! ```
//!
//! by alternating exact block minimizations. For fixed `A`, `[B; C]` is the
//! least-squares regression of `T = [X Y]` on `Z`. For fixed `D = [B; C]`,
//! the optimal `W = Aᵀ` solves `XᵀX W DᵀD = XᵀT D`, i.e.
//! `W = (XᵀX)⁺ XᵀT D (DᵀD)⁺`. Each step can only lower `J`.
//!
//! After the fit a rotation turns the plane so the least-squares direction of
//! increasing instance hardness points to the upper left, `(-1, 1) / √2`.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::rng::{derive_seed, rng};
use crate::selection::{ColumnScale, MetaDataset};

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 500;
pub const RELATIVE_TOLERANCE: f64 = 1e-8;
const PINV_EPS: f64 = 1e-12;

/// Matrices serialize as arrays of rows.
mod row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
    }
}

pub(crate) fn to_nalgebra(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(x.nrows(), x.ncols(), x.iter().copied())
}

pub(crate) fn to_ndarray(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .pseudo_inverse(PINV_EPS)
        .expect("pseudo-inverse with non-negative epsilon")
}

/// `‖X - Z Bᵀ‖² + ‖Y - Z Cᵀ‖²` with `Z = X Aᵀ`.
pub fn objective(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> f64 {
    let z = x * a.transpose();
    (x - &z * b.transpose()).norm_squared() + (y - &z * c.transpose()).norm_squared()
}

/// Same objective from Gram terms:
/// `‖T‖² - 2 tr(Dᵀ (XᵀT)ᵀ W) + tr(D Wᵀ XᵀX W Dᵀ)` with `T = [X Y]`,
/// `D = [B; C]`, `W = Aᵀ`.
pub fn objective_from_gram(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> f64 {
    let t = stack_columns(x, y);
    let d = stack_rows(b, c);
    let w = a.transpose();
    let xtx = x.transpose() * x;
    let xtt = x.transpose() * &t;
    let cross = (d.transpose() * xtt.transpose() * &w).trace();
    let quad = (&d * w.transpose() * xtx * &w * d.transpose()).trace();
    t.norm_squared() - 2.0 * cross + quad
}

fn stack_columns(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(x.nrows(), x.ncols() + y.ncols());
    t.columns_mut(0, x.ncols()).copy_from(x);
    t.columns_mut(x.ncols(), y.ncols()).copy_from(y);
    t
}

fn stack_rows(b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(b.nrows() + c.nrows(), 2);
    d.rows_mut(0, b.nrows()).copy_from(b);
    d.rows_mut(b.nrows(), c.nrows()).copy_from(c);
    d
}

/// Least-squares `B` and `C` for fixed coordinates `z`.
pub fn solve_reconstruction(
    z: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = stack_columns(x, y);
    // Dᵀ = Z⁺ T
    let dt = pinv(z) * t;
    let b = dt.columns(0, x.ncols()).transpose();
    let c = dt.columns(x.ncols(), y.ncols()).transpose();
    (b, c)
}

/// Per-restart result including the objective after every iteration.
#[derive(Debug, Clone)]
pub struct RestartFit {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Objective of the initial `(A, B, C)` followed by one entry per
    /// accepted iteration; non-increasing.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl RestartFit {
    pub fn objective(&self) -> f64 {
        *self
            .history
            .last()
            .expect("history starts with the initial objective")
    }
}

/// Alternating least squares from a given `A` (2 x m).
///
/// Stops when the relative decrease falls below 1e-8, after 500 iterations,
/// or when rounding makes an iteration increase the objective (that iteration
/// is discarded).
pub fn fit_from(meta: &MetaDataset, init: DMatrix<f64>) -> RestartFit {
    let x = to_nalgebra(&meta.feature_block);
    let y = to_nalgebra(&meta.performance_block);
    fit_from_matrices(&x, &y, init)
}

fn fit_from_matrices(x: &DMatrix<f64>, y: &DMatrix<f64>, init: DMatrix<f64>) -> RestartFit {
    let t = stack_columns(x, y);
    let gram_pinv = pinv(&(x.transpose() * x));
    let xtt = x.transpose() * &t;

    let mut a = init;
    let (mut b, mut c) = solve_reconstruction(&(x * a.transpose()), x, y);
    let mut current = objective(x, y, &a, &b, &c);
    let mut history = vec![current];
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let d = stack_rows(&b, &c);
        let w = &gram_pinv * &xtt * &d * pinv(&(d.transpose() * &d));
        let next_a = w.transpose();
        let (next_b, next_c) = solve_reconstruction(&(x * next_a.transpose()), x, y);
        let next = objective(x, y, &next_a, &next_b, &next_c);
        if !(next <= current) {
            converged = true;
            break;
        }
        let decrease = current - next;
        a = next_a;
        b = next_b;
        c = next_c;
        current = next;
        history.push(current);
        if decrease <= RELATIVE_TOLERANCE * current.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    RestartFit {
        a,
        b,
        c,
        history,
        converged,
    }
}

/// Top-2 principal directions of the (already centered) feature block as a
/// `2 x m` matrix. Each direction's largest-magnitude entry is positive.
pub fn principal_directions(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.ncols();
    let eig = SymmetricEigen::new(x.transpose() * x);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let mut a = DMatrix::zeros(2, m);
    for (r, &k) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = (0..m)
            .max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()).then(j.cmp(&i)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            a[(r, j)] = sign * v[j];
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartInit {
    Pca,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub init: RestartInit,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub selected_measures: Vec<Measure>,
    pub feature_scales: Vec<ColumnScale>,
    pub algorithm_names: Vec<String>,
    pub performance_scales: Vec<ColumnScale>,
    /// `A`, 2 x m.
    #[serde(with = "row_major")]
    pub projection: DMatrix<f64>,
    /// `B`, m x 2.
    #[serde(with = "row_major")]
    pub feature_reconstruction: DMatrix<f64>,
    /// `C`, |A| x 2.
    #[serde(with = "row_major")]
    pub performance_reconstruction: DMatrix<f64>,
    /// `R`, 2 x 2 proper rotation; identity until [`fit_rotation`].
    #[serde(with = "row_major")]
    pub rotation: DMatrix<f64>,
    pub objective: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// Runs one PCA-initialized restart (index 0) and `restarts` random ones
/// (entries uniform in `[-1, 1]`), keeping the lowest objective; ties go to
/// the lower restart index.
pub fn fit_projection(meta: &MetaDataset, restarts: usize, seed: u64) -> Result<ProjectionModel> {
    let n = meta.n_instances();
    let m = meta.feature_block.ncols();
    if m < 2 {
        return Err(Error::Projection(format!(
            "need at least 2 measures, got {m}"
        )));
    }
    if n <= m {
        return Err(Error::Projection(format!(
            "need more instances ({n}) than measures ({m})"
        )));
    }
    if meta.feature_scales.iter().all(|s| s.constant) {
        return Err(Error::Projection(
            "all selected measures are constant".into(),
        ));
    }
    let x = to_nalgebra(&meta.feature_block);
    let y = to_nalgebra(&meta.performance_block);

    let inits: Vec<(RestartInit, DMatrix<f64>)> =
        std::iter::once((RestartInit::Pca, principal_directions(&x)))
            .chain((0..restarts).map(|r| {
                let mut stream = rng(derive_seed(seed, &[r as u64]));
                let a = DMatrix::from_fn(2, m, |_, _| stream.random_range(-1.0..=1.0));
                (RestartInit::Random, a)
            }))
            .collect();

    let fits: Vec<RestartFit> = inits
        .par_iter()
        .map(|(_, a)| fit_from_matrices(&x, &y, a.clone()))
        .collect();

    let summaries: Vec<RestartSummary> = fits
        .iter()
        .zip(&inits)
        .enumerate()
        .map(|(index, (f, (init, _)))| RestartSummary {
            index,
            init: *init,
            objective: f.objective(),
            iterations: f.history.len() - 1,
            converged: f.converged,
        })
        .collect();
    let best = summaries
        .iter()
        .min_by(|p, q| {
            p.objective
                .total_cmp(&q.objective)
                .then(p.index.cmp(&q.index))
        })
        .expect("at least the PCA restart")
        .index;
    let winner = &fits[best];

    Ok(ProjectionModel {
        selected_measures: meta.selected_measures.clone(),
        feature_scales: meta.feature_scales.clone(),
        algorithm_names: meta.algorithm_names.clone(),
        performance_scales: meta.performance_scales.clone(),
        projection: winner.a.clone(),
        feature_reconstruction: winner.b.clone(),
        performance_reconstruction: winner.c.clone(),
        rotation: DMatrix::identity(2, 2),
        objective: winner.objective(),
        best_restart: best,
        restarts: summaries,
    })
}

/// Rotation by `angle` radians counterclockwise.
pub fn rotation_matrix(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Ordinary least squares `ih ≈ w·z + b`; returns `w`, or `None` when the
/// coordinates or `ih` carry no usable variation.
pub fn hardness_direction(coords: &Array2<f64>, ih: &[f64]) -> Option<[f64; 2]> {
    let n = ih.len() as f64;
    let mean_ih = ih.iter().sum::<f64>() / n;
    let mean_z = [coords.column(0).sum() / n, coords.column(1).sum() / n];
    let mut szz = [[0.0; 2]; 2];
    let mut szy = [0.0; 2];
    let mut syy = 0.0;
    for (row, &h) in coords.outer_iter().zip(ih) {
        let dz = [row[0] - mean_z[0], row[1] - mean_z[1]];
        let dy = h - mean_ih;
        syy += dy * dy;
        for p in 0..2 {
            szy[p] += dz[p] * dy;
            for q in 0..2 {
                szz[p][q] += dz[p] * dz[q];
            }
        }
    }
    if syy == 0.0 {
        return None;
    }
    let gram = DMatrix::from_row_slice(2, 2, &[szz[0][0], szz[0][1], szz[1][0], szz[1][1]]);
    let w = pinv(&gram) * DMatrix::from_column_slice(2, 1, &szy);
    let w = [w[0], w[1]];
    if w[0] == 0.0 && w[1] == 0.0 {
        None
    } else {
        Some(w)
    }
}

/// Angle of the target direction `(-1, 1) / √2`.
pub const UPPER_LEFT: f64 = 3.0 * std::f64::consts::FRAC_PI_4;

/// The proper rotation taking direction `w` onto `(-1, 1) / √2`.
pub fn alignment_rotation(w: [f64; 2]) -> DMatrix<f64> {
    rotation_matrix(UPPER_LEFT - w[1].atan2(w[0]))
}

/// Sets the model's rotation from pre-rotation coordinates and instance
/// hardness. Constant hardness (or no linear trend) leaves the identity.
pub fn fit_rotation(
    model: &mut ProjectionModel,
    pre_rotation: &Array2<f64>,
    ih: &[f64],
) -> Result<()> {
    if pre_rotation.nrows() != ih.len() {
        return Err(Error::Projection(format!(
            "{} coordinates for {} hardness values",
            pre_rotation.nrows(),
            ih.len()
        )));
    }
    model.rotation = match hardness_direction(pre_rotation, ih) {
        Some(w) => alignment_rotation(w),
        None => {
            warn!(
                "instance hardness shows no linear trend in the plane; rotation left as identity"
            );
            DMatrix::identity(2, 2)
        }
    };
    Ok(())
}

impl ProjectionModel {
    /// `R · A`, the full linear map from standardized measures to the plane.
    pub fn combined(&self) -> DMatrix<f64> {
        &self.rotation * &self.projection
    }

    /// Coordinates of standardized feature rows (`n x m`), rotation applied.
    pub fn embed_standardized(&self, block: &Array2<f64>) -> Array2<f64> {
        let z = to_nalgebra(block) * self.combined().transpose();
        to_ndarray(&z)
    }

    /// Coordinates before rotation.
    pub fn embed_unrotated(&self, block: &Array2<f64>) -> Array2<f64> {
        to_ndarray(&(to_nalgebra(block) * self.projection.transpose()))
    }

    /// Projects a full 13-value hardness row (in measure column order). NaN
    /// in a selected measure counts as missing.
    pub fn project_row(&self, row: ArrayView1<'_, f64>) -> Result<(f64, f64)> {
        if row.len() != Measure::COUNT {
            return Err(Error::InvalidParameter(format!(
                "expected {} measure values, got {}",
                Measure::COUNT,
                row.len()
            )));
        }
        let values: BTreeMap<Measure, f64> = Measure::ALL
            .iter()
            .zip(row.iter())
            .filter(|(_, v)| !v.is_nan())
            .map(|(m, v)| (*m, *v))
            .collect();
        self.project(&values)
    }

    /// Selects the model's measures, standardizes them with the stored
    /// scales and applies `R · A`.
    pub fn project(&self, values: &BTreeMap<Measure, f64>) -> Result<(f64, f64)> {
        let map = self.combined();
        let (mut z1, mut z2) = (0.0, 0.0);
        for (j, (m, scale)) in self
            .selected_measures
            .iter()
            .zip(&self.feature_scales)
            .enumerate()
        {
            let v = values.get(m).ok_or_else(|| {
                Error::InvalidParameter(format!("missing measure {}", m.acronym()))
            })?;
            let s = scale.standardize(*v);
            z1 += map[(0, j)] * s;
            z2 += map[(1, j)] * s;
        }
        Ok((z1, z2))
    }

    /// Recomputes `J` from the stored matrices.
    pub fn recompute_objective(&self, meta: &MetaDataset) -> f64 {
        objective(
            &to_nalgebra(&meta.feature_block),
            &to_nalgebra(&meta.performance_block),
            &self.projection,
            &self.feature_reconstruction,
            &self.performance_reconstruction,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Measure;

    fn random_meta(n: usize, m: usize, a: usize, seed: u64) -> MetaDataset {
        let mut r = rng(seed);
        let x = Array2::from_shape_fn((n, m), |_| r.random::<f64>());
        let y = Array2::from_shape_fn((n, a), |_| r.random::<f64>());
        MetaDataset::from_blocks(
            Measure::ALL[..m].to_vec(),
            &x,
            &y,
            (0..a).map(|j| format!("a{j}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn reconstruction_matches_normal_equations() {
        let meta = random_meta(30, 4, 2, 1);
        let x = to_nalgebra(&meta.feature_block);
        let y = to_nalgebra(&meta.performance_block);
        let z = &x
            * DMatrix::from_row_slice(2, 4, &[0.3, -0.1, 0.5, 0.2, -0.4, 0.7, 0.1, 0.0])
                .transpose();
        let (b, c) = solve_reconstruction(&z, &x, &y);
        // Bᵀ = (ZᵀZ)⁻¹ Zᵀ X by direct inversion.
        let ztz_inv = (z.transpose() * &z).try_inverse().unwrap();
        let bt = &ztz_inv * z.transpose() * &x;
        let ct = &ztz_inv * z.transpose() * &y;
        assert!((b.transpose() - bt).abs().max() < 1e-8);
        assert!((c.transpose() - ct).abs().max() < 1e-8);
    }

    #[test]
    fn objective_two_ways_agree() {
        let meta = random_meta(40, 5, 3, 2);
        let fit = fit_from(
            &meta,
            DMatrix::from_fn(2, 5, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1 - 0.3),
        );
        let x = to_nalgebra(&meta.feature_block);
        let y = to_nalgebra(&meta.performance_block);
        let direct = objective(&x, &y, &fit.a, &fit.b, &fit.c);
        let gram = objective_from_gram(&x, &y, &fit.a, &fit.b, &fit.c);
        assert!((direct - gram).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn history_is_non_increasing() {
        let meta = random_meta(60, 6, 4, 3);
        let fit = fit_from(
            &meta,
            DMatrix::from_fn(2, 6, |i, j| if i == j { 1.0 } else { 0.1 }),
        );
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn rejects_degenerate_shapes() {
        let meta = random_meta(4, 4, 1, 4);
        assert!(fit_projection(&meta, 2, 0).is_err());
        let x = Array2::from_elem((20, 3), 0.5);
        let y = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let constant =
            MetaDataset::from_blocks(Measure::ALL[..3].to_vec(), &x, &y, vec!["a".into()]).unwrap();
        assert!(fit_projection(&constant, 2, 0).is_err());
    }

    #[test]
    fn rotation_reference_cases() {
        let aligned = alignment_rotation([-1.0, 1.0]);
        assert!((aligned - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        let r = alignment_rotation([1.0, 0.0]);
        assert!(
            (r - rotation_matrix(3.0 * std::f64::consts::FRAC_PI_4))
                .abs()
                .max()
                < 1e-15
        );
    }

    #[test]
    fn constant_hardness_keeps_identity() {
        let meta = random_meta(30, 3, 2, 5);
        let mut model = fit_projection(&meta, 1, 0).unwrap();
        let coords = model.embed_unrotated(&meta.feature_block);
        fit_rotation(&mut model, &coords, &[0.3; 30]).unwrap();
        assert_eq!(model.rotation, DMatrix::identity(2, 2));
    }

    #[test]
    fn projecting_means_gives_origin_and_training_rows_reproduce() {
        let meta = random_meta(50, 4, 2, 6);
        let mut model = fit_projection(&meta, 3, 1).unwrap();
        let coords = model.embed_unrotated(&meta.feature_block);
        let ih: Vec<f64> = (0..50).map(|i| (i % 7) as f64 / 7.0).collect();
        fit_rotation(&mut model, &coords, &ih).unwrap();

        let mut row = ndarray::Array1::from_elem(13, f64::NAN);
        for (m, s) in model.selected_measures.iter().zip(&model.feature_scales) {
            row[m.index()] = s.mean;
        }
        let (z1, z2) = model.project_row(row.view()).unwrap();
        assert!(z1.abs() < 1e-12 && z2.abs() < 1e-12);

        let raw = meta.destandardized_features();
        let embedded = model.embed_standardized(&meta.feature_block);
        for i in 0..50 {
            let values: BTreeMap<Measure, f64> = model
                .selected_measures
                .iter()
                .enumerate()
                .map(|(j, m)| (*m, raw[[i, j]]))
                .collect();
            let (a, b) = model.project(&values).unwrap();
            assert!((a - embedded[[i, 0]]).abs() < 1e-9);
            assert!((b - embedded[[i, 1]]).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_measure_is_an_error() {
        let meta = random_meta(30, 3, 1, 7);
        let model = fit_projection(&meta, 1, 0).unwrap();
        let row = ndarray::Array1::from_elem(13, f64::NAN);
        assert!(model.project_row(row.view()).is_err());
    }

    #[test]
    fn model_serializes_row_major() {
        let meta = random_meta(30, 3, 2, 8);
        let model = fit_projection(&meta, 2, 0).unwrap();
        let json = serde_json::to_value(&model).unwrap();
        assert_eq!(json["projection"].as_array().unwrap().len(), 2);
        assert_eq!(json["projection"][0].as_array().unwrap().len(), 3);
        let back: ProjectionModel = serde_json::from_value(json).unwrap();
        assert_eq!(back, model);
    }
}
