//! Footprints: regions of the embedding where an algorithm performs well,
//! plus the easiness footprint of low-hardness instances.
//!
//! Good instances are clustered with DBSCAN, each cluster is wrapped in its
//! convex hull, overlapping hulls are merged, and hulls whose purity falls
//! below the floor are dropped.

pub mod dbscan;
pub mod geometry;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dbscan::{dbscan, default_eps, DEFAULT_EPS_RANK, DEFAULT_MIN_PTS};
pub use geometry::{convex_hull, point_in_polygon, polygon_area, Point, Polygon};

use crate::error::{Error, Result};

pub const EASINESS_OWNER: &str = "instance_easiness";
pub const DEFAULT_EASINESS_THRESHOLD: f64 = 0.4;
pub const DEFAULT_PURITY_MIN: f64 = 0.55;

/// `-ln 0.5`: good when the true class gets probability at least one half.
pub fn default_tau_good() -> f64 {
    std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessLabeling {
    pub owner: String,
    pub good: Vec<bool>,
}

impl GoodnessLabeling {
    pub fn n_good(&self) -> usize {
        self.good.iter().filter(|&&g| g).count()
    }
}

/// good ⇔ log-loss ≤ `tau`.
pub fn label_by_log_loss(owner: &str, log_loss: &[f64], tau: f64) -> GoodnessLabeling {
    GoodnessLabeling {
        owner: owner.to_string(),
        good: log_loss.iter().map(|&l| l <= tau).collect(),
    }
}

/// good ⇔ IH strictly below `threshold`.
pub fn label_by_hardness(ih: &[f64], threshold: f64) -> GoodnessLabeling {
    GoodnessLabeling {
        owner: EASINESS_OWNER.to_string(),
        good: ih.iter().map(|&h| h < threshold).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootprintConfig {
    pub purity_min: f64,
    /// Fixed DBSCAN radius; by default the median distance to the
    /// `eps_rank`-th nearest good neighbor.
    pub eps: Option<f64>,
    pub eps_rank: usize,
    pub min_pts: usize,
}

impl Default for FootprintConfig {
    fn default() -> Self {
        FootprintConfig {
            purity_min: DEFAULT_PURITY_MIN,
            eps: None,
            eps_rank: DEFAULT_EPS_RANK,
            min_pts: DEFAULT_MIN_PTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub owner: String,
    pub polygons: Vec<Polygon>,
    /// Total hull area over the area of the hull of all instances.
    pub area: f64,
    /// Instances inside per unit area, over the same ratio for the whole
    /// embedding.
    pub density: f64,
    /// Good instances inside over all instances inside; 0 when empty.
    pub purity: f64,
    pub n_good: usize,
    pub n_inside: usize,
    pub n_good_inside: usize,
}

fn points_of(coords: &Array2<f64>) -> Vec<Point> {
    coords.outer_iter().map(|r| [r[0], r[1]]).collect()
}

fn inside_counts(points: &[Point], good: &[bool], polygons: &[Polygon]) -> (usize, usize) {
    let mut inside = 0;
    let mut good_inside = 0;
    for (p, &g) in points.iter().zip(good) {
        if polygons.iter().any(|poly| poly.contains(*p)) {
            inside += 1;
            if g {
                good_inside += 1;
            }
        }
    }
    (inside, good_inside)
}

/// Hulls of the clusters with overlapping hulls merged, each as its polygon
/// and the member points it was built from.
fn merged_hulls(clusters: Vec<Vec<Point>>) -> Vec<Polygon> {
    let mut groups: Vec<(Polygon, Vec<Point>)> = clusters
        .into_iter()
        .filter_map(|pts| convex_hull(&pts).map(|h| (h, pts)))
        .collect();
    'outer: loop {
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if geometry::polygons_overlap(&groups[i].0, &groups[j].0) {
                    let (_, extra) = groups.remove(j);
                    groups[i].1.extend(extra);
                    groups[i].0 =
                        convex_hull(&groups[i].1).expect("union of a valid hull is valid");
                    continue 'outer;
                }
            }
        }
        break;
    }
    groups.into_iter().map(|(h, _)| h).collect()
}

fn footprint_for(
    points: &[Point],
    labeling: &GoodnessLabeling,
    global_area: f64,
    config: &FootprintConfig,
) -> Footprint {
    let n = points.len();
    let good_idx: Vec<usize> = (0..n).filter(|&i| labeling.good[i]).collect();
    let good_pts: Vec<Point> = good_idx.iter().map(|&i| points[i]).collect();

    let mut polygons = Vec::new();
    if good_pts.len() >= config.min_pts {
        let eps = config
            .eps
            .or_else(|| default_eps(&good_pts, config.eps_rank))
            .unwrap_or(0.0);
        let labels = dbscan(&good_pts, eps, config.min_pts);
        let mut clusters = vec![Vec::new(); dbscan::cluster_count(&labels)];
        for (p, l) in good_pts.iter().zip(&labels) {
            if let Some(c) = l {
                clusters[*c].push(*p);
            }
        }
        for hull in merged_hulls(clusters) {
            let (inside, good_inside) =
                inside_counts(points, &labeling.good, std::slice::from_ref(&hull));
            if inside > 0 && good_inside as f64 / inside as f64 >= config.purity_min {
                polygons.push(hull);
            }
        }
    }

    let (n_inside, n_good_inside) = inside_counts(points, &labeling.good, &polygons);
    let raw_area: f64 = polygons.iter().map(Polygon::area).sum();
    let area = if global_area > 0.0 {
        raw_area / global_area
    } else {
        0.0
    };
    let density = if area > 0.0 {
        n_inside as f64 / (n as f64 * area)
    } else {
        0.0
    };
    let purity = if n_inside > 0 {
        n_good_inside as f64 / n_inside as f64
    } else {
        0.0
    };
    Footprint {
        owner: labeling.owner.clone(),
        polygons,
        area,
        density,
        purity,
        n_good: good_idx.len(),
        n_inside,
        n_good_inside,
    }
}

/// One footprint per labeling, in input order.
pub fn compute_footprints(
    coords: &Array2<f64>,
    labelings: &[GoodnessLabeling],
    config: &FootprintConfig,
) -> Result<Vec<Footprint>> {
    if coords.ncols() != 2 {
        return Err(Error::InvalidParameter(format!(
            "embedding must have 2 columns, got {}",
            coords.ncols()
        )));
    }
    if let Some(l) = labelings.iter().find(|l| l.good.len() != coords.nrows()) {
        return Err(Error::InvalidParameter(format!(
            "labeling `{}` has {} entries for {} instances",
            l.owner,
            l.good.len(),
            coords.nrows()
        )));
    }
    if !(0.0..=1.0).contains(&config.purity_min) {
        return Err(Error::InvalidParameter(format!(
            "purity floor {} outside [0, 1]",
            config.purity_min
        )));
    }
    let points = points_of(coords);
    let global_area = convex_hull(&points).map_or(0.0, |h| h.area());
    Ok(labelings
        .par_iter()
        .map(|l| footprint_for(&points, l, global_area, config))
        .collect())
}
