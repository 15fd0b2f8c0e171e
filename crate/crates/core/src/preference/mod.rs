//! Which criterion a rider's observed route most resembles.
//!
//! The observed route and the four optimal routes are normalized together.
//! Polygon intersection (PI) scores each objective by the area its Kiviat
//! polygon shares with the observed one (higher is more similar); the
//! Euclidean baseline (ED) scores by distance between normalized vectors
//! (lower is more similar).

pub mod kiviat;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kiviat::{intersection_area, normalize_metrics, KiviatPolygon, NormalizedMetrics};

use crate::route::{Objective, RouteMetrics};

/// Only exact-arithmetic ties count by default.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreferenceError {
    #[error("no optimal route for objective `{0}`")]
    MissingObjective(Objective),
    #[error("non-finite criterion value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PI")]
    PolygonIntersection,
    #[serde(rename = "ED")]
    EuclideanDistance,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PolygonIntersection => "PI",
            Method::EuclideanDistance => "ED",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PI" => Ok(Method::PolygonIntersection),
            "ED" => Ok(Method::EuclideanDistance),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// PI similarity measure. Raw area is the default; IoU is kept for
/// experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Area,
    Iou,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub method: Method,
    pub similarity: Similarity,
    pub tie_tolerance: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            method: Method::PolygonIntersection,
            similarity: Similarity::Area,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }
}

impl ClassifierConfig {
    pub fn with_method(method: Method) -> Self {
        ClassifierConfig {
            method,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceResult {
    pub rider_id: String,
    pub method: Method,
    /// Per objective, in axis order (distance, time, transfers, hops).
    pub scores: [f64; 4],
    /// Best-scoring objective; ties resolved by the cascade order.
    pub preferred: Objective,
    /// Objectives scoring within tolerance of the best, in cascade order.
    pub tied: Vec<Objective>,
}

impl PreferenceResult {
    pub fn is_ambiguous(&self) -> bool {
        self.tied.len() > 1
    }

    pub fn score(&self, objective: Objective) -> f64 {
        self.scores[objective.axis()]
    }
}

/// The five metric vectors in comparison order: observed, then the optima
/// in axis order.
pub fn comparison_set(real: &RouteMetrics, optimal: &BTreeMap<Objective, RouteMetrics>) -> Result<[RouteMetrics; 5], PreferenceError> {
    let get = |o: Objective| optimal.get(&o).copied().ok_or(PreferenceError::MissingObjective(o));
    Ok([
        *real,
        get(Objective::Distance)?,
        get(Objective::Time)?,
        get(Objective::Transfers)?,
        get(Objective::Hops)?,
    ])
}

pub fn classify_preference(
    rider_id: &str,
    real: &RouteMetrics,
    optimal: &BTreeMap<Objective, RouteMetrics>,
    config: &ClassifierConfig,
) -> Result<PreferenceResult, PreferenceError> {
    let set = comparison_set(real, optimal)?;
    if set.iter().flat_map(|m| m.as_axes()).any(|v| !v.is_finite()) {
        return Err(PreferenceError::NonFinite);
    }
    let norm = normalize_metrics(&set);
    let scores: [f64; 4] = std::array::from_fn(|i| score(config, norm[0], norm[i + 1]));

    let higher_is_better = config.method == Method::PolygonIntersection;
    let best = if higher_is_better {
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        scores.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let tied: Vec<Objective> = Objective::CASCADE
        .into_iter()
        .filter(|o| (scores[o.axis()] - best).abs() <= config.tie_tolerance)
        .collect();
    Ok(PreferenceResult {
        rider_id: rider_id.to_owned(),
        method: config.method,
        scores,
        preferred: tied[0],
        tied,
    })
}

fn score(config: &ClassifierConfig, real: NormalizedMetrics, opt: NormalizedMetrics) -> f64 {
    match config.method {
        Method::EuclideanDistance => real.0.iter().zip(opt.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
        Method::PolygonIntersection => {
            let (pr, po) = (KiviatPolygon::from_normalized(real), KiviatPolygon::from_normalized(opt));
            let inter = intersection_area(&pr, &po);
            match config.similarity {
                Similarity::Area => inter,
                Similarity::Iou => {
                    let union = pr.area() + po.area() - inter;
                    if union > 0.0 {
                        inter / union
                    } else {
                        0.0
                    }
                }
            }
        }
    }
}

/// CSV header of the preference dump.
pub const PREFERENCE_CSV_HEADER: [&str; 8] = [
    "rider_id",
    "method",
    "preferred",
    "score_distance",
    "score_time",
    "score_transfers",
    "score_hops",
    "tied",
];

impl PreferenceResult {
    /// Row matching [`PREFERENCE_CSV_HEADER`]; tied objectives joined by `|`.
    pub fn csv_row(&self) -> [String; 8] {
        [
            self.rider_id.clone(),
            self.method.to_string(),
            self.preferred.to_string(),
            self.scores[0].to_string(),
            self.scores[1].to_string(),
            self.scores[2].to_string(),
            self.scores[3].to_string(),
            self.tied.iter().map(|o| o.as_str()).collect::<Vec<_>>().join("|"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(d: f64, t: f64, x: u32, h: u32) -> RouteMetrics {
        RouteMetrics {
            distance_km: d,
            time_s: t,
            transfers: x,
            hops: h,
        }
    }

    fn optima(list: [RouteMetrics; 4]) -> BTreeMap<Objective, RouteMetrics> {
        Objective::AXES.into_iter().zip(list).collect()
    }

    #[test]
    fn identity_with_transfers_optimum() {
        let opt = optima([m(3.0, 900.0, 2, 6), m(4.0, 600.0, 1, 7), m(5.0, 1000.0, 0, 8), m(4.5, 950.0, 2, 4)]);
        let real = opt[&Objective::Transfers];
        for method in [Method::PolygonIntersection, Method::EuclideanDistance] {
            let r = classify_preference("r", &real, &opt, &ClassifierConfig::with_method(method)).unwrap();
            assert_eq!(r.preferred, Objective::Transfers, "{method}");
            assert!(!r.is_ambiguous());
        }
    }

    #[test]
    fn all_identical_is_fully_tied() {
        let same = m(2.0, 500.0, 1, 4);
        let opt = optima([same; 4]);
        for method in [Method::PolygonIntersection, Method::EuclideanDistance] {
            let r = classify_preference("r", &same, &opt, &ClassifierConfig::with_method(method)).unwrap();
            assert_eq!(r.preferred, Objective::Transfers);
            assert_eq!(r.tied, Objective::CASCADE.to_vec());
        }
    }

    #[test]
    fn euclidean_arithmetic() {
        // normalized real (0.6,0.8,1,0.4); transfers-opt (0.6,0.8,0.5,0.4); time-opt (0.6,0.4,1,0.4)
        let real = NormalizedMetrics([0.6, 0.8, 1.0, 0.4]);
        let cfg = ClassifierConfig::with_method(Method::EuclideanDistance);
        let to_transfers = score(&cfg, real, NormalizedMetrics([0.6, 0.8, 0.5, 0.4]));
        let to_time = score(&cfg, real, NormalizedMetrics([0.6, 0.4, 1.0, 0.4]));
        assert!((to_transfers - 0.5).abs() < 1e-12);
        assert!((to_time - 0.4).abs() < 1e-12);
    }

    #[test]
    fn euclidean_picks_time_through_full_pipeline() {
        // raw values chosen so the per-axis maxima are 10, 100, 2, 10
        let real = m(6.0, 80.0, 2, 4);
        let opt = optima([
            m(10.0, 100.0, 2, 10),
            m(6.0, 40.0, 2, 4),
            m(6.0, 80.0, 1, 4),
            m(10.0, 100.0, 2, 1),
        ]);
        let r = classify_preference("r", &real, &opt, &ClassifierConfig::with_method(Method::EuclideanDistance)).unwrap();
        assert!((r.score(Objective::Transfers) - 0.5).abs() < 1e-12);
        assert!((r.score(Objective::Time) - 0.4).abs() < 1e-12);
        assert_eq!(r.preferred, Objective::Time);
    }

    #[test]
    fn missing_objective() {
        let mut opt = optima([m(1.0, 1.0, 0, 1); 4]);
        opt.remove(&Objective::Hops);
        let err = classify_preference("r", &m(1.0, 1.0, 0, 1), &opt, &ClassifierConfig::default()).unwrap_err();
        assert_eq!(err, PreferenceError::MissingObjective(Objective::Hops));
    }

    #[test]
    fn iou_bounded() {
        let opt = optima([m(3.0, 900.0, 2, 6), m(4.0, 600.0, 1, 7), m(5.0, 1000.0, 0, 8), m(4.5, 950.0, 2, 4)]);
        let cfg = ClassifierConfig {
            similarity: Similarity::Iou,
            ..Default::default()
        };
        let r = classify_preference("r", &opt[&Objective::Distance], &opt, &cfg).unwrap();
        assert!(r.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        assert_eq!(r.score(Objective::Distance), 1.0);
        assert_eq!(r.preferred, Objective::Distance);
    }
}
