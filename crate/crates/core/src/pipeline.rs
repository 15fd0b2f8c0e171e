//! Per-ride analysis shared by the batch commands, the snapshot service and
//! the simulator.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{StateGraph, TransitGraph};
use crate::ingest::RideRecord;
use crate::link_times::LinkTimeTable;
use crate::network::Network;
use crate::preference::{classify_preference, normalize_metrics, ClassifierConfig, Method, NormalizedMetrics, PreferenceResult};
use crate::quality::{verdict_for_gap, QualityError, SatisfactionRecord, OPTIMALITY_EPS};
use crate::route::{accumulate_metrics, Objective, RouteError};
use crate::routing::{RoutePlan, Router, RouterConfig, RoutingError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("rider `{rider}`: {source}")]
    Route {
        rider: String,
        #[source]
        source: RouteError,
    },
    #[error("rider `{rider}`: {source}")]
    Routing {
        rider: String,
        #[source]
        source: RoutingError,
    },
}

/// Everything known about one ride before a threshold is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideAnalysis {
    pub rider_id: String,
    pub origin: String,
    pub destination: String,
    pub real: RoutePlan,
    /// Optimal plans in axis order (distance, time, transfers, hops).
    pub optimal: [Option<RoutePlan>; 4],
    /// Polygon-intersection preference.
    pub preference: Option<PreferenceResult>,
    /// Euclidean-distance preference, kept for comparison.
    pub baseline: Option<PreferenceResult>,
}

impl RideAnalysis {
    pub fn optimal_for(&self, objective: Objective) -> Option<&RoutePlan> {
        self.optimal[objective.axis()].as_ref()
    }

    /// Observed minus optimal value on `objective`.
    pub fn gap(&self, objective: Objective) -> Option<f64> {
        self.optimal_for(objective)
            .map(|o| self.real.metrics.value(objective) - o.metrics.value(objective))
    }

    pub fn gaps(&self) -> [Option<f64>; 4] {
        Objective::AXES.map(|o| self.gap(o))
    }

    /// The override when given, otherwise the inferred preference.
    pub fn criterion(&self, criterion: Option<Objective>) -> Option<Objective> {
        criterion.or_else(|| self.preference.as_ref().map(|p| p.preferred))
    }

    /// Gap on the active criterion, or `None` when it cannot be evaluated.
    pub fn criterion_gap(&self, criterion: Option<Objective>) -> Option<(Objective, f64)> {
        let c = self.criterion(criterion)?;
        self.gap(c).map(|g| (c, g))
    }

    pub fn classify(&self, lambda: f64, criterion: Option<Objective>) -> Result<Option<SatisfactionRecord>, QualityError> {
        let Some(c) = self.criterion(criterion) else {
            return Ok(None);
        };
        let Some(opt) = self.optimal_for(c) else {
            return Ok(None);
        };
        SatisfactionRecord::new(&self.rider_id, &self.origin, c, &self.real.metrics, &opt.metrics, lambda).map(Some)
    }

    /// Normalized vectors: observed first, then the optima in axis order.
    pub fn normalized(&self) -> Option<Vec<NormalizedMetrics>> {
        let mut set = vec![self.real.metrics];
        for o in &self.optimal {
            set.push(o.as_ref()?.metrics);
        }
        Some(normalize_metrics(&set))
    }
}

/// Verdict from a precomputed gap, matching [`RideAnalysis::classify`].
pub fn gap_verdict(gap: f64, lambda: f64) -> crate::quality::Verdict {
    verdict_for_gap(gap, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalysisConfig {
    pub router: RouterConfig,
    pub classifier: ClassifierConfig,
}

/// Owns a network with its derived graphs and link times.
#[derive(Debug, Clone)]
pub struct Analyzer {
    network: Network,
    times: LinkTimeTable,
    graph: TransitGraph,
    states: StateGraph,
    config: AnalysisConfig,
}

impl Analyzer {
    pub fn new(network: Network, times: LinkTimeTable, config: AnalysisConfig) -> Self {
        let graph = TransitGraph::build(&network);
        let states = StateGraph::build(&network, &times);
        Analyzer {
            network,
            times,
            graph,
            states,
            config,
        }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn times(&self) -> &LinkTimeTable {
        &self.times
    }

    pub fn graph(&self) -> &TransitGraph {
        &self.graph
    }

    pub fn config(&self) -> AnalysisConfig {
        self.config
    }

    pub fn router(&self) -> Router<'_> {
        Router::new(&self.network, &self.graph, &self.states, self.config.router)
    }

    /// Routes one ride without inferring preferences. A ride with more
    /// transfers than the cap is compared against optima searched with its
    /// own transfer count, so the observed route is always a candidate.
    pub fn route_with(&self, router: &Router<'_>, ride: &RideRecord) -> Result<RideAnalysis, AnalysisError> {
        let legs = ride.route.resolve(&self.network).map_err(|source| AnalysisError::Route {
            rider: ride.rider_id.clone(),
            source,
        })?;
        let real_metrics = accumulate_metrics(&self.network, &self.times, &legs);
        let cap = self.config.router.max_transfers.max(real_metrics.transfers);
        let optimal = router
            .optimal_set_capped(&ride.origin, &ride.destination, cap)
            .map_err(|source| AnalysisError::Routing {
                rider: ride.rider_id.clone(),
                source,
            })?;
        Ok(RideAnalysis {
            rider_id: ride.rider_id.clone(),
            origin: ride.origin.clone(),
            destination: ride.destination.clone(),
            real: RoutePlan {
                route: ride.route.clone(),
                metrics: real_metrics,
            },
            optimal,
            preference: None,
            baseline: None,
        })
    }

    pub fn analyze_with(&self, router: &Router<'_>, ride: &RideRecord) -> Result<RideAnalysis, AnalysisError> {
        let mut a = self.route_with(router, ride)?;
        infer_preferences(&mut a, &self.config.classifier);
        Ok(a)
    }

    /// Routes rides in parallel; output order follows input order.
    pub fn route_all(&self, rides: &[RideRecord]) -> Result<Vec<RideAnalysis>, AnalysisError> {
        let router = self.router();
        rides.par_iter().map(|r| self.route_with(&router, r)).collect()
    }

    pub fn analyze(&self, ride: &RideRecord) -> Result<RideAnalysis, AnalysisError> {
        self.analyze_with(&self.router(), ride)
    }

    /// Analyzes rides in parallel; output order follows input order.
    pub fn analyze_all(&self, rides: &[RideRecord]) -> Result<Vec<RideAnalysis>, AnalysisError> {
        let router = self.router();
        rides.par_iter().map(|r| self.analyze_with(&router, r)).collect()
    }
}

/// Fills in the polygon-intersection preference and the Euclidean
/// baseline. Rides missing an optimum are left unclassified.
pub fn infer_preferences(a: &mut RideAnalysis, classifier: &ClassifierConfig) {
    let map: BTreeMap<Objective, _> = Objective::AXES
        .into_iter()
        .zip(a.optimal.iter())
        .filter_map(|(o, p)| p.as_ref().map(|p| (o, p.metrics)))
        .collect();
    let with = |method| ClassifierConfig { method, ..*classifier };
    a.preference = classify_preference(&a.rider_id, &a.real.metrics, &map, &with(Method::PolygonIntersection)).ok();
    a.baseline = classify_preference(&a.rider_id, &a.real.metrics, &map, &with(Method::EuclideanDistance)).ok();
}

/// Whether a ride's gap on its criterion is positive beyond rounding.
pub fn has_positive_gap(a: &RideAnalysis, criterion: Option<Objective>) -> bool {
    a.criterion_gap(criterion).is_some_and(|(_, g)| g > OPTIMALITY_EPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ingest::{RideLine, RideRecord};

    fn ride(json: &str) -> RideRecord {
        let net = fixtures::t1_network();
        RideRecord::from_line(serde_json::from_str::<RideLine>(json).unwrap(), &net).unwrap()
    }

    #[test]
    fn l2_rider_has_two_km_distance_gap() {
        let an = Analyzer::new(fixtures::t1_network(), fixtures::t1_times(), AnalysisConfig::default());
        let r = ride(r#"{"rider_id":"r","origin":"A","destination":"D","legs":[{"line":"L2","board":"A","alight":"D"}]}"#);
        let a = an.analyze(&r).unwrap();
        assert!((a.gap(Objective::Distance).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(a.gap(Objective::Hops), Some(0.0));
        // same route as the hops optimum
        assert_eq!(a.preference.as_ref().unwrap().preferred, Objective::Hops);
        assert_eq!(a.baseline.as_ref().unwrap().preferred, Objective::Hops);
        let rec = a.classify(2.0, Some(Objective::Distance)).unwrap().unwrap();
        assert_eq!(rec.verdict, crate::quality::Verdict::Unsatisfactory);
    }
}
