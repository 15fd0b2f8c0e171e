//! Optimal routes for the four objectives, plus reference searches used to
//! check them.

mod oracle;
mod search;
mod unconstrained;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{brute_force_routes, OracleLimits, DEFAULT_ROUTE_CAP};
pub use search::Router;
pub use unconstrained::{fewest_hops, shortest_distance, StopPath};

use crate::route::{Route, RouteMetrics};

/// Matches the largest number of transfers observed per trip in the field.
pub const DEFAULT_MAX_TRANSFERS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("unknown stop `{0}`")]
    UnknownStop(String),
    #[error("origin and destination are both `{0}`")]
    SameOriginDestination(String),
    #[error("enumeration exceeded {0} routes")]
    TooManyRoutes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub max_transfers: u32,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            max_transfers: DEFAULT_MAX_TRANSFERS,
        }
    }
}

/// A route together with its criterion values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub route: Route,
    pub metrics: RouteMetrics,
}

/// Serialized form `{legs:[{line,board,alight,stops}], metrics:{...}}`.
impl RoutePlan {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "legs": self.route.legs,
            "metrics": self.metrics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{StateGraph, TransitGraph};
    use crate::route::{route_metrics, Objective};

    fn plan(origin: &str, dest: &str, obj: Objective) -> Option<RoutePlan> {
        let net = fixtures::t1_network();
        let g = TransitGraph::build(&net);
        let s = StateGraph::build(&net, &fixtures::t1_times());
        Router::new(&net, &g, &s, RouterConfig::default())
            .optimal_route(origin, dest, obj)
            .unwrap()
    }

    fn lines(p: &RoutePlan) -> Vec<(&str, &str, &str)> {
        p.route
            .legs
            .iter()
            .map(|l| (l.line.as_str(), l.board.as_str(), l.alight.as_str()))
            .collect()
    }

    #[test]
    fn t1_distance_takes_l1() {
        let p = plan("A", "D", Objective::Distance).unwrap();
        assert_eq!(lines(&p), vec![("L1", "A", "D")]);
        assert!((p.metrics.distance_km - 3.0).abs() < 1e-12);
    }

    #[test]
    fn t1_hops_takes_l2() {
        let p = plan("A", "D", Objective::Hops).unwrap();
        assert_eq!(lines(&p), vec![("L2", "A", "D")]);
        assert_eq!(p.metrics.hops, 2);
    }

    #[test]
    fn t1_transfer_tie_goes_to_shorter() {
        let p = plan("A", "D", Objective::Transfers).unwrap();
        assert_eq!(lines(&p), vec![("L1", "A", "D")]);
        assert_eq!(p.metrics.transfers, 0);
    }

    #[test]
    fn t1_transfer_needed_for_f() {
        let p = plan("A", "F", Objective::Transfers).unwrap();
        assert_eq!(lines(&p), vec![("L1", "A", "B"), ("L3", "B", "F")]);
        assert_eq!(p.metrics.transfers, 1);
        assert!((p.metrics.time_s - 660.0).abs() < 1e-9);
    }

    #[test]
    fn t1_f_is_a_dead_end() {
        for obj in Objective::AXES {
            assert!(plan("F", "E", obj).is_none());
        }
    }

    #[test]
    fn rejects_bad_endpoints() {
        let net = fixtures::t1_network();
        let g = TransitGraph::build(&net);
        let s = StateGraph::build(&net, &fixtures::t1_times());
        let r = Router::new(&net, &g, &s, RouterConfig::default());
        assert_eq!(
            r.optimal_route("A", "A", Objective::Time),
            Err(RoutingError::SameOriginDestination("A".into()))
        );
        assert_eq!(
            r.optimal_route("A", "Q", Objective::Time),
            Err(RoutingError::UnknownStop("Q".into()))
        );
    }

    #[test]
    fn zero_transfer_cap_blocks_f() {
        let net = fixtures::t1_network();
        let g = TransitGraph::build(&net);
        let s = StateGraph::build(&net, &fixtures::t1_times());
        let r = Router::new(&net, &g, &s, RouterConfig { max_transfers: 0 });
        assert!(r.optimal_route("A", "F", Objective::Distance).unwrap().is_none());
    }

    #[test]
    fn metrics_of_worked_routes() {
        let net = fixtures::t1_network();
        let times = fixtures::t1_times();
        let direct = plan("A", "D", Objective::Distance).unwrap();
        let m = route_metrics(&direct.route, &net, &times).unwrap();
        assert_eq!(m, direct.metrics);
        assert!((m.time_s - 540.0).abs() < 1e-9);
        assert_eq!((m.transfers, m.hops), (0, 3));
        let via = plan("A", "F", Objective::Transfers).unwrap();
        let m = route_metrics(&via.route, &net, &times).unwrap();
        assert!((m.distance_km - 2.0).abs() < 1e-12);
        assert!((m.time_s - 660.0).abs() < 1e-9);
        assert_eq!((m.transfers, m.hops), (1, 2));
    }

    #[test]
    fn twenty_km_link() {
        use crate::geo::{CoordinateMode, Position};
        use crate::network::{BusLine, Network, Stop};
        let net = Network::new(
            CoordinateMode::Planar,
            vec![
                Stop { id: "o".into(), position: Position::planar(0.0, 0.0), is_terminal: false },
                Stop { id: "d".into(), position: Position::planar(20.0, 0.0), is_terminal: false },
            ],
            vec![BusLine { id: "r1".into(), itinerary: vec!["o".into(), "d".into()] }],
        )
        .unwrap();
        let route = crate::route::Route {
            legs: vec![crate::route::Leg::between(&net, "r1", "o", "d").unwrap()],
        };
        let m = route_metrics(&route, &net, &fixtures::t1_times()).unwrap();
        assert_eq!(m.value(Objective::Distance), 20.0);
    }

    #[test]
    fn oracle_on_t1() {
        let net = fixtures::t1_network();
        let limits = OracleLimits::for_network(&net, 2);
        let routes = brute_force_routes(&net, "A", "D", limits).unwrap();
        let sigs: Vec<Vec<(&str, &str)>> = routes.iter().map(|r| r.signature()).collect();
        assert!(sigs.contains(&vec![("L1", "A")]));
        assert!(sigs.contains(&vec![("L2", "A")]));
        // no line changes possible at B, C or E towards D
        assert_eq!(routes.len(), 2);
        let none = brute_force_routes(&net, "A", "F", OracleLimits::for_network(&net, 0)).unwrap();
        assert!(none.is_empty());
        assert_eq!(
            brute_force_routes(&net, "A", "A", limits),
            Err(RoutingError::SameOriginDestination("A".into()))
        );
    }

    #[test]
    fn oracle_cap_enforced() {
        let net = fixtures::t1_network();
        let mut limits = OracleLimits::for_network(&net, 2);
        limits.cap = 1;
        assert_eq!(brute_force_routes(&net, "A", "D", limits), Err(RoutingError::TooManyRoutes(1)));
    }

    #[test]
    fn unconstrained_agree_on_t1() {
        let net = fixtures::t1_network();
        let g = TransitGraph::build(&net);
        let (a, d) = (net.stop_idx("A").unwrap(), net.stop_idx("D").unwrap());
        assert!((shortest_distance(&net, &g, a, d).unwrap().value - 3.0).abs() < 1e-12);
        assert_eq!(fewest_hops(&net, &g, a, d).unwrap().value, 2.0);
    }
}
