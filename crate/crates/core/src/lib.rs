//! Route-choice analysis for bus networks: optimal routes under four
//! convenience criteria, rider preference inference, satisfaction
//! classification, stop ranking for on-site surveys, and a synthetic-city
//! simulation comparing targeted against random survey sites.

pub mod fixtures;
pub mod geo;
pub mod graph;
pub mod ingest;
pub mod link_times;
pub mod network;
pub mod pipeline;
pub mod preference;
pub mod quality;
pub mod route;
pub mod routing;
pub mod sim;
pub mod snapshot;

pub use geo::{CoordinateMode, Position};
pub use graph::{StateGraph, TransitGraph};
pub use link_times::{LinkTimeTable, TimeDefaults};
pub use network::{BusLine, Network, Stop};
pub use route::{route_metrics, Leg, Objective, Route, RouteMetrics};
pub use routing::{RoutePlan, Router, RouterConfig};
pub use pipeline::{AnalysisConfig, Analyzer, RideAnalysis};
pub use snapshot::{build_snapshot, AnalysisSnapshot, SnapshotParts};
