//! Small hand-built networks used by tests, examples and benches.

use crate::geo::{CoordinateMode, Position};
use crate::ingest::{load_rides, RideRecord};
use crate::link_times::{LinkTimeTable, TimeDefaults};
use crate::network::{BusLine, Network, Stop};
use crate::pipeline::{AnalysisConfig, Analyzer};
use crate::snapshot::{build_snapshot, AnalysisSnapshot, QueryDefaults, SnapshotParts};

fn planar_stop(id: &str, x: f64, y: f64) -> Stop {
    Stop {
        id: id.to_owned(),
        position: Position::planar(x, y),
        is_terminal: false,
    }
}

fn line(id: &str, stops: &[&str]) -> BusLine {
    BusLine {
        id: id.to_owned(),
        itinerary: stops.iter().map(|s| (*s).to_owned()).collect(),
    }
}

/// Six planar stops and three lines:
/// A(0,0) B(1,0) C(2,0) D(3,0) E(1.5,2) F(1,1);
/// L1 = A,B,C,D; L2 = A,E,D; L3 = B,F.
pub fn t1_network() -> Network {
    let stops = vec![
        planar_stop("A", 0.0, 0.0),
        planar_stop("B", 1.0, 0.0),
        planar_stop("C", 2.0, 0.0),
        planar_stop("D", 3.0, 0.0),
        planar_stop("E", 1.5, 2.0),
        planar_stop("F", 1.0, 1.0),
    ];
    let lines = vec![
        line("L1", &["A", "B", "C", "D"]),
        line("L2", &["A", "E", "D"]),
        line("L3", &["B", "F"]),
    ];
    Network::new(CoordinateMode::Planar, stops, lines).expect("T1 is valid")
}

/// Uniform 20 km/h and a 300 s transfer wait.
pub fn t1_times() -> LinkTimeTable {
    LinkTimeTable::fallback(TimeDefaults {
        default_speed_kmh: 20.0,
        transfer_wait_s: 300.0,
    })
}

/// Two overlaid lines sharing the v4→v5 link:
/// L1 = v3,v4,v5,v6 and L2 = v1,v2,v4,v5,v7,v8.
pub fn two_line_overlay() -> Network {
    let stops = vec![
        planar_stop("v1", 0.0, 2.0),
        planar_stop("v2", 1.0, 1.5),
        planar_stop("v3", 1.0, -1.0),
        planar_stop("v4", 2.0, 0.0),
        planar_stop("v5", 3.0, 0.0),
        planar_stop("v6", 4.0, -1.0),
        planar_stop("v7", 4.0, 1.0),
        planar_stop("v8", 5.0, 2.0),
    ];
    let lines = vec![
        line("L1", &["v3", "v4", "v5", "v6"]),
        line("L2", &["v1", "v2", "v4", "v5", "v7", "v8"]),
    ];
    Network::new(CoordinateMode::Planar, stops, lines).expect("overlay is valid")
}

/// Six rides on [`t1_network`] as JSON Lines. From A, `r1` and `r5` ride
/// the 2 km longer L2; everyone else rides a distance optimum.
pub const T1_RIDES_JSONL: &str = r#"{"rider_id":"r1","origin":"A","destination":"D","legs":[{"line":"L2","board":"A","alight":"D"}]}
{"rider_id":"r2","origin":"A","destination":"D","legs":[{"line":"L1","board":"A","alight":"D"}]}
{"rider_id":"r3","origin":"B","destination":"D","legs":[{"line":"L1","board":"B","alight":"D"}]}
{"rider_id":"r4","origin":"A","destination":"C","legs":[{"line":"L1","board":"A","alight":"C"}]}
{"rider_id":"r5","origin":"A","destination":"D","legs":[{"line":"L2","board":"A","alight":"D"}]}
{"rider_id":"r6","origin":"B","destination":"F","legs":[{"line":"L3","board":"B","alight":"F"}]}
"#;

pub fn t1_rides() -> Vec<RideRecord> {
    load_rides(T1_RIDES_JSONL.as_bytes(), &t1_network(), true)
        .expect("T1 rides are valid")
        .rides
}

/// Snapshot of [`t1_rides`] analysed on [`t1_network`] with [`t1_times`].
pub fn t1_snapshot(defaults: QueryDefaults) -> AnalysisSnapshot {
    let analyzer = Analyzer::new(t1_network(), t1_times(), AnalysisConfig::default());
    build_snapshot(SnapshotParts {
        network: Some(t1_network()),
        analyses: Some(analyzer.analyze_all(&t1_rides()).expect("T1 rides route")),
        defaults,
        ..Default::default()
    })
    .expect("T1 snapshot builds")
}
