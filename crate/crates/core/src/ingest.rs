//! Readers and writers for the stops, lines, rides and GPS files.
//!
//! * stops: CSV `stop_id,lat,lon,is_terminal` (planar: `stop_id,x_km,y_km,is_terminal`)
//! * lines: CSV `line_id,seq,stop_id`, one row per itinerary position
//! * rides: JSON Lines `{"rider_id","origin","destination","legs":[{"line","board","alight"}],"timestamp"}`
//! * gps: CSV `vehicle_id,line_id,lat,lon,timestamp_s`

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{CoordinateMode, Position};
use crate::link_times::GpsFix;
use crate::network::{BusLine, Network, NetworkError, Stop};
use crate::route::{Leg, Route, RouteError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {message}")]
    Parse { file: &'static str, line: u64, message: String },
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header {
        file: &'static str,
        expected: String,
        found: String,
    },
    #[error("line `{line}`: itinerary positions must be 0..n without gaps (found seq {seq})")]
    Sequence { line: String, seq: u32 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("rides line {line}: {error}")]
    Ride { line: u64, error: RideError },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RideError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("origin and destination are the same stop `{0}`")]
    SameOriginDestination(String),
    #[error("first leg boards at `{board}`, not at origin `{origin}`")]
    OriginMismatch { origin: String, board: String },
    #[error("last leg alights at `{alight}`, not at destination `{destination}`")]
    DestinationMismatch { destination: String, alight: String },
    #[error(transparent)]
    Route(#[from] RouteError),
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    file: &'static str,
    expected: &[&str],
) -> Result<(), IngestError> {
    let found = rdr.headers().map_err(|e| IngestError::Parse {
        file,
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != expected {
        return Err(IngestError::Header {
            file,
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn csv_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    file: &'static str,
    name: &str,
) -> Result<T, IngestError> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| IngestError::Parse {
        file,
        line: csv_line(rec),
        message: format!("bad {name} `{raw}`"),
    })
}

fn parse_bool(rec: &csv::StringRecord, idx: usize) -> Result<bool, IngestError> {
    match rec.get(idx).unwrap_or("").trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "t" | "y" => Ok(true),
        "0" | "false" | "no" | "f" | "n" | "" => Ok(false),
        other => Err(IngestError::Parse {
            file: "stops",
            line: csv_line(rec),
            message: format!("bad is_terminal `{other}`"),
        }),
    }
}

fn stops_header(mode: CoordinateMode) -> [&'static str; 4] {
    let [a, b] = mode.coordinate_headers();
    ["stop_id", a, b, "is_terminal"]
}

pub fn read_stops<R: Read>(reader: R, mode: CoordinateMode) -> Result<Vec<Stop>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, "stops", &stops_header(mode))?;
    let mut stops = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IngestError::Parse {
            file: "stops",
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let id: String = parse_field(&rec, 0, "stops", "stop_id")?;
        let a: f64 = parse_field(&rec, 1, "stops", "coordinate")?;
        let b: f64 = parse_field(&rec, 2, "stops", "coordinate")?;
        stops.push(Stop {
            id,
            position: Position::from_csv_pair(mode, a, b),
            is_terminal: parse_bool(&rec, 3)?,
        });
    }
    Ok(stops)
}

pub fn read_lines<R: Read>(reader: R) -> Result<Vec<BusLine>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, "lines", &["line_id", "seq", "stop_id"])?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(u32, String)>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IngestError::Parse {
            file: "lines",
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line: String = parse_field(&rec, 0, "lines", "line_id")?;
        let seq: u32 = parse_field(&rec, 1, "lines", "seq")?;
        let stop: String = parse_field(&rec, 2, "lines", "stop_id")?;
        let entry = rows.entry(line.clone()).or_insert_with(|| {
            order.push(line.clone());
            Vec::new()
        });
        entry.push((seq, stop));
    }
    order
        .into_iter()
        .map(|id| {
            let mut seq = rows.remove(&id).unwrap_or_default();
            seq.sort_by_key(|(s, _)| *s);
            for (expect, (s, _)) in seq.iter().enumerate() {
                if *s as usize != expect {
                    return Err(IngestError::Sequence { line: id.clone(), seq: *s });
                }
            }
            Ok(BusLine {
                id,
                itinerary: seq.into_iter().map(|(_, s)| s).collect(),
            })
        })
        .collect()
}

/// Parses and validates a network from its stops and lines files.
pub fn load_network<R1: Read, R2: Read>(
    stops: R1,
    lines: R2,
    mode: CoordinateMode,
) -> Result<Network, IngestError> {
    let stops = read_stops(stops, mode)?;
    let lines = read_lines(lines)?;
    Ok(Network::new(mode, stops, lines)?)
}

pub fn write_stops<W: Write>(network: &Network, writer: W) -> Result<(), IngestError> {
    let mode = network.mode();
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| IngestError::Io(e.into());
    w.write_record(stops_header(mode)).map_err(to_io)?;
    for s in network.stops() {
        let [a, b] = s.position.csv_pair(mode);
        w.write_record([
            s.id.clone(),
            a.to_string(),
            b.to_string(),
            if s.is_terminal { "1" } else { "0" }.to_owned(),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lines<W: Write>(network: &Network, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| IngestError::Io(e.into());
    w.write_record(["line_id", "seq", "stop_id"]).map_err(to_io)?;
    for line in network.lines() {
        for (i, s) in line.itinerary.iter().enumerate() {
            w.write_record([line.id.as_str(), &i.to_string(), s.as_str()])
                .map_err(to_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Leg as written in the rides file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegRef {
    pub line: String,
    pub board: String,
    pub alight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RideLine {
    pub rider_id: String,
    pub origin: String,
    pub destination: String,
    pub legs: Vec<LegRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

/// One observed trip with its reconstructed itinerary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RideRecord {
    pub rider_id: String,
    pub origin: String,
    pub destination: String,
    pub route: Route,
    pub timestamp: Option<i64>,
}

impl RideRecord {
    /// Validates a parsed ride against the network.
    pub fn from_line(line: RideLine, network: &Network) -> Result<RideRecord, RideError> {
        if line.origin == line.destination {
            return Err(RideError::SameOriginDestination(line.origin));
        }
        if line.legs.is_empty() {
            return Err(RideError::Route(RouteError::Empty));
        }
        for pair in line.legs.windows(2) {
            if pair[0].alight != pair[1].board {
                return Err(RouteError::ChainBreak {
                    alight: pair[0].alight.clone(),
                    board: pair[1].board.clone(),
                }
                .into());
            }
        }
        let first = &line.legs[0].board;
        if *first != line.origin {
            return Err(RideError::OriginMismatch {
                origin: line.origin,
                board: first.clone(),
            });
        }
        let last = &line.legs[line.legs.len() - 1].alight;
        if *last != line.destination {
            return Err(RideError::DestinationMismatch {
                destination: line.destination,
                alight: last.clone(),
            });
        }
        let legs = line
            .legs
            .iter()
            .map(|l| Leg::between(network, &l.line, &l.board, &l.alight))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RideRecord {
            rider_id: line.rider_id,
            origin: line.origin,
            destination: line.destination,
            route: Route { legs },
            timestamp: line.timestamp,
        })
    }

    pub fn to_line(&self) -> RideLine {
        RideLine {
            rider_id: self.rider_id.clone(),
            origin: self.origin.clone(),
            destination: self.destination.clone(),
            legs: self
                .route
                .legs
                .iter()
                .map(|l| LegRef {
                    line: l.line.clone(),
                    board: l.board.clone(),
                    alight: l.alight.clone(),
                })
                .collect(),
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RideLoad {
    pub rides: Vec<RideRecord>,
    /// Rejected records as `(line number, reason)`.
    pub rejected: Vec<(u64, RideError)>,
}

/// Reads rides, skipping and counting invalid records unless `strict`, in
/// which case the first invalid record aborts the load.
pub fn load_rides<R: BufRead>(reader: R, network: &Network, strict: bool) -> Result<RideLoad, IngestError> {
    let mut out = RideLoad::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RideLine>(&line)
            .map_err(|e| RideError::Malformed(e.to_string()))
            .and_then(|r| RideRecord::from_line(r, network));
        match parsed {
            Ok(ride) => out.rides.push(ride),
            Err(error) if strict => return Err(IngestError::Ride { line: line_no, error }),
            Err(error) => out.rejected.push((line_no, error)),
        }
    }
    Ok(out)
}

pub fn write_rides<W: Write>(rides: &[RideRecord], mut writer: W) -> Result<(), IngestError> {
    for r in rides {
        let text = serde_json::to_string(&r.to_line()).expect("ride serializes");
        writeln!(writer, "{text}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct GpsLoad {
    pub fixes: Vec<GpsFix>,
    pub unparseable: usize,
}

/// Reads GPS fixes. In planar mode the `lat,lon` columns hold `x_km,y_km`.
pub fn read_gps<R: Read>(reader: R, mode: CoordinateMode) -> Result<GpsLoad, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    check_header(&mut rdr, "gps", &["vehicle_id", "line_id", "lat", "lon", "timestamp_s"])?;
    let mut out = GpsLoad::default();
    for rec in rdr.records() {
        let Ok(rec) = rec else {
            out.unparseable += 1;
            continue;
        };
        let parsed = (|| {
            let a: f64 = rec.get(2)?.parse().ok()?;
            let b: f64 = rec.get(3)?.parse().ok()?;
            let t: f64 = rec.get(4)?.parse().ok()?;
            let position = Position::from_csv_pair(mode, a, b);
            (position.is_finite() && t.is_finite()).then(|| GpsFix {
                vehicle_id: rec[0].to_owned(),
                line_id: rec[1].to_owned(),
                position,
                timestamp_s: t,
            })
        })();
        match parsed {
            Some(f) => out.fixes.push(f),
            None => out.unparseable += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn t1_counts() {
        let net = fixtures::t1_network();
        assert_eq!(net.stop_count(), 6);
        assert_eq!(net.line_count(), 3);
    }

    #[test]
    fn duplicate_stop_rows_rejected() {
        let stops = "stop_id,x_km,y_km,is_terminal\nA,0,0,0\nA,1,0,0\n";
        let lines = "line_id,seq,stop_id\nL,0,A\nL,1,A\n";
        let err = load_network(stops.as_bytes(), lines.as_bytes(), CoordinateMode::Planar).unwrap_err();
        assert!(matches!(err, IngestError::Network(NetworkError::DuplicateStop(ref s)) if s == "A"));
    }

    #[test]
    fn unknown_stop_rejected() {
        let stops = "stop_id,x_km,y_km,is_terminal\nA,0,0,0\n";
        let lines = "line_id,seq,stop_id\nLX,0,A\nLX,1,Z\n";
        let err = load_network(stops.as_bytes(), lines.as_bytes(), CoordinateMode::Planar).unwrap_err();
        assert!(err.to_string().contains("`Z`"), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        let stops = "stop_id,lat,lon,is_terminal\nA,0,0,0\n";
        let err = read_stops(stops.as_bytes(), CoordinateMode::Planar).unwrap_err();
        assert!(matches!(err, IngestError::Header { .. }));
    }

    #[test]
    fn seq_gap_rejected() {
        let lines = "line_id,seq,stop_id\nL,0,A\nL,2,B\n";
        assert!(matches!(read_lines(lines.as_bytes()), Err(IngestError::Sequence { .. })));
    }

    #[test]
    fn lines_reordered_by_seq() {
        let lines = "line_id,seq,stop_id\nL,1,B\nL,0,A\n";
        let l = read_lines(lines.as_bytes()).unwrap();
        assert_eq!(l[0].itinerary, vec!["A", "B"]);
    }

    fn ride(json: &str) -> Result<RideRecord, RideError> {
        let net = fixtures::t1_network();
        RideRecord::from_line(serde_json::from_str(json).unwrap(), &net)
    }

    #[test]
    fn ride_with_transfer_accepted() {
        let r = ride(
            r#"{"rider_id":"r1","origin":"A","destination":"F","legs":[{"line":"L1","board":"A","alight":"B"},{"line":"L3","board":"B","alight":"F"}]}"#,
        )
        .unwrap();
        assert_eq!(r.route.legs.len(), 2);
        assert_eq!(r.route.legs[0].stops, vec!["A", "B"]);
    }

    #[test]
    fn ride_chain_break_rejected() {
        let e = ride(
            r#"{"rider_id":"r1","origin":"A","destination":"F","legs":[{"line":"L1","board":"A","alight":"B"},{"line":"L3","board":"C","alight":"F"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, RideError::Route(RouteError::ChainBreak { .. })));
    }

    #[test]
    fn ride_on_line_not_serving_stop_rejected() {
        let e = ride(r#"{"rider_id":"r1","origin":"A","destination":"C","legs":[{"line":"L2","board":"A","alight":"C"}]}"#)
            .unwrap_err();
        assert!(matches!(e, RideError::Route(RouteError::NotServed { .. })));
    }

    #[test]
    fn ride_against_direction_rejected() {
        let e = ride(r#"{"rider_id":"r1","origin":"D","destination":"A","legs":[{"line":"L1","board":"D","alight":"A"}]}"#)
            .unwrap_err();
        assert!(matches!(e, RideError::Route(RouteError::NotServed { .. })));
    }

    #[test]
    fn skip_and_count_vs_strict() {
        let net = fixtures::t1_network();
        let data = concat!(
            r#"{"rider_id":"ok","origin":"A","destination":"D","legs":[{"line":"L1","board":"A","alight":"D"}]}"#,
            "\n",
            r#"{"rider_id":"bad","origin":"A","destination":"C","legs":[{"line":"L2","board":"A","alight":"C"}]}"#,
            "\nnot json\n"
        );
        let load = load_rides(data.as_bytes(), &net, false).unwrap();
        assert_eq!(load.rides.len(), 1);
        assert_eq!(load.rejected.len(), 2);
        assert_eq!(load.rejected[0].0, 2);
        let err = load_rides(data.as_bytes(), &net, true).unwrap_err();
        assert!(matches!(err, IngestError::Ride { line: 2, .. }));
    }

    #[test]
    fn gps_skips_garbage() {
        let data = "vehicle_id,line_id,lat,lon,timestamp_s\nv,L1,0,0,10\nv,L1,zz,0,11\nv,L1,0,0\n";
        let load = read_gps(data.as_bytes(), CoordinateMode::Planar).unwrap();
        assert_eq!(load.fixes.len(), 1);
        assert_eq!(load.unparseable, 2);
    }
}
