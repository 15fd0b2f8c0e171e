//! Stops, bus lines and the validated [`Network`] they form.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{CoordinateMode, Position};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network has no stops")]
    NoStops,
    #[error("network has no lines")]
    NoLines,
    #[error("duplicate stop_id `{0}`")]
    DuplicateStop(String),
    #[error("duplicate line_id `{0}`")]
    DuplicateLine(String),
    #[error("stop `{0}` has non-finite coordinates")]
    NonFiniteCoordinates(String),
    #[error("line `{line}` references unknown stop `{stop}`")]
    UnknownStop { line: String, stop: String },
    #[error("line `{0}` has fewer than 2 stops in its itinerary")]
    ShortItinerary(String),
    #[error("line `{line}` visits stop `{stop}` twice in a row")]
    RepeatedStop { line: String, stop: String },
    #[error("line `{line}` links `{from}` to `{to}` but the two stops coincide")]
    ZeroLengthLink { line: String, from: String, to: String },
}

/// Dense index of a stop inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StopIdx(pub usize);

/// Dense index of a line inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineIdx(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: String,
    pub position: Position,
    pub is_terminal: bool,
}

/// One directed bus line. A line may come back to a stop later in its
/// itinerary but never twice in a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusLine {
    pub id: String,
    pub itinerary: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Network {
    mode: CoordinateMode,
    stops: Vec<Stop>,
    lines: Vec<BusLine>,
    stop_index: HashMap<String, StopIdx>,
    line_index: HashMap<String, LineIdx>,
    itineraries: Vec<Vec<StopIdx>>,
    // per line, per position: length of the link to the next position
    link_lengths: Vec<Vec<f64>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.stops == other.stops && self.lines == other.lines
    }
}

impl Network {
    pub fn new(mode: CoordinateMode, stops: Vec<Stop>, lines: Vec<BusLine>) -> Result<Self, NetworkError> {
        if stops.is_empty() {
            return Err(NetworkError::NoStops);
        }
        if lines.is_empty() {
            return Err(NetworkError::NoLines);
        }
        let mut stop_index = HashMap::with_capacity(stops.len());
        for (i, stop) in stops.iter().enumerate() {
            if !stop.position.is_finite() {
                return Err(NetworkError::NonFiniteCoordinates(stop.id.clone()));
            }
            if stop_index.insert(stop.id.clone(), StopIdx(i)).is_some() {
                return Err(NetworkError::DuplicateStop(stop.id.clone()));
            }
        }
        let mut line_index = HashMap::with_capacity(lines.len());
        let mut itineraries = Vec::with_capacity(lines.len());
        let mut link_lengths = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line_index.insert(line.id.clone(), LineIdx(i)).is_some() {
                return Err(NetworkError::DuplicateLine(line.id.clone()));
            }
            if line.itinerary.len() < 2 {
                return Err(NetworkError::ShortItinerary(line.id.clone()));
            }
            let resolved = line
                .itinerary
                .iter()
                .map(|s| {
                    stop_index.get(s).copied().ok_or_else(|| NetworkError::UnknownStop {
                        line: line.id.clone(),
                        stop: s.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut lengths = Vec::with_capacity(resolved.len() - 1);
            for pair in resolved.windows(2) {
                let (a, b) = (&stops[pair[0].0], &stops[pair[1].0]);
                if pair[0] == pair[1] {
                    return Err(NetworkError::RepeatedStop {
                        line: line.id.clone(),
                        stop: a.id.clone(),
                    });
                }
                let len = mode.distance_km(a.position, b.position);
                if !(len > 0.0) {
                    return Err(NetworkError::ZeroLengthLink {
                        line: line.id.clone(),
                        from: a.id.clone(),
                        to: b.id.clone(),
                    });
                }
                lengths.push(len);
            }
            itineraries.push(resolved);
            link_lengths.push(lengths);
        }
        Ok(Network {
            mode,
            stops,
            lines,
            stop_index,
            line_index,
            itineraries,
            link_lengths,
        })
    }

    pub fn mode(&self) -> CoordinateMode {
        self.mode
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn lines(&self) -> &[BusLine] {
        &self.lines
    }

    pub fn stop_count(&self) -> usize {
        self.stops.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn stop_idx(&self, id: &str) -> Option<StopIdx> {
        self.stop_index.get(id).copied()
    }

    pub fn line_idx(&self, id: &str) -> Option<LineIdx> {
        self.line_index.get(id).copied()
    }

    pub fn stop(&self, idx: StopIdx) -> &Stop {
        &self.stops[idx.0]
    }

    pub fn line(&self, idx: LineIdx) -> &BusLine {
        &self.lines[idx.0]
    }

    pub fn stop_id(&self, idx: StopIdx) -> &str {
        &self.stops[idx.0].id
    }

    pub fn line_id(&self, idx: LineIdx) -> &str {
        &self.lines[idx.0].id
    }

    /// Resolved itinerary of a line.
    pub fn itinerary(&self, line: LineIdx) -> &[StopIdx] {
        &self.itineraries[line.0]
    }

    /// Length in km of the link leaving itinerary position `pos` of `line`.
    pub fn link_length(&self, line: LineIdx, pos: usize) -> f64 {
        self.link_lengths[line.0][pos]
    }

    pub fn distance_km(&self, a: StopIdx, b: StopIdx) -> f64 {
        self.mode.distance_km(self.stops[a.0].position, self.stops[b.0].position)
    }

    pub fn line_indices(&self) -> impl Iterator<Item = LineIdx> {
        (0..self.lines.len()).map(LineIdx)
    }

    /// Returns a copy of this network with one more line. Used when probing
    /// how the network reacts to added service.
    pub fn with_line(&self, line: BusLine) -> Result<Network, NetworkError> {
        let mut lines = self.lines.clone();
        lines.push(line);
        Network::new(self.mode, self.stops.clone(), lines)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop(id: &str, x: f64, y: f64) -> Stop {
        Stop {
            id: id.into(),
            position: Position::planar(x, y),
            is_terminal: false,
        }
    }

    fn line(id: &str, stops: &[&str]) -> BusLine {
        BusLine {
            id: id.into(),
            itinerary: stops.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn rejects_duplicate_stop() {
        let err = Network::new(
            CoordinateMode::Planar,
            vec![stop("A", 0.0, 0.0), stop("A", 1.0, 0.0)],
            vec![line("L", &["A", "A"])],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateStop("A".into()));
    }

    #[test]
    fn rejects_unknown_stop() {
        let err = Network::new(
            CoordinateMode::Planar,
            vec![stop("A", 0.0, 0.0)],
            vec![line("LX", &["A", "Z"])],
        )
        .unwrap_err();
        assert_eq!(
            err,
            NetworkError::UnknownStop {
                line: "LX".into(),
                stop: "Z".into()
            }
        );
    }

    #[test]
    fn rejects_immediate_repeat_but_allows_loops() {
        let stops = vec![stop("A", 0.0, 0.0), stop("B", 1.0, 0.0), stop("C", 1.0, 1.0)];
        let err = Network::new(CoordinateMode::Planar, stops.clone(), vec![line("L", &["A", "B", "B"])]);
        assert!(matches!(err, Err(NetworkError::RepeatedStop { .. })));
        let ok = Network::new(CoordinateMode::Planar, stops, vec![line("L", &["A", "B", "C", "A"])]);
        assert!(ok.is_ok());
    }

    #[test]
    fn rejects_short_and_empty() {
        let stops = vec![stop("A", 0.0, 0.0)];
        assert_eq!(
            Network::new(CoordinateMode::Planar, stops.clone(), vec![line("L", &["A"])]).unwrap_err(),
            NetworkError::ShortItinerary("L".into())
        );
        assert_eq!(
            Network::new(CoordinateMode::Planar, stops, vec![]).unwrap_err(),
            NetworkError::NoLines
        );
    }

    #[test]
    fn rejects_coincident_link() {
        let err = Network::new(
            CoordinateMode::Planar,
            vec![stop("A", 0.0, 0.0), stop("B", 0.0, 0.0)],
            vec![line("L", &["A", "B"])],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::ZeroLengthLink { .. }));
    }
}
