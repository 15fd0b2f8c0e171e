//! The overlaid stop graph and the `(line, position)` state graph.
//!
//! [`TransitGraph`] merges every line's chain of consecutive stops into one
//! directed graph whose arcs remember which lines serve them. The arc weight
//! is the number of serving lines.
//!
//! [`StateGraph`] expands each itinerary position into its own state so that
//! a search can tell riding on from changing lines. Every stop also gets a
//! virtual source (board arcs into its states) and sink (alight arcs out).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::link_times::LinkTimeTable;
use crate::network::{LineIdx, Network, StopIdx};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitArc {
    pub from: StopIdx,
    pub to: StopIdx,
    /// Serving lines, ascending and without repeats.
    pub lines: Vec<LineIdx>,
    pub length_km: f64,
}

impl TransitArc {
    pub fn weight(&self) -> usize {
        self.lines.len()
    }
}

#[derive(Debug, Clone)]
pub struct TransitGraph {
    nodes: Vec<StopIdx>,
    arcs: Vec<TransitArc>,
    outgoing: Vec<Vec<usize>>,
    // lines touching each stop; kept for the dump, not used by routing
    node_lines: Vec<usize>,
}

impl TransitGraph {
    pub fn build(network: &Network) -> Self {
        let mut merged: BTreeMap<(StopIdx, StopIdx), Vec<LineIdx>> = BTreeMap::new();
        let mut on_line = vec![Vec::<LineIdx>::new(); network.stop_count()];
        for line in network.line_indices() {
            let itin = network.itinerary(line);
            for pair in itin.windows(2) {
                let lines = merged.entry((pair[0], pair[1])).or_default();
                if lines.last() != Some(&line) {
                    lines.push(line);
                }
            }
            for &s in itin {
                if on_line[s.0].last() != Some(&line) && !on_line[s.0].contains(&line) {
                    on_line[s.0].push(line);
                }
            }
        }
        let mut outgoing = vec![Vec::new(); network.stop_count()];
        let arcs: Vec<TransitArc> = merged
            .into_iter()
            .enumerate()
            .map(|(i, ((from, to), mut lines))| {
                lines.sort();
                lines.dedup();
                outgoing[from.0].push(i);
                TransitArc {
                    from,
                    to,
                    lines,
                    length_km: network.distance_km(from, to),
                }
            })
            .collect();
        let nodes = (0..network.stop_count())
            .map(StopIdx)
            .filter(|s| !on_line[s.0].is_empty())
            .collect();
        TransitGraph {
            nodes,
            arcs,
            outgoing,
            node_lines: on_line.iter().map(Vec::len).collect(),
        }
    }

    pub fn nodes(&self) -> &[StopIdx] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[TransitArc] {
        &self.arcs
    }

    pub fn outgoing(&self, stop: StopIdx) -> impl Iterator<Item = &TransitArc> {
        self.outgoing[stop.0].iter().map(move |&i| &self.arcs[i])
    }

    pub fn arc(&self, from: StopIdx, to: StopIdx) -> Option<&TransitArc> {
        self.outgoing(from).find(|a| a.to == to)
    }

    pub fn to_dump(&self, network: &Network) -> GraphDump {
        GraphDump {
            nodes: self
                .nodes
                .iter()
                .map(|&s| NodeDump {
                    id: network.stop_id(s).to_owned(),
                    lines: self.node_lines[s.0],
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcDump {
                    from: network.stop_id(a.from).to_owned(),
                    to: network.stop_id(a.to).to_owned(),
                    lines: a.lines.iter().map(|&l| network.line_id(l).to_owned()).collect(),
                    weight: a.weight(),
                    length_km: a.length_km,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeDump {
    pub id: String,
    pub lines: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcDump {
    pub from: String,
    pub to: String,
    pub lines: Vec<String>,
    pub weight: usize,
    pub length_km: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphDump {
    pub nodes: Vec<NodeDump>,
    pub arcs: Vec<ArcDump>,
}

/// Index of a line state in a [`StateGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineState {
    pub line: LineIdx,
    pub pos: usize,
    pub stop: StopIdx,
}

/// Cost of riding from a state to the next position of the same line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RideArc {
    pub length_km: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone)]
pub struct StateGraph {
    states: Vec<LineState>,
    line_offset: Vec<usize>,
    // ride[s] leaves state s; None at the last position of a line
    ride: Vec<Option<RideArc>>,
    at_stop: Vec<Vec<StateId>>,
    stop_count: usize,
    transfer_wait_s: f64,
}

impl StateGraph {
    pub fn build(network: &Network, times: &LinkTimeTable) -> Self {
        let mut states = Vec::new();
        let mut line_offset = Vec::with_capacity(network.line_count());
        let mut ride = Vec::new();
        let mut at_stop = vec![Vec::new(); network.stop_count()];
        for line in network.line_indices() {
            line_offset.push(states.len());
            let itin = network.itinerary(line);
            for (pos, &stop) in itin.iter().enumerate() {
                at_stop[stop.0].push(StateId(states.len()));
                states.push(LineState { line, pos, stop });
                ride.push((pos + 1 < itin.len()).then(|| RideArc {
                    length_km: network.link_length(line, pos),
                    time_s: times.link_time(network, line, pos),
                }));
            }
        }
        StateGraph {
            states,
            line_offset,
            ride,
            at_stop,
            stop_count: network.stop_count(),
            transfer_wait_s: times.transfer_wait_s(),
        }
    }

    pub fn line_state_count(&self) -> usize {
        self.states.len()
    }

    /// One source and one sink per stop.
    pub fn virtual_node_count(&self) -> usize {
        2 * self.stop_count
    }

    pub fn ride_arc_count(&self) -> usize {
        self.ride.iter().filter(|r| r.is_some()).count()
    }

    /// Board arcs leave each stop's source; alight arcs enter its sink.
    /// There is one of each per line state.
    pub fn board_arc_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: StateId) -> LineState {
        self.states[id.0]
    }

    pub fn state_id(&self, line: LineIdx, pos: usize) -> StateId {
        StateId(self.line_offset[line.0] + pos)
    }

    /// The ride arc out of `id` and the state it reaches.
    pub fn ride_from(&self, id: StateId) -> Option<(StateId, RideArc)> {
        self.ride[id.0].map(|arc| (StateId(id.0 + 1), arc))
    }

    /// States reachable by a board arc from the stop's source.
    pub fn boardable(&self, stop: StopIdx) -> &[StateId] {
        &self.at_stop[stop.0]
    }

    pub fn transfer_wait_s(&self) -> f64 {
        self.transfer_wait_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn t1_arcs_all_weight_one() {
        let net = fixtures::t1_network();
        let g = TransitGraph::build(&net);
        assert_eq!(g.nodes().len(), 6);
        let mut pairs: Vec<(String, String, usize)> = g
            .arcs()
            .iter()
            .map(|a| (net.stop_id(a.from).into(), net.stop_id(a.to).into(), a.weight()))
            .collect();
        pairs.sort();
        let expect: Vec<(String, String, usize)> = [("A", "B"), ("A", "E"), ("B", "C"), ("B", "F"), ("C", "D"), ("E", "D")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string(), 1))
            .collect();
        assert_eq!(pairs, expect);
    }

    #[test]
    fn overlay_shared_arc_has_weight_two() {
        let net = fixtures::two_line_overlay();
        let g = TransitGraph::build(&net);
        let (v4, v5) = (net.stop_idx("v4").unwrap(), net.stop_idx("v5").unwrap());
        let shared = g.arc(v4, v5).unwrap();
        assert_eq!(shared.weight(), 2);
        assert_eq!(shared.lines, vec![LineIdx(0), LineIdx(1)]);
        for a in g.arcs() {
            if (a.from, a.to) != (v4, v5) {
                assert_eq!(a.weight(), 1);
            }
        }
        assert_eq!(g.arcs().len(), 7);
    }

    #[test]
    fn singleton_line() {
        let net = crate::network::Network::new(
            crate::geo::CoordinateMode::Planar,
            vec![
                crate::network::Stop {
                    id: "A".into(),
                    position: crate::geo::Position::planar(0.0, 0.0),
                    is_terminal: true,
                },
                crate::network::Stop {
                    id: "B".into(),
                    position: crate::geo::Position::planar(0.0, 1.0),
                    is_terminal: false,
                },
            ],
            vec![crate::network::BusLine {
                id: "L".into(),
                itinerary: vec!["A".into(), "B".into()],
            }],
        )
        .unwrap();
        let g = TransitGraph::build(&net);
        assert_eq!((g.nodes().len(), g.arcs().len(), g.arcs()[0].weight()), (2, 1, 1));
        let s = StateGraph::build(&net, &fixtures::t1_times());
        assert_eq!((s.line_state_count(), s.virtual_node_count(), s.ride_arc_count()), (2, 4, 1));
    }

    #[test]
    fn t1_state_counts() {
        let net = fixtures::t1_network();
        let s = StateGraph::build(&net, &fixtures::t1_times());
        assert_eq!(s.line_state_count(), 9);
        assert_eq!(s.virtual_node_count(), 12);
        assert_eq!(s.ride_arc_count(), 6);
        let (next, arc) = s.ride_from(s.state_id(LineIdx(0), 0)).unwrap();
        assert_eq!(s.state(next).pos, 1);
        assert!((arc.time_s - 180.0).abs() < 1e-9);
        assert!(s.ride_from(s.state_id(LineIdx(0), 3)).is_none());
    }

    #[test]
    fn dump_lists_line_ids() {
        let net = fixtures::two_line_overlay();
        let dump = TransitGraph::build(&net).to_dump(&net);
        let json = serde_json::to_value(&dump).unwrap();
        let shared = json["arcs"]
            .as_array()
            .unwrap()
            .iter()
            .find(|a| a["from"] == "v4" && a["to"] == "v5")
            .unwrap();
        assert_eq!(shared["lines"], serde_json::json!(["L1", "L2"]));
        assert_eq!(shared["weight"], 2);
    }
}
