use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{StateGraph, StateId, TransitGraph};
use crate::network::{LineIdx, Network, StopIdx};
use crate::route::{Leg, Objective, Route, RouteMetrics};

use super::{RoutePlan, RouterConfig, RoutingError};

/// Optimal-route search over a network's [`StateGraph`].
///
/// Every objective runs the same label-setting search on `(state, transfers
/// used)` pairs, so the transfer cap holds for all of them. Labels are
/// ordered by the objective, then transfers, time, distance, hops, and
/// finally the `(line_id, board stop_id)` sequence of the legs. For the
/// distance objective the straight-line distance to the destination is
/// added to the primary key (A*).
#[derive(Debug, Clone)]
pub struct Router<'a> {
    network: &'a Network,
    graph: &'a TransitGraph,
    states: &'a StateGraph,
    config: RouterConfig,
    line_rank: Vec<u32>,
    stop_rank: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
struct Key {
    primary: f64,
    m: RouteMetrics,
    sig: Vec<(u32, u32)>,
}

impl Key {
    fn cmp_key(&self, other: &Key) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.m.transfers.cmp(&other.m.transfers))
            .then(self.m.time_s.total_cmp(&other.m.time_s))
            .then(self.m.distance_km.total_cmp(&other.m.distance_km))
            .then(self.m.hops.cmp(&other.m.hops))
            .then_with(|| self.sig.cmp(&other.sig))
    }
}

struct Queued {
    key: Key,
    label: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // min-heap on key; label index keeps the order total
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .cmp_key(&self.key)
            .then_with(|| other.label.cmp(&self.label))
    }
}

struct Label {
    state: StateId,
    transfers: u32,
    parent: Option<usize>,
    // state boarded just before riding into `state`, if this label starts a leg
    boarded: Option<StateId>,
}

fn rank<'s>(ids: impl Iterator<Item = &'s str>) -> Vec<u32> {
    let ids: Vec<&str> = ids.collect();
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]));
    let mut rank = vec![0; ids.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r as u32;
    }
    rank
}

impl<'a> Router<'a> {
    pub fn new(network: &'a Network, graph: &'a TransitGraph, states: &'a StateGraph, config: RouterConfig) -> Self {
        Router {
            network,
            graph,
            states,
            config,
            line_rank: rank(network.lines().iter().map(|l| l.id.as_str())),
            stop_rank: rank(network.stops().iter().map(|s| s.id.as_str())),
        }
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn graph(&self) -> &'a TransitGraph {
        self.graph
    }

    pub fn config(&self) -> RouterConfig {
        self.config
    }

    fn endpoints(&self, origin: &str, destination: &str) -> Result<(StopIdx, StopIdx), RoutingError> {
        let o = self
            .network
            .stop_idx(origin)
            .ok_or_else(|| RoutingError::UnknownStop(origin.to_owned()))?;
        let d = self
            .network
            .stop_idx(destination)
            .ok_or_else(|| RoutingError::UnknownStop(destination.to_owned()))?;
        if o == d {
            return Err(RoutingError::SameOriginDestination(origin.to_owned()));
        }
        Ok((o, d))
    }

    /// The best route from `origin` to `destination` for `objective`, or
    /// `None` when no route within the transfer cap exists.
    pub fn optimal_route(&self, origin: &str, destination: &str, objective: Objective) -> Result<Option<RoutePlan>, RoutingError> {
        let (o, d) = self.endpoints(origin, destination)?;
        Ok(self.search(o, d, objective, self.config.max_transfers))
    }

    /// Optimal plans for all four objectives, in [`Objective::AXES`] order.
    pub fn optimal_set(&self, origin: &str, destination: &str) -> Result<[Option<RoutePlan>; 4], RoutingError> {
        self.optimal_set_capped(origin, destination, self.config.max_transfers)
    }

    /// As [`Router::optimal_set`] with an explicit transfer cap.
    pub fn optimal_set_capped(&self, origin: &str, destination: &str, max_transfers: u32) -> Result<[Option<RoutePlan>; 4], RoutingError> {
        let (o, d) = self.endpoints(origin, destination)?;
        Ok(Objective::AXES.map(|obj| self.search(o, d, obj, max_transfers)))
    }

    fn heuristic(&self, objective: Objective, stop: StopIdx, dest: StopIdx) -> f64 {
        match objective {
            Objective::Distance => self.network.distance_km(stop, dest),
            _ => 0.0,
        }
    }

    fn primary(&self, objective: Objective, m: &RouteMetrics, stop: StopIdx, dest: StopIdx) -> f64 {
        m.value(objective) + self.heuristic(objective, stop, dest)
    }

    fn search(&self, origin: StopIdx, dest: StopIdx, objective: Objective, max_transfers: u32) -> Option<RoutePlan> {
        let layers = max_transfers as usize + 1;
        let node = |s: StateId, k: u32| s.0 * layers + k as usize;
        let mut best: Vec<Option<Key>> = vec![None; self.states.line_state_count() * layers];
        let mut settled = vec![false; best.len()];
        let mut labels: Vec<Label> = Vec::new();
        let mut heap = BinaryHeap::new();

        for &board in self.states.boardable(origin) {
            let Some((next, arc)) = self.states.ride_from(board) else {
                continue;
            };
            let st = self.states.state(board);
            let m = RouteMetrics {
                distance_km: arc.length_km,
                time_s: arc.time_s,
                transfers: 0,
                hops: 1,
            };
            let key = Key {
                primary: self.primary(objective, &m, self.states.state(next).stop, dest),
                m,
                sig: vec![(self.line_rank[st.line.0], self.stop_rank[origin.0])],
            };
            relax(&mut best, &settled, &mut labels, &mut heap, node(next, 0), Label {
                state: next,
                transfers: 0,
                parent: None,
                boarded: Some(board),
            }, key);
        }

        while let Some(Queued { key, label }) = heap.pop() {
            let (state, k) = (labels[label].state, labels[label].transfers);
            let n = node(state, k);
            if settled[n] {
                continue;
            }
            settled[n] = true;
            let here = self.states.state(state);
            if here.stop == dest {
                return Some(RoutePlan {
                    route: self.reconstruct(&labels, label),
                    metrics: key.m,
                });
            }
            if let Some((next, arc)) = self.states.ride_from(state) {
                let mut m = key.m;
                m.distance_km += arc.length_km;
                m.time_s += arc.time_s;
                m.hops += 1;
                let next_key = Key {
                    primary: self.primary(objective, &m, self.states.state(next).stop, dest),
                    m,
                    sig: key.sig.clone(),
                };
                relax(&mut best, &settled, &mut labels, &mut heap, node(next, k), Label {
                    state: next,
                    transfers: k,
                    parent: Some(label),
                    boarded: None,
                }, next_key);
            }
            if k < max_transfers {
                for &board in self.states.boardable(here.stop) {
                    let bs = self.states.state(board);
                    if bs.line == here.line {
                        continue;
                    }
                    let Some((next, arc)) = self.states.ride_from(board) else {
                        continue;
                    };
                    let mut m = key.m;
                    m.transfers += 1;
                    m.time_s += self.states.transfer_wait_s();
                    m.distance_km += arc.length_km;
                    m.time_s += arc.time_s;
                    m.hops += 1;
                    let mut sig = key.sig.clone();
                    sig.push((self.line_rank[bs.line.0], self.stop_rank[here.stop.0]));
                    let next_key = Key {
                        primary: self.primary(objective, &m, self.states.state(next).stop, dest),
                        m,
                        sig,
                    };
                    relax(&mut best, &settled, &mut labels, &mut heap, node(next, k + 1), Label {
                        state: next,
                        transfers: k + 1,
                        parent: Some(label),
                        boarded: Some(board),
                    }, next_key);
                }
            }
        }
        None
    }

    fn reconstruct(&self, labels: &[Label], last: usize) -> Route {
        let mut states = Vec::new();
        let mut cur = Some(last);
        while let Some(i) = cur {
            states.push(labels[i].state);
            if let Some(b) = labels[i].boarded {
                states.push(b);
                states.push(StateId(usize::MAX)); // leg boundary
            }
            cur = labels[i].parent;
        }
        states.reverse();
        let mut legs = Vec::new();
        for run in states.split(|s| s.0 == usize::MAX).filter(|r| !r.is_empty()) {
            let first = self.states.state(run[0]);
            let last = self.states.state(run[run.len() - 1]);
            legs.push(Leg::from_positions(self.network, first.line, first.pos, last.pos));
        }
        Route { legs }
    }

    /// Lexicographic rank of a line id, as used by the final tie-breaker.
    pub fn line_rank(&self, line: LineIdx) -> u32 {
        self.line_rank[line.0]
    }
}

fn relax(
    best: &mut [Option<Key>],
    settled: &[bool],
    labels: &mut Vec<Label>,
    heap: &mut BinaryHeap<Queued>,
    n: usize,
    label: Label,
    key: Key,
) {
    if settled[n] {
        return;
    }
    if let Some(prev) = &best[n] {
        if prev.cmp_key(&key) != Ordering::Greater {
            return;
        }
    }
    best[n] = Some(key.clone());
    labels.push(label);
    heap.push(Queued {
        key,
        label: labels.len() - 1,
    });
}
