//! Searches on the overlaid stop graph that ignore line changes entirely.
//! They bound the constrained optimum from below and coincide with it when
//! the transfer cap does not bind.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use crate::graph::TransitGraph;
use crate::network::{Network, StopIdx};

#[derive(Debug, Clone, PartialEq)]
pub struct StopPath {
    pub stops: Vec<StopIdx>,
    pub value: f64,
}

#[derive(PartialEq)]
struct Open(f64, usize);

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn unwind(prev: &[Option<StopIdx>], dest: StopIdx) -> Vec<StopIdx> {
    let mut stops = vec![dest];
    let mut cur = dest;
    while let Some(p) = prev[cur.0] {
        stops.push(p);
        cur = p;
    }
    stops.reverse();
    stops
}

/// A* over arc lengths with the straight-line distance as heuristic.
pub fn shortest_distance(network: &Network, graph: &TransitGraph, origin: StopIdx, dest: StopIdx) -> Option<StopPath> {
    let n = network.stop_count();
    let mut g = vec![f64::INFINITY; n];
    let mut prev = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[origin.0] = 0.0;
    open.push(Reverse(Open(network.distance_km(origin, dest), origin.0)));
    while let Some(Reverse(Open(_, u))) = open.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        if u == dest.0 {
            return Some(StopPath {
                stops: unwind(&prev, dest),
                value: g[u],
            });
        }
        for arc in graph.outgoing(StopIdx(u)) {
            let v = arc.to.0;
            let cand = g[u] + arc.length_km;
            if !closed[v] && cand < g[v] {
                g[v] = cand;
                prev[v] = Some(StopIdx(u));
                open.push(Reverse(Open(cand + network.distance_km(arc.to, dest), v)));
            }
        }
    }
    None
}

/// Breadth-first search counting links.
pub fn fewest_hops(network: &Network, graph: &TransitGraph, origin: StopIdx, dest: StopIdx) -> Option<StopPath> {
    let n = network.stop_count();
    let mut depth = vec![u32::MAX; n];
    let mut prev = vec![None; n];
    let mut queue = VecDeque::from([origin]);
    depth[origin.0] = 0;
    while let Some(u) = queue.pop_front() {
        if u == dest {
            return Some(StopPath {
                stops: unwind(&prev, dest),
                value: f64::from(depth[u.0]),
            });
        }
        for arc in graph.outgoing(u) {
            if depth[arc.to.0] == u32::MAX {
                depth[arc.to.0] = depth[u.0] + 1;
                prev[arc.to.0] = Some(u);
                queue.push_back(arc.to);
            }
        }
    }
    None
}
