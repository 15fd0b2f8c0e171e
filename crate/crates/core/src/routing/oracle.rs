//! Exhaustive route enumeration for small networks. Test oracle only.

use crate::network::{LineIdx, Network, StopIdx};
use crate::route::{Leg, Route};

use super::RoutingError;

pub const DEFAULT_ROUTE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_transfers: u32,
    pub max_hops: u32,
    /// Enumeration aborts with [`RoutingError::TooManyRoutes`] past this.
    pub cap: usize,
}

impl OracleLimits {
    /// Hop bound large enough to never cut a simple route.
    pub fn for_network(network: &Network, max_transfers: u32) -> Self {
        let positions: usize = network.line_indices().map(|l| network.itinerary(l).len()).sum();
        OracleLimits {
            max_transfers,
            max_hops: positions as u32,
            cap: DEFAULT_ROUTE_CAP,
        }
    }
}

struct Walk<'a> {
    network: &'a Network,
    dest: StopIdx,
    limits: OracleLimits,
    visited: Vec<(StopIdx, LineIdx)>,
    legs: Vec<(LineIdx, usize, usize)>,
    out: Vec<Route>,
}

impl Walk<'_> {
    fn emit(&mut self) -> Result<(), RoutingError> {
        if self.out.len() >= self.limits.cap {
            return Err(RoutingError::TooManyRoutes(self.limits.cap));
        }
        let legs = self
            .legs
            .iter()
            .map(|&(l, from, to)| Leg::from_positions(self.network, l, from, to))
            .collect();
        self.out.push(Route { legs });
        Ok(())
    }

    fn extend(&mut self, stop: StopIdx, hops: u32) -> Result<(), RoutingError> {
        for line in self.network.line_indices() {
            let itin = self.network.itinerary(line);
            for board in (0..itin.len()).filter(|&p| itin[p] == stop) {
                if self.visited.contains(&(stop, line)) {
                    continue;
                }
                let mark = self.visited.len();
                self.visited.push((stop, line));
                for alight in board + 1..itin.len() {
                    let s = itin[alight];
                    let used = hops + (alight - board) as u32;
                    if used > self.limits.max_hops || self.visited.contains(&(s, line)) {
                        break;
                    }
                    self.visited.push((s, line));
                    self.legs.push((line, board, alight));
                    if s == self.dest {
                        self.emit()?;
                    }
                    if (self.legs.len() as u32) <= self.limits.max_transfers {
                        self.extend(s, used)?;
                    }
                    self.legs.pop();
                }
                self.visited.truncate(mark);
            }
        }
        Ok(())
    }
}

/// Every simple route from `origin` to `destination` within the limits,
/// each exactly once. A route is simple when it never occupies the same
/// `(stop, line)` pair twice.
pub fn brute_force_routes(
    network: &Network,
    origin: &str,
    destination: &str,
    limits: OracleLimits,
) -> Result<Vec<Route>, RoutingError> {
    let o = network
        .stop_idx(origin)
        .ok_or_else(|| RoutingError::UnknownStop(origin.to_owned()))?;
    let d = network
        .stop_idx(destination)
        .ok_or_else(|| RoutingError::UnknownStop(destination.to_owned()))?;
    if o == d {
        return Err(RoutingError::SameOriginDestination(origin.to_owned()));
    }
    let mut walk = Walk {
        network,
        dest: d,
        limits,
        visited: Vec::new(),
        legs: Vec::new(),
        out: Vec::new(),
    };
    walk.extend(o, 0)?;
    Ok(walk.out)
}
