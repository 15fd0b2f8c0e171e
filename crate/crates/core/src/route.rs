//! Itineraries expressed as line legs, and their criterion values.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link_times::LinkTimeTable;
use crate::network::{LineIdx, Network, StopIdx};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("route has no legs")]
    Empty,
    #[error("unknown line `{0}`")]
    UnknownLine(String),
    #[error("unknown stop `{0}`")]
    UnknownStop(String),
    #[error("line `{line}` does not serve `{board}` then `{alight}`")]
    NotServed { line: String, board: String, alight: String },
    #[error("leg on `{line}` lists stops that are not a contiguous run of its itinerary")]
    BadStopSequence { line: String },
    #[error("legs do not chain: alight at `{alight}` but next board at `{board}`")]
    ChainBreak { alight: String, board: String },
}

/// The four convenience criteria a rider may optimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Distance,
    Time,
    Transfers,
    Hops,
}

impl Objective {
    /// Kiviat axis order.
    pub const AXES: [Objective; 4] = [
        Objective::Distance,
        Objective::Time,
        Objective::Transfers,
        Objective::Hops,
    ];

    /// Tie-break order shared by routing and preference classification.
    pub const CASCADE: [Objective; 4] = [
        Objective::Transfers,
        Objective::Time,
        Objective::Distance,
        Objective::Hops,
    ];

    pub fn axis(self) -> usize {
        match self {
            Objective::Distance => 0,
            Objective::Time => 1,
            Objective::Transfers => 2,
            Objective::Hops => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Distance => "distance",
            Objective::Time => "time",
            Objective::Transfers => "transfers",
            Objective::Hops => "hops",
        }
    }

    /// Unit of the criterion value, used to label thresholds.
    pub fn unit(self) -> &'static str {
        match self {
            Objective::Distance => "km",
            Objective::Time => "s",
            Objective::Transfers => "transfers",
            Objective::Hops => "hops",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "distance" => Ok(Objective::Distance),
            "time" => Ok(Objective::Time),
            "transfers" | "connections" => Ok(Objective::Transfers),
            "hops" | "stops" => Ok(Objective::Hops),
            other => Err(format!("unknown criterion `{other}`")),
        }
    }
}

/// One ride on a single line, boarding and alighting at the ends of `stops`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Leg {
    pub line: String,
    pub board: String,
    pub alight: String,
    pub stops: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub legs: Vec<Leg>,
}

/// A leg pinned to itinerary positions `from..=to` of its line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedLeg {
    pub line: LineIdx,
    pub from: usize,
    pub to: usize,
}

impl Leg {
    /// Builds a leg from itinerary positions `from..=to` of `line`.
    pub fn from_positions(network: &Network, line: LineIdx, from: usize, to: usize) -> Leg {
        debug_assert!(from < to);
        let itin = network.itinerary(line);
        Leg {
            line: network.line_id(line).to_owned(),
            board: network.stop_id(itin[from]).to_owned(),
            alight: network.stop_id(itin[to]).to_owned(),
            stops: itin[from..=to].iter().map(|&s| network.stop_id(s).to_owned()).collect(),
        }
    }

    /// Finds the shortest run of `line` from `board` to `alight` (earliest
    /// on ties) and builds the leg over it.
    pub fn between(network: &Network, line: &str, board: &str, alight: &str) -> Result<Leg, RouteError> {
        let (li, from, to) = locate_run(network, line, board, alight)?;
        Ok(Leg::from_positions(network, li, from, to))
    }

    pub fn hops(&self) -> usize {
        self.stops.len().saturating_sub(1)
    }

    pub fn resolve(&self, network: &Network) -> Result<ResolvedLeg, RouteError> {
        let line = network
            .line_idx(&self.line)
            .ok_or_else(|| RouteError::UnknownLine(self.line.clone()))?;
        if self.stops.len() < 2
            || self.stops.first() != Some(&self.board)
            || self.stops.last() != Some(&self.alight)
        {
            return Err(RouteError::BadStopSequence { line: self.line.clone() });
        }
        let itin = network.itinerary(line);
        let want: Vec<StopIdx> = self
            .stops
            .iter()
            .map(|s| network.stop_idx(s).ok_or_else(|| RouteError::UnknownStop(s.clone())))
            .collect::<Result<_, _>>()?;
        itin.windows(want.len())
            .position(|w| w == want.as_slice())
            .map(|from| ResolvedLeg {
                line,
                from,
                to: from + want.len() - 1,
            })
            .ok_or_else(|| RouteError::BadStopSequence { line: self.line.clone() })
    }
}

fn locate_run(network: &Network, line: &str, board: &str, alight: &str) -> Result<(LineIdx, usize, usize), RouteError> {
    let li = network
        .line_idx(line)
        .ok_or_else(|| RouteError::UnknownLine(line.to_owned()))?;
    let b = network
        .stop_idx(board)
        .ok_or_else(|| RouteError::UnknownStop(board.to_owned()))?;
    let a = network
        .stop_idx(alight)
        .ok_or_else(|| RouteError::UnknownStop(alight.to_owned()))?;
    let itin = network.itinerary(li);
    let mut best: Option<(usize, usize)> = None;
    for (i, &s) in itin.iter().enumerate() {
        if s != b {
            continue;
        }
        if let Some(off) = itin[i + 1..].iter().position(|&t| t == a) {
            let j = i + 1 + off;
            if best.is_none_or(|(bi, bj)| j - i < bj - bi) {
                best = Some((i, j));
            }
        }
    }
    best.map(|(i, j)| (li, i, j)).ok_or_else(|| RouteError::NotServed {
        line: line.to_owned(),
        board: board.to_owned(),
        alight: alight.to_owned(),
    })
}

impl Route {
    pub fn origin(&self) -> &str {
        &self.legs[0].board
    }

    pub fn destination(&self) -> &str {
        &self.legs[self.legs.len() - 1].alight
    }

    /// Checks leg chaining and line membership, returning resolved legs.
    pub fn resolve(&self, network: &Network) -> Result<Vec<ResolvedLeg>, RouteError> {
        if self.legs.is_empty() {
            return Err(RouteError::Empty);
        }
        for pair in self.legs.windows(2) {
            if pair[0].alight != pair[1].board {
                return Err(RouteError::ChainBreak {
                    alight: pair[0].alight.clone(),
                    board: pair[1].board.clone(),
                });
            }
        }
        self.legs.iter().map(|l| l.resolve(network)).collect()
    }

    /// The `(line, board stop)` sequence used as the last tie-breaker.
    pub fn signature(&self) -> Vec<(&str, &str)> {
        self.legs.iter().map(|l| (l.line.as_str(), l.board.as_str())).collect()
    }
}

/// Criterion values of one route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteMetrics {
    pub distance_km: f64,
    pub time_s: f64,
    pub transfers: u32,
    pub hops: u32,
}

impl RouteMetrics {
    pub fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Distance => self.distance_km,
            Objective::Time => self.time_s,
            Objective::Transfers => f64::from(self.transfers),
            Objective::Hops => f64::from(self.hops),
        }
    }

    pub fn as_axes(&self) -> [f64; 4] {
        Objective::AXES.map(|o| self.value(o))
    }

    /// Orders by `objective`, then by the fixed cascade
    /// (transfers, time, distance, hops).
    pub fn cascade_cmp(&self, other: &RouteMetrics, objective: Objective) -> Ordering {
        self.value(objective)
            .total_cmp(&other.value(objective))
            .then_with(|| {
                Objective::CASCADE
                    .iter()
                    .map(|&o| self.value(o).total_cmp(&other.value(o)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

/// Full deterministic order between two candidate routes for `objective`.
pub fn compare_routes(a: (&Route, &RouteMetrics), b: (&Route, &RouteMetrics), objective: Objective) -> Ordering {
    a.1.cascade_cmp(b.1, objective)
        .then_with(|| a.0.signature().cmp(&b.0.signature()))
}

/// Accumulates criterion values along a route in travel order: each link
/// time is added as it is ridden and the transfer wait is added at each
/// boarding after the first.
pub fn accumulate_metrics(network: &Network, times: &LinkTimeTable, legs: &[ResolvedLeg]) -> RouteMetrics {
    let mut m = RouteMetrics {
        distance_km: 0.0,
        time_s: 0.0,
        transfers: 0,
        hops: 0,
    };
    for (k, leg) in legs.iter().enumerate() {
        if k > 0 {
            m.transfers += 1;
            m.time_s += times.transfer_wait_s();
        }
        for pos in leg.from..leg.to {
            m.distance_km += network.link_length(leg.line, pos);
            m.time_s += times.link_time(network, leg.line, pos);
            m.hops += 1;
        }
    }
    m
}

/// Criterion values of `route` on `network`.
pub fn route_metrics(route: &Route, network: &Network, times: &LinkTimeTable) -> Result<RouteMetrics, RouteError> {
    let legs = route.resolve(network)?;
    Ok(accumulate_metrics(network, times, &legs))
}
