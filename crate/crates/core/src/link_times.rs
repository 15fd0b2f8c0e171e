//! Per-link traversal times estimated from vehicle GPS traces.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::geo::Position;
use crate::network::{LineIdx, Network};

/// A vehicle is at a stop when it is within this many km of it.
pub const STOP_GEOFENCE_KM: f64 = 0.050;

pub const DEFAULT_SPEED_KMH: f64 = 20.0;
pub const DEFAULT_TRANSFER_WAIT_S: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDefaults {
    pub default_speed_kmh: f64,
    pub transfer_wait_s: f64,
}

impl Default for TimeDefaults {
    fn default() -> Self {
        TimeDefaults {
            default_speed_kmh: DEFAULT_SPEED_KMH,
            transfer_wait_s: DEFAULT_TRANSFER_WAIT_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStat {
    pub mean_s: f64,
    pub samples: u32,
}

/// Mean traversal seconds per `(line, from, to)` link. Links without
/// observations fall back to `length / default_speed`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkTimeTable {
    defaults: TimeDefaults,
    links: HashMap<String, HashMap<String, HashMap<String, LinkStat>>>,
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    line: String,
    from: String,
    to: String,
    mean_s: f64,
    samples: u32,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    default_speed_kmh: f64,
    transfer_wait_s: f64,
    links: Vec<LinkRecord>,
}

impl LinkTimeTable {
    /// A table with no observations; every lookup uses the fallback speed.
    pub fn fallback(defaults: TimeDefaults) -> Self {
        LinkTimeTable {
            defaults,
            links: HashMap::new(),
        }
    }

    pub fn defaults(&self) -> TimeDefaults {
        self.defaults
    }

    pub fn transfer_wait_s(&self) -> f64 {
        self.defaults.transfer_wait_s
    }

    /// Records a mean directly. Non-positive or non-finite means are ignored.
    pub fn insert(&mut self, line: &str, from: &str, to: &str, stat: LinkStat) {
        if !(stat.mean_s > 0.0 && stat.mean_s.is_finite()) {
            return;
        }
        self.links
            .entry(line.to_owned())
            .or_default()
            .entry(from.to_owned())
            .or_default()
            .insert(to.to_owned(), stat);
    }

    pub fn observed(&self, line: &str, from: &str, to: &str) -> Option<LinkStat> {
        self.links.get(line)?.get(from)?.get(to).copied()
    }

    pub fn len(&self) -> usize {
        self.links.values().flat_map(|m| m.values()).map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seconds for a link of `length_km`: the stored mean when observed,
    /// otherwise the fallback speed.
    pub fn lookup(&self, line: &str, from: &str, to: &str, length_km: f64) -> f64 {
        match self.observed(line, from, to) {
            Some(stat) => stat.mean_s,
            None => length_km / self.defaults.default_speed_kmh * 3600.0,
        }
    }

    /// Time of the link leaving itinerary position `pos` of `line`.
    pub fn link_time(&self, network: &Network, line: LineIdx, pos: usize) -> f64 {
        let itin = network.itinerary(line);
        self.lookup(
            network.line_id(line),
            network.stop_id(itin[pos]),
            network.stop_id(itin[pos + 1]),
            network.link_length(line, pos),
        )
    }

    pub fn to_json(&self) -> String {
        let mut sorted = BTreeMap::new();
        for (line, froms) in &self.links {
            for (from, tos) in froms {
                for (to, stat) in tos {
                    sorted.insert((line.clone(), from.clone(), to.clone()), *stat);
                }
            }
        }
        let file = TableFile {
            default_speed_kmh: self.defaults.default_speed_kmh,
            transfer_wait_s: self.defaults.transfer_wait_s,
            links: sorted
                .into_iter()
                .map(|((line, from, to), s)| LinkRecord {
                    line,
                    from,
                    to,
                    mean_s: s.mean_s,
                    samples: s.samples,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("link table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: TableFile = serde_json::from_str(text)?;
        let mut table = LinkTimeTable::fallback(TimeDefaults {
            default_speed_kmh: file.default_speed_kmh,
            transfer_wait_s: file.transfer_wait_s,
        });
        for r in file.links {
            table.insert(&r.line, &r.from, &r.to, LinkStat {
                mean_s: r.mean_s,
                samples: r.samples,
            });
        }
        Ok(table)
    }
}

/// One GPS fix of a vehicle running a line.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsFix {
    pub vehicle_id: String,
    pub line_id: String,
    pub position: Position,
    pub timestamp_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimationReport {
    pub passes: usize,
    pub discarded_passes: usize,
    pub unknown_line_fixes: usize,
}

struct Pass {
    first_seen: Vec<Option<f64>>,
    last_pos: Option<usize>,
    last_t: f64,
    monotone: bool,
}

impl Pass {
    fn new(len: usize) -> Self {
        Pass {
            first_seen: vec![None; len],
            last_pos: None,
            last_t: f64::NEG_INFINITY,
            monotone: true,
        }
    }
}

/// Averages observed link traversal times.
///
/// Fixes are grouped per `(vehicle, line)` in input order. Within a group
/// the vehicle passes itinerary positions in order; the time at a position
/// is the first fix inside the geofence. A group splits into a new pass
/// when the vehicle is seen back at the first stop after progressing past
/// it. A pass whose timestamps go backwards is discarded whole.
pub fn estimate_link_times<I>(fixes: I, network: &Network, defaults: TimeDefaults) -> (LinkTimeTable, EstimationReport)
where
    I: IntoIterator<Item = GpsFix>,
{
    let mode = network.mode();
    let mut report = EstimationReport::default();
    let mut active: HashMap<(String, LineIdx), Pass> = HashMap::new();
    let mut finished: Vec<(LineIdx, Pass)> = Vec::new();

    for fix in fixes {
        let Some(line) = network.line_idx(&fix.line_id) else {
            report.unknown_line_fixes += 1;
            continue;
        };
        let itin = network.itinerary(line);
        let near = |p: usize| mode.distance_km(fix.position, network.stop(itin[p]).position) <= STOP_GEOFENCE_KM;
        let key = (fix.vehicle_id.clone(), line);
        let pass = active.entry(key.clone()).or_insert_with(|| Pass::new(itin.len()));

        let start = pass.last_pos.map_or(0, |p| p + 1);
        let hit = (start..itin.len()).find(|&p| near(p));
        let restart = hit.is_none() && pass.last_pos.is_some_and(|p| p > 0) && near(0);
        if restart {
            let done = active.insert(key.clone(), Pass::new(itin.len())).expect("pass exists");
            finished.push((line, done));
        }
        let pass = active.get_mut(&key).expect("pass exists");
        if fix.timestamp_s < pass.last_t {
            pass.monotone = false;
        }
        pass.last_t = fix.timestamp_s;
        let hit = if restart { Some(0) } else { hit };
        if let Some(p) = hit {
            if pass.first_seen[p].is_none() {
                pass.first_seen[p] = Some(fix.timestamp_s);
            }
            pass.last_pos = Some(p);
        }
    }
    let mut remaining: Vec<_> = active.into_iter().collect();
    remaining.sort_by(|a, b| a.0.cmp(&b.0));
    finished.extend(remaining.into_iter().map(|((_, line), pass)| (line, pass)));

    let mut sums: BTreeMap<(String, String, String), (f64, u32)> = BTreeMap::new();
    for (line, pass) in finished {
        report.passes += 1;
        if !pass.monotone {
            report.discarded_passes += 1;
            continue;
        }
        let itin = network.itinerary(line);
        for p in 0..itin.len() - 1 {
            if let (Some(t0), Some(t1)) = (pass.first_seen[p], pass.first_seen[p + 1]) {
                if t1 > t0 {
                    let key = (
                        network.line_id(line).to_owned(),
                        network.stop_id(itin[p]).to_owned(),
                        network.stop_id(itin[p + 1]).to_owned(),
                    );
                    let e = sums.entry(key).or_insert((0.0, 0));
                    e.0 += t1 - t0;
                    e.1 += 1;
                }
            }
        }
    }
    let mut table = LinkTimeTable::fallback(defaults);
    for ((line, from, to), (sum, n)) in sums {
        table.insert(&line, &from, &to, LinkStat {
            mean_s: sum / f64::from(n),
            samples: n,
        });
    }
    (table, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CoordinateMode;
    use crate::network::{BusLine, Stop};

    fn net() -> Network {
        let stops = [("A", 0.0), ("B", 1.0), ("C", 2.0)]
            .iter()
            .map(|&(id, x)| Stop {
                id: id.into(),
                position: Position::planar(x, 0.0),
                is_terminal: false,
            })
            .collect();
        let lines = vec![BusLine {
            id: "L1".into(),
            itinerary: vec!["A".into(), "B".into(), "C".into()],
        }];
        Network::new(CoordinateMode::Planar, stops, lines).unwrap()
    }

    fn fix(v: &str, x: f64, t: f64) -> GpsFix {
        GpsFix {
            vehicle_id: v.into(),
            line_id: "L1".into(),
            position: Position::planar(x, 0.0),
            timestamp_s: t,
        }
    }

    #[test]
    fn mean_of_two_passes() {
        let n = net();
        let fixes = vec![
            fix("v1", 0.0, 0.0),
            fix("v1", 0.5, 50.0),
            fix("v1", 1.01, 100.0),
            fix("v2", 0.0, 1000.0),
            fix("v2", 1.0, 1140.0),
        ];
        let (table, report) = estimate_link_times(fixes, &n, TimeDefaults::default());
        assert_eq!(report.passes, 2);
        let stat = table.observed("L1", "A", "B").unwrap();
        assert_eq!(stat.mean_s, 120.0);
        assert_eq!(stat.samples, 2);
        assert!(table.observed("L1", "B", "C").is_none());
    }

    #[test]
    fn fallback_is_length_over_speed() {
        let n = net();
        let table = LinkTimeTable::fallback(TimeDefaults {
            default_speed_kmh: 20.0,
            transfer_wait_s: 300.0,
        });
        assert!((table.link_time(&n, LineIdx(0), 0) - 180.0).abs() < 1e-9);
        let (empty, _) = estimate_link_times(Vec::new(), &n, TimeDefaults::default());
        assert!(empty.is_empty());
    }

    #[test]
    fn out_of_order_pass_discarded() {
        let n = net();
        let fixes = vec![
            fix("v1", 0.0, 0.0),
            fix("v1", 1.0, 100.0),
            fix("v2", 0.0, 500.0),
            fix("v2", 1.0, 400.0),
            fix("v2", 2.0, 600.0),
        ];
        let (table, report) = estimate_link_times(fixes, &n, TimeDefaults::default());
        assert_eq!(report.discarded_passes, 1);
        assert_eq!(table.observed("L1", "A", "B").unwrap().mean_s, 100.0);
        assert!(table.observed("L1", "B", "C").is_none());
    }

    #[test]
    fn restart_at_first_stop_opens_new_pass() {
        let n = net();
        let fixes = vec![
            fix("v1", 0.0, 0.0),
            fix("v1", 1.0, 100.0),
            fix("v1", 2.0, 200.0),
            fix("v1", 0.0, 1000.0),
            fix("v1", 1.0, 1140.0),
        ];
        let (table, report) = estimate_link_times(fixes, &n, TimeDefaults::default());
        assert_eq!(report.passes, 2);
        assert_eq!(table.observed("L1", "A", "B").unwrap().mean_s, 120.0);
        assert_eq!(table.observed("L1", "B", "C").unwrap().mean_s, 100.0);
    }

    #[test]
    fn json_round_trip() {
        let mut t = LinkTimeTable::fallback(TimeDefaults::default());
        t.insert("L1", "A", "B", LinkStat { mean_s: 90.5, samples: 3 });
        let back = LinkTimeTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
