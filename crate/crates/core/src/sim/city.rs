use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SimError, SynthParams, MAX_CITY_ATTEMPTS, MAX_DESTINATION_TRIES};
use crate::geo::{CoordinateMode, Position};
use crate::graph::{StateGraph, TransitGraph};
use crate::ingest::RideRecord;
use crate::link_times::{LinkStat, LinkTimeTable, TimeDefaults};
use crate::network::{BusLine, LineIdx, Network, Stop, StopIdx};
use crate::pipeline::AnalysisConfig;
use crate::quality::OPTIMALITY_EPS;
use crate::route::{accumulate_metrics, Leg, Objective, ResolvedLeg, Route};
use crate::routing::{RoutePlan, Router, RouterConfig};

const LINE_ATTEMPTS: usize = 64;
const NETWORK_STREAM: u64 = 0;
const PLAN_STREAM: u64 = 1;
const RIDER_STREAM_BASE: u64 = 1 << 20;

/// Ground truth for one generated rider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRide {
    pub rider_id: String,
    pub criterion: Objective,
    pub suboptimal: bool,
    /// Observed minus optimal on `criterion`.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub params: SynthParams,
    pub network: Network,
    pub times: LinkTimeTable,
    pub rides: Vec<RideRecord>,
    pub planted: Vec<PlantedRide>,
    pub hotspots: Vec<String>,
    /// Regenerations needed before the population fit.
    pub attempts: usize,
}

impl SyntheticCity {
    /// Analysis settings matching the generator's transfer cap.
    pub fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            router: RouterConfig {
                max_transfers: self.params.max_transfers,
            },
            ..Default::default()
        }
    }
}

fn rng_for(seed: u64, attempt: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
    rng.set_stream(stream);
    rng
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Jittered grid of stops crossed by random simple-path lines, plus a
/// link-time table with one cruising speed per line.
pub fn generate_network(params: &SynthParams, rng: &mut impl Rng) -> Result<(Network, LinkTimeTable), SimError> {
    params.validate()?;
    let (cols, rows) = (params.grid_cols, params.grid_rows);
    let sw = id_width(params.stop_count());
    let mut positions = Vec::with_capacity(params.stop_count());
    for r in 0..rows {
        for c in 0..cols {
            let mut off = || rng.gen_range(-params.jitter..=params.jitter) * params.spacing_km;
            let x = c as f64 * params.spacing_km + off();
            let y = r as f64 * params.spacing_km + off();
            positions.push(Position::planar(x, y));
        }
    }

    let neighbours = |i: usize| {
        let (r, c) = ((i / cols) as isize, (i % cols) as isize);
        let mut out = Vec::with_capacity(8);
        let reach = params.max_step as isize;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (nr, nc) = (r + dr, c + dc);
                if (dr, dc) != (0, 0) && nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols {
                    out.push((nr as usize * cols + nc as usize, (dr, dc)));
                }
            }
        }
        out
    };

    let [lo, hi] = params.line_length;
    let mut paths: Vec<Vec<usize>> = Vec::with_capacity(params.line_count);
    for _ in 0..params.line_count {
        let target = rng.gen_range(lo..=hi);
        let mut found = None;
        for _ in 0..LINE_ATTEMPTS {
            let mut path = vec![rng.gen_range(0..params.stop_count())];
            let mut heading = None;
            while path.len() < target {
                let here = *path.last().unwrap();
                let options: Vec<_> = neighbours(here).into_iter().filter(|(n, _)| !path.contains(n)).collect();
                if options.is_empty() {
                    break;
                }
                // buses mostly keep going straight
                let &(next, dir) = options
                    .choose_weighted(rng, |(_, d)| if Some(*d) == heading { 4.0 } else { 1.0 })
                    .expect("non-empty options");
                heading = Some(dir);
                path.push(next);
            }
            if path.len() >= lo {
                found = Some(path);
                break;
            }
        }
        paths.push(found.ok_or_else(|| SimError::InvalidParams("cannot lay out a line of the minimum length".into()))?);
    }

    let mut terminal = vec![false; params.stop_count()];
    for p in &paths {
        terminal[p[0]] = true;
        terminal[p[p.len() - 1]] = true;
    }
    let stop_id = |i: usize| format!("S{i:0sw$}");
    let stops: Vec<Stop> = positions
        .iter()
        .enumerate()
        .map(|(i, &position)| Stop {
            id: stop_id(i),
            position,
            is_terminal: terminal[i],
        })
        .collect();
    let lw = id_width(params.line_count + 1).max(2);
    let lines: Vec<BusLine> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| BusLine {
            id: format!("L{:0lw$}", i + 1),
            itinerary: p.iter().map(|&s| stop_id(s)).collect(),
        })
        .collect();
    let network = Network::new(CoordinateMode::Planar, stops, lines)?;

    let [s0, s1] = params.speed_kmh;
    let mut times = LinkTimeTable::fallback(TimeDefaults {
        default_speed_kmh: (s0 + s1) / 2.0,
        transfer_wait_s: params.transfer_wait_s,
    });
    for li in network.line_indices() {
        let speed = if s0 < s1 { rng.gen_range(s0..s1) } else { s0 };
        let itin = network.itinerary(li);
        for pos in 0..itin.len() - 1 {
            let mean_s = network.link_length(li, pos) / speed * 3600.0;
            times.insert(
                network.line_id(li),
                network.stop_id(itin[pos]),
                network.stop_id(itin[pos + 1]),
                LinkStat { mean_s, samples: 1 },
            );
        }
    }
    Ok((network, times))
}

struct Planter<'a> {
    params: &'a SynthParams,
    network: &'a Network,
    times: &'a LinkTimeTable,
    router: Router<'a>,
    /// `(line, position)` pairs serving each stop.
    served_at: Vec<Vec<(LineIdx, usize)>>,
    boardable: Vec<StopIdx>,
    alightable: Vec<StopIdx>,
    hotspots: Vec<StopIdx>,
}

/// Whether the optimum for `k` differs in metrics from every other optimum.
fn distinct_optimum(set: &[Option<RoutePlan>; 4], k: Objective) -> bool {
    let Some(own) = &set[k.axis()] else {
        return false;
    };
    set.iter()
        .enumerate()
        .filter(|&(i, _)| i != k.axis())
        .all(|(_, p)| p.as_ref().is_some_and(|p| p.metrics.as_axes() != own.metrics.as_axes()))
}

impl Planter<'_> {
    fn plan(&self, legs: Vec<ResolvedLeg>) -> RoutePlan {
        let metrics = accumulate_metrics(self.network, self.times, &legs);
        let legs = legs
            .iter()
            .map(|l| Leg::from_positions(self.network, l.line, l.from, l.to))
            .collect();
        RoutePlan {
            route: Route { legs },
            metrics,
        }
    }

    /// Direct and one-transfer routes from `o` to `d`.
    fn alternatives(&self, o: StopIdx, d: StopIdx) -> Vec<RoutePlan> {
        let mut out = Vec::new();
        for &(l1, i) in &self.served_at[o.0] {
            let itin = self.network.itinerary(l1);
            for (j, &s) in itin.iter().enumerate().skip(i + 1) {
                let first = ResolvedLeg { line: l1, from: i, to: j };
                if s == d {
                    out.push(self.plan(vec![first]));
                    break;
                }
                if self.params.max_transfers == 0 {
                    continue;
                }
                for &(l2, k) in &self.served_at[s.0] {
                    if l2 == l1 {
                        continue;
                    }
                    let itin2 = self.network.itinerary(l2);
                    if let Some(m) = itin2.iter().skip(k + 1).position(|&x| x == d) {
                        let second = ResolvedLeg {
                            line: l2,
                            from: k,
                            to: k + 1 + m,
                        };
                        out.push(self.plan(vec![first, second]));
                    }
                }
            }
        }
        out
    }

    fn plant(&self, index: usize, criterion: Objective, suboptimal: bool, rng: &mut ChaCha8Rng) -> Option<(RideRecord, PlantedRide)> {
        let [d0, d1] = self.params.detour_range;
        let from_hotspot = suboptimal && !self.hotspots.is_empty() && rng.gen_bool(self.params.hotspot_share);
        for _ in 0..MAX_DESTINATION_TRIES {
            let origin = *if from_hotspot { &self.hotspots } else { &self.boardable }.choose(rng)?;
            let o_id = self.network.stop_id(origin);
            let dest = *self.alightable.choose(rng)?;
            if dest == origin {
                continue;
            }
            let d_id = self.network.stop_id(dest);
            let set = self.router.optimal_set(o_id, d_id).ok()?;
            let Some(opt) = &set[criterion.axis()] else {
                continue;
            };
            if self.params.distinct_optima && !distinct_optimum(&set, criterion) {
                continue;
            }
            let best = opt.metrics.value(criterion);
            let (plan, gap) = if suboptimal {
                let mut pool = self.alternatives(origin, dest);
                pool.extend(set.iter().flatten().cloned());
                let fits: Vec<(RoutePlan, f64)> = pool
                    .into_iter()
                    .map(|p| {
                        let gap = p.metrics.value(criterion) - best;
                        (p, gap)
                    })
                    .filter(|&(_, g)| g > OPTIMALITY_EPS && g >= d0 && g <= d1)
                    .collect();
                match fits.choose(rng) {
                    Some(f) => f.clone(),
                    None => continue,
                }
            } else {
                (opt.clone(), 0.0)
            };
            let rider_id = format!("R{:0w$}", index, w = id_width(self.params.riders).max(5));
            let ride = RideRecord {
                rider_id: rider_id.clone(),
                origin: o_id.to_owned(),
                destination: d_id.to_owned(),
                route: plan.route,
                timestamp: None,
            };
            let planted = PlantedRide {
                rider_id,
                criterion,
                suboptimal,
                gap,
            };
            return Some((ride, planted));
        }
        None
    }
}

/// Builds a city and a rider population with known ground truth.
///
/// Each rider follows its planted criterion's optimal route, except the
/// suboptimal share, which rides a feasible route worse by a gap inside the
/// detour range. If some rider cannot be placed, the lines are regenerated.
pub fn generate_synthetic_city(params: &SynthParams) -> Result<SyntheticCity, SimError> {
    params.validate()?;
    for attempt in 0..MAX_CITY_ATTEMPTS {
        let mut rng = rng_for(params.seed, attempt, NETWORK_STREAM);
        let (network, times) = generate_network(params, &mut rng)?;
        let graph = TransitGraph::build(&network);
        let states = StateGraph::build(&network, &times);
        let router = Router::new(
            &network,
            &graph,
            &states,
            RouterConfig {
                max_transfers: params.max_transfers,
            },
        );

        let mut served_at = vec![Vec::new(); network.stop_count()];
        for li in network.line_indices() {
            for (pos, &s) in network.itinerary(li).iter().enumerate() {
                served_at[s.0].push((li, pos));
            }
        }
        let pick = |keep: &dyn Fn(&[(LineIdx, usize)]) -> bool| -> Vec<StopIdx> {
            (0..network.stop_count()).filter(|&i| keep(&served_at[i])).map(StopIdx).collect()
        };
        let boardable = pick(&|s| s.iter().any(|&(l, p)| p + 1 < network.itinerary(l).len()));
        let alightable = pick(&|s| s.iter().any(|&(_, p)| p > 0));

        let mut plan_rng = rng_for(params.seed, attempt, PLAN_STREAM);
        let hotspots: Vec<StopIdx> = index::sample(&mut plan_rng, boardable.len(), params.hotspots.min(boardable.len()))
            .into_iter()
            .map(|i| boardable[i])
            .collect();
        let mut criteria: Vec<Objective> = Objective::AXES
            .into_iter()
            .zip(params.preference_mix.counts(params.riders))
            .flat_map(|(o, n)| std::iter::repeat_n(o, n))
            .collect();
        criteria.shuffle(&mut plan_rng);
        let mut forced: Vec<bool> = (0..params.riders).map(|i| i < params.suboptimal_count()).collect();
        forced.shuffle(&mut plan_rng);

        let planter = Planter {
            params,
            network: &network,
            times: &times,
            router,
            served_at,
            boardable,
            alightable,
            hotspots,
        };
        let placed: Option<Vec<_>> = (0..params.riders)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(params.seed, attempt, RIDER_STREAM_BASE + i as u64);
                planter.plant(i, criteria[i], forced[i], &mut rng)
            })
            .collect();
        let Some(placed) = placed else {
            continue;
        };
        let hotspots = planter.hotspots.iter().map(|&s| network.stop_id(s).to_owned()).collect();
        let (rides, planted) = placed.into_iter().unzip();
        return Ok(SyntheticCity {
            params: params.clone(),
            network,
            times,
            rides,
            planted,
            hotspots,
            attempts: attempt + 1,
        });
    }
    Err(SimError::Infeasible(MAX_CITY_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::route_metrics;

    fn small() -> SynthParams {
        SynthParams {
            grid_cols: 6,
            grid_rows: 5,
            line_count: 6,
            line_length: [4, 8],
            riders: 200,
            hotspots: 3,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate_synthetic_city(&small()).unwrap();
        let b = generate_synthetic_city(&small()).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.rides, b.rides);
        assert_eq!(a.planted, b.planted);
        assert_eq!(a.times.to_json(), b.times.to_json());
    }

    #[test]
    fn planted_gaps_hold() {
        let p = small();
        let city = generate_synthetic_city(&p).unwrap();
        assert_eq!(city.rides.len(), p.riders);
        assert_eq!(city.planted.iter().filter(|r| r.suboptimal).count(), p.suboptimal_count());
        for (ride, truth) in city.rides.iter().zip(&city.planted) {
            let m = route_metrics(&ride.route, &city.network, &city.times).unwrap();
            assert!(m.transfers <= p.max_transfers);
            if truth.suboptimal {
                assert!(truth.gap >= p.detour_range[0] && truth.gap <= p.detour_range[1]);
            } else {
                assert_eq!(truth.gap, 0.0);
            }
        }
    }

    #[test]
    fn lines_are_simple_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (net, _) = generate_network(&small(), &mut rng).unwrap();
        for l in net.lines() {
            let mut seen = l.itinerary.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), l.itinerary.len());
            assert!(l.itinerary.len() >= 4 && l.itinerary.len() <= 8);
        }
    }
}
