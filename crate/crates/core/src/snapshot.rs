//! Immutable analysis results that answer threshold-dependent questions
//! (verdicts, stop probabilities, rankings, reports) without re-routing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::CoordinateMode;
use crate::network::{Network, Stop};
use crate::pipeline::RideAnalysis;
use crate::preference::{KiviatPolygon, PreferenceResult};
use crate::quality::{
    build_survey_report, rank_stops, DEFAULT_MIN_SAMPLE, QualityError, ReportInput, SatisfactionRecord, StopCounter, StopDescriptor, StopStats,
    SurveyReport, Verdict,
};
use crate::route::Objective;
use crate::routing::RoutePlan;
use crate::sim::ScenarioResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Route,
    Classify,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Route => "route",
            Stage::Classify => "classify",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnapshotError {
    #[error("pipeline stage `{0}` has not been run")]
    MissingStage(Stage),
    #[error("unknown rider `{0}`")]
    UnknownRider(String),
    #[error("unknown stop `{0}`")]
    UnknownStop(String),
    #[error("rider `{0}` has no optimal route for the active criterion")]
    NoOptimum(String),
    #[error("no simulation results attached")]
    NoScenarios,
    #[error(transparent)]
    Quality(#[from] QualityError),
}

/// Threshold settings used when a query leaves them out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryDefaults {
    pub lambda: f64,
    pub criterion: Option<Objective>,
    pub min_sample: u64,
}

impl Default for QueryDefaults {
    fn default() -> Self {
        QueryDefaults {
            lambda: DEFAULT_LAMBDA,
            criterion: None,
            min_sample: DEFAULT_MIN_SAMPLE,
        }
    }
}

pub const DEFAULT_LAMBDA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    /// Creation time; the only field that varies between identical runs.
    pub created_unix_s: u64,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub defaults: QueryDefaults,
    pub mode: CoordinateMode,
    pub stop_count: usize,
    pub line_count: usize,
    pub ride_count: usize,
}

/// Inputs to [`build_snapshot`]; a missing part names the stage to run.
#[derive(Debug, Clone, Default)]
pub struct SnapshotParts {
    pub network: Option<Network>,
    pub analyses: Option<Vec<RideAnalysis>>,
    pub scenarios: Option<Vec<ScenarioResult>>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub defaults: QueryDefaults,
    pub created_unix_s: u64,
}

#[derive(Debug, Clone)]
pub struct AnalysisSnapshot {
    meta: SnapshotMeta,
    stops: BTreeMap<String, Stop>,
    rides: Vec<RideAnalysis>,
    rider_index: HashMap<String, usize>,
    departures: BTreeMap<String, Vec<usize>>,
    scenarios: Option<Vec<ScenarioResult>>,
}

/// One stop in the heat layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatEntry {
    pub stop_id: String,
    /// Latitude, or x in km for planar networks.
    pub lat: f64,
    /// Longitude, or y in km for planar networks.
    pub lon: f64,
    #[serde(rename = "Qr")]
    pub qr: u64,
    #[serde(rename = "Qb")]
    pub qb: u64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiderSummary {
    pub rider_id: String,
    pub origin: String,
    pub destination: String,
    pub criterion: Objective,
    pub gap: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedRoute {
    pub plan: RoutePlan,
    pub normalized: [f64; 4],
    pub vertices: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rider_id: String,
    pub origin: String,
    pub destination: String,
    pub real: ComparedRoute,
    /// Keyed by objective name; absent when unreachable.
    pub optimal: BTreeMap<Objective, ComparedRoute>,
    pub preference: Option<PreferenceResult>,
    pub baseline: Option<PreferenceResult>,
}

pub fn build_snapshot(parts: SnapshotParts) -> Result<AnalysisSnapshot, SnapshotError> {
    let network = parts.network.ok_or(SnapshotError::MissingStage(Stage::Ingest))?;
    let rides = parts.analyses.ok_or(SnapshotError::MissingStage(Stage::Route))?;
    let unclassified = rides
        .iter()
        .any(|r| r.preference.is_none() && r.optimal.iter().all(Option::is_some));
    if unclassified {
        return Err(SnapshotError::MissingStage(Stage::Classify));
    }
    let mut departures: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut rider_index = HashMap::with_capacity(rides.len());
    for (i, r) in rides.iter().enumerate() {
        departures.entry(r.origin.clone()).or_default().push(i);
        rider_index.insert(r.rider_id.clone(), i);
    }
    let meta = SnapshotMeta {
        created_unix_s: parts.created_unix_s,
        seed: parts.seed,
        config: parts.config,
        defaults: parts.defaults,
        mode: network.mode(),
        stop_count: network.stop_count(),
        line_count: network.line_count(),
        ride_count: rides.len(),
    };
    Ok(AnalysisSnapshot {
        meta,
        stops: network.stops().iter().map(|s| (s.id.clone(), s.clone())).collect(),
        rides,
        rider_index,
        departures,
        scenarios: parts.scenarios,
    })
}

fn check_lambda(lambda: f64) -> Result<(), SnapshotError> {
    if lambda >= 0.0 {
        Ok(())
    } else {
        Err(QualityError::BadLambda(lambda).into())
    }
}

impl AnalysisSnapshot {
    pub fn meta(&self) -> &SnapshotMeta {
        &self.meta
    }

    pub fn rides(&self) -> &[RideAnalysis] {
        &self.rides
    }

    pub fn scenarios(&self) -> Result<&[ScenarioResult], SnapshotError> {
        self.scenarios.as_deref().ok_or(SnapshotError::NoScenarios)
    }

    pub fn ride(&self, rider_id: &str) -> Result<&RideAnalysis, SnapshotError> {
        self.rider_index
            .get(rider_id)
            .map(|&i| &self.rides[i])
            .ok_or_else(|| SnapshotError::UnknownRider(rider_id.to_owned()))
    }

    /// Verdict records at `lambda`. Rides whose criterion cannot be
    /// evaluated are left out.
    pub fn records(&self, lambda: f64, criterion: Option<Objective>) -> Result<Vec<SatisfactionRecord>, SnapshotError> {
        check_lambda(lambda)?;
        let mut out = Vec::with_capacity(self.rides.len());
        for r in &self.rides {
            if let Some(rec) = r.classify(lambda, criterion)? {
                out.push(rec);
            }
        }
        Ok(out)
    }

    /// `(unsatisfied, satisfied)` counts at `lambda`.
    pub fn verdict_counts(&self, lambda: f64, criterion: Option<Objective>) -> Result<(usize, usize), SnapshotError> {
        let recs = self.records(lambda, criterion)?;
        let bad = recs.iter().filter(|r| r.verdict == Verdict::Unsatisfactory).count();
        Ok((bad, recs.len() - bad))
    }

    /// Per-stop statistics for every stop with at least one departure.
    pub fn stop_stats(&self, lambda: f64, criterion: Option<Objective>) -> Result<Vec<StopStats>, SnapshotError> {
        let mut counter = StopCounter::default();
        for rec in self.records(lambda, criterion)? {
            counter.add(&rec.origin, rec.verdict);
        }
        Ok(counter.stats())
    }

    pub fn ranking(&self, lambda: f64, criterion: Option<Objective>, min_sample: u64) -> Result<Vec<StopStats>, SnapshotError> {
        Ok(rank_stops(&self.stop_stats(lambda, criterion)?, min_sample))
    }

    /// Ranked stops with coordinates, as served to the heat layer.
    pub fn heat(&self, lambda: f64, criterion: Option<Objective>, min_sample: u64) -> Result<Vec<HeatEntry>, SnapshotError> {
        Ok(self
            .ranking(lambda, criterion, min_sample)?
            .into_iter()
            .map(|s| {
                let [lat, lon] = self
                    .stops
                    .get(&s.stop_id)
                    .map_or([f64::NAN; 2], |st| st.position.csv_pair(self.meta.mode));
                HeatEntry {
                    stop_id: s.stop_id,
                    lat,
                    lon,
                    qr: s.qr,
                    qb: s.qb,
                    p: s.probability,
                }
            })
            .collect())
    }

    /// Riders departing `stop_id`, largest criterion gap first.
    pub fn riders_at(&self, stop_id: &str, lambda: f64, criterion: Option<Objective>) -> Result<Vec<RiderSummary>, SnapshotError> {
        check_lambda(lambda)?;
        if !self.stops.contains_key(stop_id) {
            return Err(SnapshotError::UnknownStop(stop_id.to_owned()));
        }
        let mut out = Vec::new();
        for &i in self.departures.get(stop_id).map(Vec::as_slice).unwrap_or(&[]) {
            let r = &self.rides[i];
            if let Some(rec) = r.classify(lambda, criterion)? {
                out.push(RiderSummary {
                    rider_id: r.rider_id.clone(),
                    origin: r.origin.clone(),
                    destination: r.destination.clone(),
                    criterion: rec.criterion,
                    gap: rec.gap(),
                    verdict: rec.verdict,
                });
            }
        }
        out.sort_by(|a, b| b.gap.total_cmp(&a.gap).then_with(|| a.rider_id.cmp(&b.rider_id)));
        Ok(out)
    }

    pub fn compare(&self, rider_id: &str) -> Result<Comparison, SnapshotError> {
        let r = self.ride(rider_id)?;
        let norm = r.normalized();
        let compared = |plan: &RoutePlan, slot: usize| {
            let n = norm.as_ref().map_or([0.0; 4], |n| n[slot].0);
            let poly = KiviatPolygon::new(n[0], n[1], n[2], n[3]);
            ComparedRoute {
                plan: plan.clone(),
                normalized: n,
                vertices: poly.vertices,
            }
        };
        let optimal = Objective::AXES
            .into_iter()
            .filter_map(|o| r.optimal_for(o).map(|p| (o, compared(p, o.axis() + 1))))
            .collect();
        Ok(Comparison {
            rider_id: r.rider_id.clone(),
            origin: r.origin.clone(),
            destination: r.destination.clone(),
            real: compared(&r.real, 0),
            optimal,
            preference: r.preference.clone(),
            baseline: r.baseline.clone(),
        })
    }

    fn descriptor(&self, stop_id: &str) -> Result<StopDescriptor, SnapshotError> {
        let s = self
            .stops
            .get(stop_id)
            .ok_or_else(|| SnapshotError::UnknownStop(stop_id.to_owned()))?;
        Ok(StopDescriptor {
            stop_id: s.id.clone(),
            position: s.position,
            is_terminal: s.is_terminal,
        })
    }

    /// Survey report for an unsatisfied rider at `lambda`.
    pub fn report(&self, rider_id: &str, lambda: f64, criterion: Option<Objective>) -> Result<SurveyReport, SnapshotError> {
        check_lambda(lambda)?;
        let r = self.ride(rider_id)?;
        let c = r
            .criterion(criterion)
            .ok_or_else(|| SnapshotError::NoOptimum(rider_id.to_owned()))?;
        let opt = r
            .optimal_for(c)
            .ok_or_else(|| SnapshotError::NoOptimum(rider_id.to_owned()))?;
        Ok(build_survey_report(ReportInput {
            rider_id: &r.rider_id,
            origin: self.descriptor(&r.origin)?,
            destination: self.descriptor(&r.destination)?,
            criterion: c,
            lambda,
            real: (&r.real.route, &r.real.metrics),
            optimal: (&opt.route, &opt.metrics),
        })?)
    }

    /// Unsatisfied riders at `lambda`, largest gap first, at most `limit`.
    pub fn top_unsatisfied(&self, lambda: f64, criterion: Option<Objective>, limit: usize) -> Result<Vec<RiderSummary>, SnapshotError> {
        let mut out: Vec<RiderSummary> = self
            .records(lambda, criterion)?
            .into_iter()
            .filter(|r| r.verdict == Verdict::Unsatisfactory)
            .map(|rec| {
                let ride = &self.rides[self.rider_index[&rec.rider_id]];
                RiderSummary {
                    rider_id: rec.rider_id.clone(),
                    origin: rec.origin.clone(),
                    destination: ride.destination.clone(),
                    criterion: rec.criterion,
                    gap: rec.gap(),
                    verdict: rec.verdict,
                }
            })
            .collect();
        out.sort_by(|a, b| b.gap.total_cmp(&a.gap).then_with(|| a.rider_id.cmp(&b.rider_id)));
        out.truncate(limit);
        Ok(out)
    }
}

/// CSV text of a ranking with the `stop_id,lat,lon,Qr,Qb,probability` header.
pub fn ranking_csv(entries: &[HeatEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stop_id", "lat", "lon", "Qr", "Qb", "probability"])
        .expect("write to memory");
    for e in entries {
        w.write_record([
            e.stop_id.clone(),
            e.lat.to_string(),
            e.lon.to_string(),
            e.qr.to_string(),
            e.qb.to_string(),
            e.p.to_string(),
        ])
        .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf8 csv")
}
