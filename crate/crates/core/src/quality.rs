//! Satisfaction verdicts, per-stop probabilities and survey reports.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::route::{Objective, Route, RouteMetrics};

/// Slack allowed when checking that an observed value is not below its
/// optimum, and below which a gap counts as zero.
pub const OPTIMALITY_EPS: f64 = 1e-9;

pub const DEFAULT_MIN_SAMPLE: u64 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("threshold must be a non-negative number, got {0}")]
    BadLambda(f64),
    #[error("observed value {real} is below the optimum {opt}; the optimizer is wrong")]
    BelowOptimum { real: f64, opt: f64 },
    #[error("rider `{0}` is satisfied; reports are only built for unsatisfied riders")]
    Satisfied(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfactory,
    Unsatisfactory,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfactory => "satisfactory",
            Verdict::Unsatisfactory => "unsatisfactory",
        })
    }
}

/// Unsatisfactory when the gap to the optimum reaches `lambda`.
///
/// The boundary is closed: a gap exactly equal to `lambda` is
/// unsatisfactory. A ride that matches its optimum (gap within
/// [`OPTIMALITY_EPS`] of zero) is satisfactory even at `lambda = 0`.
pub fn classify_satisfaction(valc_real: f64, valc_opt: f64, lambda: f64) -> Result<Verdict, QualityError> {
    if !(lambda >= 0.0) {
        return Err(QualityError::BadLambda(lambda));
    }
    if valc_real < valc_opt - OPTIMALITY_EPS {
        return Err(QualityError::BelowOptimum {
            real: valc_real,
            opt: valc_opt,
        });
    }
    let gap = valc_real - valc_opt;
    Ok(if gap >= lambda && gap > OPTIMALITY_EPS {
        Verdict::Unsatisfactory
    } else {
        Verdict::Satisfactory
    })
}

/// Same rule applied to a precomputed gap.
pub fn verdict_for_gap(gap: f64, lambda: f64) -> Verdict {
    if gap >= lambda && gap > OPTIMALITY_EPS {
        Verdict::Unsatisfactory
    } else {
        Verdict::Satisfactory
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionRecord {
    pub rider_id: String,
    /// Stop the rider departs from; the record counts toward it.
    pub origin: String,
    pub criterion: Objective,
    pub valc_real: f64,
    pub valc_opt: f64,
    pub lambda: f64,
    pub verdict: Verdict,
}

impl SatisfactionRecord {
    pub fn new(
        rider_id: &str,
        origin: &str,
        criterion: Objective,
        real: &RouteMetrics,
        opt: &RouteMetrics,
        lambda: f64,
    ) -> Result<Self, QualityError> {
        let (valc_real, valc_opt) = (real.value(criterion), opt.value(criterion));
        Ok(SatisfactionRecord {
            rider_id: rider_id.to_owned(),
            origin: origin.to_owned(),
            criterion,
            valc_real,
            valc_opt,
            lambda,
            verdict: classify_satisfaction(valc_real, valc_opt, lambda)?,
        })
    }

    pub fn gap(&self) -> f64 {
        self.valc_real - self.valc_opt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopStats {
    pub stop_id: String,
    /// Unsatisfied riders departing the stop.
    pub qr: u64,
    /// Satisfied riders departing the stop.
    pub qb: u64,
    pub probability: f64,
}

impl StopStats {
    pub fn from_counts(stop_id: &str, qr: u64, qb: u64) -> Self {
        let total = qr + qb;
        StopStats {
            stop_id: stop_id.to_owned(),
            qr,
            qb,
            probability: if total > 0 { qr as f64 / total as f64 } else { 0.0 },
        }
    }

    pub fn total(&self) -> u64 {
        self.qr + self.qb
    }
}

/// Per-stop counts over any iterator of `(origin stop, verdict)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopCounter {
    counts: BTreeMap<String, (u64, u64)>,
}

impl StopCounter {
    pub fn add(&mut self, stop: &str, verdict: Verdict) {
        let e = self.counts.entry(stop.to_owned()).or_default();
        match verdict {
            Verdict::Unsatisfactory => e.0 += 1,
            Verdict::Satisfactory => e.1 += 1,
        }
    }

    /// Declares a stop so it is reported even with no departures.
    pub fn touch(&mut self, stop: &str) {
        self.counts.entry(stop.to_owned()).or_default();
    }

    pub fn merge(mut self, other: StopCounter) -> StopCounter {
        for (stop, (r, b)) in other.counts {
            let e = self.counts.entry(stop).or_default();
            e.0 += r;
            e.1 += b;
        }
        self
    }

    pub fn stats(&self) -> Vec<StopStats> {
        self.counts
            .iter()
            .map(|(s, &(r, b))| StopStats::from_counts(s, r, b))
            .collect()
    }
}

/// Aggregates records by their origin stop.
pub fn stop_probability(records: &[SatisfactionRecord]) -> Vec<StopStats> {
    let mut counter = StopCounter::default();
    for r in records {
        counter.add(&r.origin, r.verdict);
    }
    counter.stats()
}

/// Stops with at least `min_sample` departures, by probability descending,
/// then unsatisfied count descending, then stop id.
pub fn rank_stops(stats: &[StopStats], min_sample: u64) -> Vec<StopStats> {
    let mut ranked: Vec<StopStats> = stats.iter().filter(|s| s.total() >= min_sample).cloned().collect();
    ranked.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(b.qr.cmp(&a.qr))
            .then_with(|| a.stop_id.cmp(&b.stop_id))
    });
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDescriptor {
    pub stop_id: String,
    pub position: crate::geo::Position,
    pub is_terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub legs: Vec<crate::route::Leg>,
    pub lines: Vec<String>,
    pub distance_km: f64,
    pub time_s: f64,
    pub transfers: u32,
    pub hops: u32,
}

impl RouteSummary {
    pub fn new(route: &Route, m: &RouteMetrics) -> Self {
        RouteSummary {
            legs: route.legs.clone(),
            lines: route.legs.iter().map(|l| l.line.clone()).collect(),
            distance_km: m.distance_km,
            time_s: m.time_s,
            transfers: m.transfers,
            hops: m.hops,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub rider_id: String,
    pub origin: StopDescriptor,
    pub destination: StopDescriptor,
    pub criterion: Objective,
    pub unit: String,
    pub lambda: f64,
    pub real: RouteSummary,
    pub optimal: RouteSummary,
    pub difference: f64,
    pub steps: Vec<String>,
}

/// Inputs for [`build_survey_report`].
pub struct ReportInput<'a> {
    pub rider_id: &'a str,
    pub origin: StopDescriptor,
    pub destination: StopDescriptor,
    pub criterion: Objective,
    pub lambda: f64,
    pub real: (&'a Route, &'a RouteMetrics),
    pub optimal: (&'a Route, &'a RouteMetrics),
}

/// Report comparing a rider's observed route with the optimum for the
/// criterion, with boarding instructions for the optimum. Satisfied riders
/// are rejected.
pub fn build_survey_report(input: ReportInput<'_>) -> Result<SurveyReport, QualityError> {
    let c = input.criterion;
    let (real_v, opt_v) = (input.real.1.value(c), input.optimal.1.value(c));
    if classify_satisfaction(real_v, opt_v, input.lambda)? == Verdict::Satisfactory {
        return Err(QualityError::Satisfied(input.rider_id.to_owned()));
    }
    let steps = input
        .optimal
        .0
        .legs
        .iter()
        .map(|l| format!("board line {} at {}, alight at {}", l.line, l.board, l.alight))
        .collect();
    Ok(SurveyReport {
        rider_id: input.rider_id.to_owned(),
        origin: input.origin,
        destination: input.destination,
        criterion: c,
        unit: c.unit().to_owned(),
        lambda: input.lambda,
        real: RouteSummary::new(input.real.0, input.real.1),
        optimal: RouteSummary::new(input.optimal.0, input.optimal.1),
        difference: real_v - opt_v,
        steps,
    })
}

impl SurveyReport {
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let route_block = |s: &mut String, title: &str, r: &RouteSummary| {
            let _ = writeln!(s, "{title}");
            let _ = writeln!(s, "  lines:     {}", r.lines.join(" -> "));
            let _ = writeln!(s, "  distance:  {:.3} km", r.distance_km);
            let _ = writeln!(s, "  time:      {:.0} s", r.time_s);
            let _ = writeln!(s, "  transfers: {}", r.transfers);
            let _ = writeln!(s, "  stops:     {}", r.hops);
        };
        let _ = writeln!(s, "Rider {}", self.rider_id);
        let _ = writeln!(
            s,
            "From {} to {}",
            describe(&self.origin),
            describe(&self.destination)
        );
        let _ = writeln!(
            s,
            "Criterion {} (threshold {} {})",
            self.criterion, self.lambda, self.unit
        );
        let _ = writeln!(s);
        route_block(&mut s, "Observed route", &self.real);
        route_block(&mut s, "Optimal route", &self.optimal);
        let _ = writeln!(s);
        let _ = writeln!(s, "Difference: {} {}", self.difference, self.unit);
        let _ = writeln!(s, "Suggested steps:");
        for (i, step) in self.steps.iter().enumerate() {
            let _ = writeln!(s, "  {}. {}", i + 1, step);
        }
        s
    }
}

fn describe(stop: &StopDescriptor) -> String {
    if stop.is_terminal {
        format!("{} (terminal)", stop.stop_id)
    } else {
        stop.stop_id.clone()
    }
}
