use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::pipeline::RideAnalysis;
use crate::quality::{rank_stops, verdict_for_gap, SatisfactionRecord, StopStats, Verdict, DEFAULT_MIN_SAMPLE};
use crate::route::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Targeted,
    Random,
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionMethod::Targeted => "targeted",
            SelectionMethod::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub probability: f64,
    /// Standard error of the mean over trials; zero for targeted selection.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    /// Stops actually selected, after clamping.
    pub stop_count: usize,
    pub requested_stop_count: usize,
    pub method: SelectionMethod,
    pub curve: Vec<CurvePoint>,
    /// Random samples per point; 1 for targeted selection.
    pub trials: usize,
    pub seed: u64,
}

impl ScenarioResult {
    pub fn is_clamped(&self) -> bool {
        self.stop_count < self.requested_stop_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub stop_counts: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Criterion the verdicts are taken on; `None` uses each rider's
    /// inferred preference.
    pub criterion: Option<Objective>,
    pub min_sample: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            stop_counts: vec![10, 50, 100],
            lambdas: (0..8).map(f64::from).collect(),
            trials: 1000,
            seed: 42,
            criterion: Some(Objective::Distance),
            min_sample: DEFAULT_MIN_SAMPLE,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_owned()));
        if self.stop_counts.is_empty() || self.stop_counts.contains(&0) {
            return bad("stop counts must be positive");
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l >= 0.0)) {
            return bad("lambdas must be non-negative");
        }
        if self.lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("lambdas must be strictly increasing");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        Ok(())
    }
}

/// Pooled share of unsatisfied departures over the selected stops.
pub fn evaluate_selection(records: &[SatisfactionRecord], selected: &BTreeSet<String>) -> f64 {
    let (mut qr, mut total) = (0u64, 0u64);
    for r in records.iter().filter(|r| selected.contains(&r.origin)) {
        total += 1;
        if r.verdict == Verdict::Unsatisfactory {
            qr += 1;
        }
    }
    pooled(qr, total)
}

fn pooled(qr: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        qr as f64 / total as f64
    }
}

fn pooled_over(qr: &[u64], total: &[u64], picks: impl Iterator<Item = usize>) -> f64 {
    let (mut r, mut t) = (0, 0);
    for i in picks {
        r += qr[i];
        t += total[i];
    }
    pooled(r, t)
}

/// Compares stops ranked by unsatisfied probability against uniformly
/// sampled stops, for every stop count and threshold.
///
/// Random selections draw from stops with at least one evaluable departure.
/// Each trial has its own random stream, so results do not depend on
/// scheduling. Trial `t` draws the same stops at every threshold, which
/// keeps the random curve from rising with λ through sampling noise alone.
pub fn run_scenarios(analyses: &[RideAnalysis], config: &ScenarioConfig) -> Result<Vec<ScenarioResult>, SimError> {
    config.validate()?;
    let mut origin_index: BTreeMap<&str, usize> = BTreeMap::new();
    let gaps: Vec<(&str, f64)> = analyses
        .iter()
        .filter_map(|a| a.criterion_gap(config.criterion).map(|(_, g)| (a.origin.as_str(), g)))
        .collect();
    for (o, _) in &gaps {
        origin_index.entry(o).or_insert(0);
    }
    for (i, v) in origin_index.values_mut().enumerate() {
        *v = i;
    }
    let ids: Vec<&str> = origin_index.keys().copied().collect();
    let n = ids.len();
    let mut total = vec![0u64; n];
    for (o, _) in &gaps {
        total[origin_index[o]] += 1;
    }

    let nl = config.lambdas.len();
    // qr per lambda, per stop
    let unsatisfied: Vec<Vec<u64>> = config
        .lambdas
        .iter()
        .map(|&lambda| {
            let mut qr = vec![0u64; n];
            for (o, g) in &gaps {
                if verdict_for_gap(*g, lambda) == Verdict::Unsatisfactory {
                    qr[origin_index[o]] += 1;
                }
            }
            qr
        })
        .collect();

    let mut out = Vec::with_capacity(2 * config.stop_counts.len());
    for (ki, &requested) in config.stop_counts.iter().enumerate() {
        let mut targeted = Vec::with_capacity(nl);
        let mut chosen = requested;
        for (li, &lambda) in config.lambdas.iter().enumerate() {
            let qr = &unsatisfied[li];
            let stats: Vec<StopStats> = (0..n).map(|i| StopStats::from_counts(ids[i], qr[i], total[i] - qr[i])).collect();
            let ranked = rank_stops(&stats, config.min_sample);
            let k = requested.min(ranked.len());
            chosen = chosen.min(k);
            let picks = ranked[..k].iter().map(|s| origin_index[s.stop_id.as_str()]);
            targeted.push(CurvePoint {
                lambda,
                probability: pooled_over(qr, &total, picks),
                std_error: 0.0,
            });
        }
        out.push(ScenarioResult {
            stop_count: chosen,
            requested_stop_count: requested,
            method: SelectionMethod::Targeted,
            curve: targeted,
            trials: 1,
            seed: config.seed,
        });

        let k = requested.min(n);
        let random = config
            .lambdas
            .iter()
            .enumerate()
            .map(|(li, &lambda)| {
                let qr = &unsatisfied[li];
                let samples: Vec<f64> = (0..config.trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                        rng.set_stream((ki * config.trials + t) as u64);
                        pooled_over(qr, &total, index::sample(&mut rng, n, k).into_iter())
                    })
                    .collect();
                let (mean, se) = mean_and_se(&samples);
                CurvePoint {
                    lambda,
                    probability: mean,
                    std_error: se,
                }
            })
            .collect();
        out.push(ScenarioResult {
            stop_count: k,
            requested_stop_count: requested,
            method: SelectionMethod::Random,
            curve: random,
            trials: config.trials,
            seed: config.seed,
        });
    }
    Ok(out)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row per curve point: `stop_count,method,lambda,probability,trials`.
pub fn scenario_csv(results: &[ScenarioResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stop_count", "method", "lambda", "probability", "trials"])
        .expect("write to memory");
    for r in results {
        for p in &r.curve {
            w.write_record([
                r.stop_count.to_string(),
                r.method.to_string(),
                p.lambda.to_string(),
                p.probability.to_string(),
                r.trials.to_string(),
            ])
            .expect("write to memory");
        }
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(origin: &str, verdict: Verdict) -> SatisfactionRecord {
        SatisfactionRecord {
            rider_id: String::new(),
            origin: origin.into(),
            criterion: Objective::Distance,
            valc_real: 0.0,
            valc_opt: 0.0,
            lambda: 0.0,
            verdict,
        }
    }

    fn split(stop: &str, bad: usize, good: usize) -> Vec<SatisfactionRecord> {
        let mut v = vec![rec(stop, Verdict::Unsatisfactory); bad];
        v.extend(vec![rec(stop, Verdict::Satisfactory); good]);
        v
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn selection_examples() {
        let mut recs = split("a", 3, 1);
        assert_eq!(evaluate_selection(&recs, &set(&["a"])), 0.75);
        recs.extend(split("b", 0, 4));
        assert_eq!(evaluate_selection(&recs, &set(&["a", "b"])), 0.375);
        assert_eq!(evaluate_selection(&recs, &set(&["c"])), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let c = ScenarioConfig {
            lambdas: vec![1.0, 1.0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ScenarioConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
    }
}
