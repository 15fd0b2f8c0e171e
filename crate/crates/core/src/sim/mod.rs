//! Synthetic cities and the targeted-versus-random survey site comparison.

mod city;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use city::{generate_network, generate_synthetic_city, PlantedRide, SyntheticCity};
pub use scenario::{
    evaluate_selection, run_scenarios, scenario_csv, CurvePoint, ScenarioConfig, ScenarioResult, SelectionMethod,
};

use crate::network::NetworkError;
use crate::route::Objective;
use crate::routing::RoutingError;

/// Whole-city regenerations attempted before giving up.
pub const MAX_CITY_ATTEMPTS: usize = 8;
/// Destinations tried per rider before the city counts as infeasible.
pub const MAX_DESTINATION_TRIES: usize = 400;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no feasible rider population after {0} attempts")]
    Infeasible(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

/// Fractions of riders planted per criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMix {
    pub distance: f64,
    pub time: f64,
    pub transfers: f64,
    pub hops: f64,
}

impl PreferenceMix {
    pub fn only(objective: Objective) -> Self {
        let mut f = [0.0; 4];
        f[objective.axis()] = 1.0;
        PreferenceMix::from_axes(f)
    }

    pub fn uniform() -> Self {
        PreferenceMix::from_axes([0.25; 4])
    }

    fn from_axes(f: [f64; 4]) -> Self {
        PreferenceMix {
            distance: f[0],
            time: f[1],
            transfers: f[2],
            hops: f[3],
        }
    }

    pub fn as_axes(&self) -> [f64; 4] {
        [self.distance, self.time, self.transfers, self.hops]
    }

    /// Exact per-objective counts for `n` riders (largest remainder).
    pub fn counts(&self, n: usize) -> [usize; 4] {
        let f = self.as_axes();
        let mut counts = f.map(|x| (x * n as f64).floor() as usize);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let ra = f[a] * n as f64 - counts[a] as f64;
            let rb = f[b] * n as f64 - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut left = n - counts.iter().sum::<usize>().min(n);
        for i in order {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub spacing_km: f64,
    /// Random offset of each stop, as a fraction of the spacing.
    pub jitter: f64,
    /// Largest grid step between consecutive stops of a line; steps above
    /// one give express links.
    pub max_step: usize,
    pub line_count: usize,
    /// Inclusive range of stops per line.
    pub line_length: [usize; 2],
    /// Per-line cruising speed range, km/h.
    pub speed_kmh: [f64; 2],
    pub transfer_wait_s: f64,
    pub riders: usize,
    pub preference_mix: PreferenceMix,
    pub suboptimal_fraction: f64,
    /// Inclusive range of the planted gap, in the rider's criterion units.
    pub detour_range: [f64; 2],
    /// Stops where suboptimal riders concentrate. Zero spreads them evenly.
    pub hotspots: usize,
    /// Share of suboptimal riders departing from a hotspot.
    pub hotspot_share: f64,
    pub max_transfers: u32,
    /// Only keep OD pairs where the planted criterion's optimum differs in
    /// metrics from the other three optima.
    pub distinct_optima: bool,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            grid_cols: 20,
            grid_rows: 10,
            spacing_km: 1.0,
            jitter: 0.25,
            max_step: 1,
            line_count: 30,
            line_length: [8, 20],
            speed_kmh: [15.0, 35.0],
            transfer_wait_s: 300.0,
            riders: 10_000,
            preference_mix: PreferenceMix::only(Objective::Distance),
            suboptimal_fraction: 0.2,
            detour_range: [1.0, 6.0],
            hotspots: 10,
            hotspot_share: 0.8,
            max_transfers: 3,
            distinct_optima: false,
            seed: 42,
        }
    }
}

impl SynthParams {
    pub fn stop_count(&self) -> usize {
        self.grid_cols * self.grid_rows
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_owned()));
        if self.grid_cols == 0 || self.grid_rows == 0 || self.stop_count() < 2 {
            return bad("grid needs at least two stops");
        }
        if !(self.spacing_km > 0.0 && self.spacing_km.is_finite()) {
            return bad("spacing must be positive");
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad("jitter must be in [0, 0.5)");
        }
        if self.max_step == 0 {
            return bad("max_step must be positive");
        }
        if self.line_count == 0 || self.riders == 0 {
            return bad("line and rider counts must be positive");
        }
        let [lo, hi] = self.line_length;
        if lo < 2 || lo > hi || hi > self.stop_count() {
            return bad("line length range must satisfy 2 <= min <= max <= stops");
        }
        let [s0, s1] = self.speed_kmh;
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return bad("speed range must be positive and ordered");
        }
        if !(self.transfer_wait_s >= 0.0 && self.transfer_wait_s.is_finite()) {
            return bad("transfer wait must be non-negative");
        }
        let mix = self.preference_mix.as_axes();
        if mix.iter().any(|f| !(0.0..=1.0).contains(f)) || (mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("preference mix must be fractions summing to 1");
        }
        for (name, f) in [("suboptimal_fraction", self.suboptimal_fraction), ("hotspot_share", self.hotspot_share)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(SimError::InvalidParams(format!("{name} must be in [0, 1]")));
            }
        }
        let [d0, d1] = self.detour_range;
        if !(d0 >= 0.0 && d0 <= d1 && d1.is_finite()) {
            return bad("detour range must be non-negative and ordered");
        }
        if self.hotspots > self.stop_count() {
            return bad("more hotspots than stops");
        }
        Ok(())
    }

    /// The number of riders forced off their optimum.
    pub fn suboptimal_count(&self) -> usize {
        (self.suboptimal_fraction * self.riders as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_counts_are_exact() {
        assert_eq!(PreferenceMix::uniform().counts(4000), [1000; 4]);
        assert_eq!(PreferenceMix::uniform().counts(6), [2, 2, 1, 1]);
        let m = PreferenceMix::from_axes([0.5, 0.3, 0.2, 0.0]);
        assert_eq!(m.counts(10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn validation() {
        assert!(SynthParams::default().validate().is_ok());
        let mut p = SynthParams::default();
        p.preference_mix.time = 0.5;
        assert!(p.validate().is_err());
        let p = SynthParams {
            suboptimal_fraction: 1.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SynthParams {
            riders: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
