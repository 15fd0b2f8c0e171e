use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use survey_core::sim::{ScenarioConfig, SynthParams};
use survey_core::snapshot::{QueryDefaults, DEFAULT_LAMBDA};
use survey_core::{CoordinateMode, Objective};

pub const DEFAULT_TOP_N: usize = 10;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Flags shared by every subcommand. Values from `--config` win over flags.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Stops CSV (`stop_id,lat,lon,is_terminal` or `stop_id,x_km,y_km,is_terminal`)
    #[arg(long, global = true)]
    pub stops: Option<PathBuf>,
    /// Lines CSV (`line_id,seq,stop_id`)
    #[arg(long, global = true)]
    pub lines: Option<PathBuf>,
    /// Rides as JSON Lines
    #[arg(long, global = true)]
    pub rides: Option<PathBuf>,
    /// GPS fixes CSV for link-time estimation
    #[arg(long, global = true)]
    pub gps: Option<PathBuf>,
    /// `geodesic` (lat/lon degrees) or `planar` (km)
    #[arg(long, global = true)]
    pub mode: Option<CoordinateMode>,
    /// Satisfaction threshold, in the active criterion's unit
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// distance, time, transfers, hops, or auto for each rider's preference
    #[arg(long, global = true)]
    pub criterion: Option<String>,
    /// Departures a stop needs before it is ranked
    #[arg(long, global = true)]
    pub min_sample: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reports to write
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    #[arg(long, global = true)]
    pub max_transfers: Option<u32>,
    /// Address for `serve`
    #[arg(long, global = true)]
    pub bind: Option<SocketAddr>,
    /// Directory served at `/` by `serve`
    #[arg(long, global = true)]
    pub static_dir: Option<PathBuf>,
    #[arg(skip)]
    pub sim: Option<SimSettings>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default)]
    pub city: SynthParams,
    #[serde(default)]
    pub scenarios: ScenarioConfig,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl Settings {
    pub fn with_config(mut self, path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(self);
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Settings = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        overlay!(
            self, cfg, stops, lines, rides, gps, mode, lambda, criterion, min_sample, out, seed, top_n, max_transfers, bind,
            static_dir, sim
        );
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn mode(&self) -> CoordinateMode {
        self.mode.unwrap_or(CoordinateMode::Geodesic)
    }

    pub fn lambda(&self) -> Result<f64> {
        let l = self.lambda.unwrap_or(DEFAULT_LAMBDA);
        if !(l >= 0.0) {
            bail!("lambda must be >= 0, got {l}");
        }
        Ok(l)
    }

    pub fn criterion(&self) -> Result<Option<Objective>> {
        match self.criterion.as_deref().map(str::trim) {
            None | Some("auto" | "preferred") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(anyhow::Error::msg),
        }
    }

    pub fn defaults(&self) -> Result<QueryDefaults> {
        let d = QueryDefaults::default();
        Ok(QueryDefaults {
            lambda: self.lambda()?,
            criterion: self.criterion()?,
            min_sample: self.min_sample.unwrap_or(d.min_sample),
        })
    }

    pub fn sim(&self) -> SimSettings {
        let mut s = self.sim.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            s.city.seed = seed;
            s.scenarios.seed = seed;
        }
        s
    }

    pub fn required(&self, field: Option<&PathBuf>, flag: &str) -> Result<PathBuf> {
        field.cloned().with_context(|| format!("missing --{flag}"))
    }
}
