//! Coordinates and link-length functions.

use serde::{Deserialize, Serialize};

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// How stop coordinates are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateMode {
    /// Latitude/longitude in degrees; distances by haversine.
    Geodesic,
    /// Planar x/y in kilometres; distances are Euclidean.
    Planar,
}

impl CoordinateMode {
    pub fn distance_km(self, a: Position, b: Position) -> f64 {
        match self {
            CoordinateMode::Geodesic => haversine_km(a, b),
            CoordinateMode::Planar => (a.x - b.x).hypot(a.y - b.y),
        }
    }

    /// Column names used for the two coordinate fields in CSV files.
    pub fn coordinate_headers(self) -> [&'static str; 2] {
        match self {
            CoordinateMode::Geodesic => ["lat", "lon"],
            CoordinateMode::Planar => ["x_km", "y_km"],
        }
    }
}

impl std::str::FromStr for CoordinateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "geodesic" | "geo" => Ok(CoordinateMode::Geodesic),
            "planar" => Ok(CoordinateMode::Planar),
            other => Err(format!("unknown coordinate mode `{other}`")),
        }
    }
}

/// A point. In geodesic mode `x` is longitude and `y` latitude (degrees);
/// in planar mode both are kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn planar(x_km: f64, y_km: f64) -> Self {
        Position { x: x_km, y: y_km }
    }

    pub fn geodesic(lat: f64, lon: f64) -> Self {
        Position { x: lon, y: lat }
    }

    /// The two values in the order they appear in CSV files
    /// (`lat,lon` or `x_km,y_km`).
    pub fn csv_pair(self, mode: CoordinateMode) -> [f64; 2] {
        match mode {
            CoordinateMode::Geodesic => [self.y, self.x],
            CoordinateMode::Planar => [self.x, self.y],
        }
    }

    pub fn from_csv_pair(mode: CoordinateMode, first: f64, second: f64) -> Self {
        match mode {
            CoordinateMode::Geodesic => Position::geodesic(first, second),
            CoordinateMode::Planar => Position::planar(first, second),
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

fn haversine_km(a: Position, b: Position) -> f64 {
    let (lat1, lat2) = (a.y.to_radians(), b.y.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.x - a.x).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}
