//! Read-only HTTP service over an [`AnalysisSnapshot`].
//!
//! Every endpoint is served under `/api/v1`, and also under `/api` for
//! unversioned clients. Threshold parameters are read per request, so the
//! dashboard can sweep λ without re-routing.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use survey_core::quality::QualityError;
use survey_core::snapshot::{AnalysisSnapshot, SnapshotError};
use survey_core::Objective;
use tower_http::services::ServeDir;

/// Shared handle to the current snapshot. Replacing it is atomic: a request
/// sees either the old or the new snapshot, never a mix.
#[derive(Clone)]
pub struct SnapshotStore {
    current: Arc<RwLock<Arc<AnalysisSnapshot>>>,
}

impl SnapshotStore {
    pub fn new(snapshot: AnalysisSnapshot) -> Self {
        SnapshotStore {
            current: Arc::new(RwLock::new(Arc::new(snapshot))),
        }
    }

    pub fn load(&self) -> Arc<AnalysisSnapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, snapshot: AnalysisSnapshot) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(snapshot);
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<SnapshotError> for ApiError {
    fn from(e: SnapshotError) -> Self {
        let status = match &e {
            SnapshotError::Quality(QualityError::BadLambda(_)) => StatusCode::BAD_REQUEST,
            SnapshotError::MissingStage(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::NOT_FOUND,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Threshold parameters with the snapshot's defaults filled in.
struct Thresholds {
    lambda: f64,
    criterion: Option<Objective>,
    min_sample: u64,
}

fn thresholds(snap: &AnalysisSnapshot, q: &HashMap<String, String>) -> Result<Thresholds, ApiError> {
    let d = snap.meta().defaults;
    let lambda = match q.get("lambda") {
        None => d.lambda,
        Some(raw) => {
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| ApiError::bad_request(format!("lambda: `{raw}` is not a number")))?;
            if !(v >= 0.0) {
                return Err(ApiError::bad_request(format!("lambda must be >= 0, got `{raw}`")));
            }
            v
        }
    };
    let criterion = match q.get("criterion").map(|s| s.trim()) {
        None => d.criterion,
        Some("" | "auto" | "preferred") => None,
        Some(raw) => Some(raw.parse::<Objective>().map_err(ApiError::bad_request)?),
    };
    let min_sample = match q.get("min_sample") {
        None => d.min_sample,
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| ApiError::bad_request(format!("min_sample: `{raw}` is not a non-negative integer")))?,
    };
    Ok(Thresholds {
        lambda,
        criterion,
        min_sample,
    })
}

async fn meta(State(store): State<SnapshotStore>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(store.load().meta()).expect("meta serializes"))
}

async fn heat(State(store): State<SnapshotStore>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Vec<survey_core::snapshot::HeatEntry>> {
    let snap = store.load();
    let t = thresholds(&snap, &q)?;
    Ok(Json(snap.heat(t.lambda, t.criterion, t.min_sample)?))
}

async fn stop_riders(
    State(store): State<SnapshotStore>,
    Path(stop): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Vec<survey_core::snapshot::RiderSummary>> {
    let snap = store.load();
    let t = thresholds(&snap, &q)?;
    Ok(Json(snap.riders_at(&stop, t.lambda, t.criterion)?))
}

async fn compare(State(store): State<SnapshotStore>, Path(rider): Path<String>) -> ApiResult<survey_core::snapshot::Comparison> {
    Ok(Json(store.load().compare(&rider)?))
}

async fn report(
    State(store): State<SnapshotStore>,
    Path(rider): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<survey_core::quality::SurveyReport> {
    let snap = store.load();
    let t = thresholds(&snap, &q)?;
    Ok(Json(snap.report(&rider, t.lambda, t.criterion)?))
}

async fn simulate(State(store): State<SnapshotStore>) -> ApiResult<Vec<survey_core::sim::ScenarioResult>> {
    Ok(Json(store.load().scenarios()?.to_vec()))
}

fn endpoints() -> Router<SnapshotStore> {
    Router::new()
        .route("/meta", get(meta))
        .route("/stops/heat", get(heat))
        .route("/stops/{id}/riders", get(stop_riders))
        .route("/riders/{id}/compare", get(compare))
        .route("/riders/{id}/report", get(report))
        .route("/simulate", get(simulate))
}

/// The API routes, optionally serving a static directory at `/`.
pub fn router(store: SnapshotStore, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .nest("/api/v1", endpoints())
        .nest("/api", endpoints())
        .with_state(store);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until the process stops.
pub async fn serve(store: SnapshotStore, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store, static_dir)).await
}
