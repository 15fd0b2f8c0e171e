use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use survey_api::{router, SnapshotStore};
use survey_core::fixtures::t1_snapshot;
use survey_core::snapshot::{HeatEntry, QueryDefaults};
use survey_core::Objective;
use tower::ServiceExt;

fn store() -> SnapshotStore {
    SnapshotStore::new(t1_snapshot(QueryDefaults {
        lambda: 2.0,
        criterion: Some(Objective::Distance),
        min_sample: 1,
    }))
}

async fn get(store: &SnapshotStore, uri: &str) -> (StatusCode, Value) {
    let resp = router(store.clone(), None)
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn heat_matches_snapshot_ranking() {
    let s = store();
    let (status, body) = get(&s, "/api/v1/stops/heat?lambda=2.0&criterion=distance&min_sample=1").await;
    assert_eq!(status, StatusCode::OK);
    let got: Vec<HeatEntry> = serde_json::from_value(body).unwrap();
    assert_eq!(got, s.load().heat(2.0, Some(Objective::Distance), 1).unwrap());
    assert_eq!(got[0].stop_id, "A");
    assert_eq!((got[0].qr, got[0].qb, got[0].p), (2, 2, 0.5));
}

#[tokio::test]
async fn unversioned_alias_and_defaults() {
    let s = store();
    let (_, a) = get(&s, "/api/stops/heat").await;
    let (_, b) = get(&s, "/api/v1/stops/heat?lambda=2&criterion=distance&min_sample=1").await;
    assert_eq!(a, b);
    assert_eq!(a[0]["Qr"], 2);
}

#[tokio::test]
async fn lambda_sweep_changes_counts() {
    let s = store();
    let (_, high) = get(&s, "/api/v1/stops/heat?lambda=2.5").await;
    assert!(high.as_array().unwrap().iter().all(|e| e["Qr"] == 0));
    let (_, inf) = get(&s, "/api/v1/stops/heat?lambda=inf").await;
    assert!(inf.as_array().unwrap().iter().all(|e| e["Qr"] == 0));
    let (_, zero) = get(&s, "/api/v1/stops/heat?lambda=0").await;
    assert_eq!(zero[0]["Qr"], 2);
}

#[tokio::test]
async fn malformed_parameters_are_400() {
    let s = store();
    for uri in [
        "/api/v1/stops/heat?lambda=abc",
        "/api/v1/stops/heat?lambda=-1",
        "/api/v1/stops/heat?lambda=NaN",
        "/api/v1/stops/heat?criterion=comfort",
        "/api/v1/stops/heat?min_sample=-3",
    ] {
        let (status, body) = get(&s, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].is_string());
    }
}

#[tokio::test]
async fn unknown_resources_are_404() {
    let s = store();
    for uri in [
        "/api/v1/riders/nobody/compare",
        "/api/v1/riders/nobody/report",
        "/api/v1/stops/ZZ/riders",
        "/api/v1/simulate",
        // satisfied rider: no report
        "/api/v1/riders/r2/report?lambda=2.0",
    ] {
        let (status, _) = get(&s, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn report_and_compare() {
    let s = store();
    let (status, rep) = get(&s, "/api/v1/riders/r1/report?lambda=2.0").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rep["difference"], 2.0);
    assert_eq!(rep, serde_json::to_value(s.load().report("r1", 2.0, Some(Objective::Distance)).unwrap()).unwrap());

    let (_, cmp) = get(&s, "/api/v1/riders/r1/compare").await;
    assert_eq!(cmp["optimal"].as_object().unwrap().len(), 4);
    let verts = cmp["real"]["vertices"].as_array().unwrap();
    assert_eq!(verts.len(), 4);
    assert_eq!(verts[0][0], cmp["real"]["normalized"][0]);
}

#[tokio::test]
async fn riders_sorted_by_gap() {
    let s = store();
    let (_, riders) = get(&s, "/api/v1/stops/A/riders?lambda=2.0").await;
    let gaps: Vec<f64> = riders.as_array().unwrap().iter().map(|r| r["gap"].as_f64().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[0] >= w[1]));
}

#[tokio::test]
async fn meta_and_atomic_swap() {
    let s = store();
    let (_, meta) = get(&s, "/api/v1/meta").await;
    assert_eq!(meta["ride_count"], 6);
    assert_eq!(meta["defaults"]["min_sample"], 1);
    s.replace(t1_snapshot(QueryDefaults::default()));
    let (_, meta) = get(&s, "/api/v1/meta").await;
    assert_eq!(meta["defaults"]["min_sample"], 5);
}

#[tokio::test]
async fn identical_requests_identical_bodies() {
    let s = store();
    let mut bodies = Vec::new();
    for _ in 0..4 {
        bodies.push(get(&s, "/api/v1/riders/r5/compare").await.1);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}
