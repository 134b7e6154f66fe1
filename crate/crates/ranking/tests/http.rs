use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use pitchleague::learner::{Policy, ScriptedKind};
use pitchleague_ranking::http::router;
use pitchleague_ranking::{RankingService, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let service = Arc::new(RankingService::open(ServiceConfig { placement_episodes: 2, ..ServiceConfig::new(dir.path()) }).unwrap());
    let (tx, mut rx) = tokio::sync::mpsc::unbounded_channel();
    let app = router(service.clone(), tx);

    let (code, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(json_of(&body)["version"], env!("CARGO_PKG_VERSION"));

    let (code, body) = call(&app, "GET", "/ranking?scenario=1v1", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(json_of(&body), json!([]));

    for kind in [ScriptedKind::Shooter, ScriptedKind::Idle] {
        let artifact = Policy::scripted("p", kind).to_artifact();
        let (code, body) = call(&app, "POST", "/submissions", Some(json!({"user": "u", "scenario": "1v1", "artifact": artifact}))).await;
        assert_eq!(code, StatusCode::CREATED);
        assert_eq!(json_of(&body)["status"], "pending");
        assert!(rx.recv().await.is_some());
    }
    let (code, _) = call(&app, "POST", "/submissions", Some(json!({"scenario": "1v1", "artifact": "junk"}))).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);

    let (code, body) = call(&app, "POST", "/rounds", Some(json!({"scenario": "1v1", "episodes": 2}))).await;
    assert_eq!(code, StatusCode::OK);
    let round = json_of(&body);
    let match_id = round["pairings"][0]["match_id"].as_str().unwrap().to_string();

    let (code, body) = call(&app, "GET", "/ranking?scenario=1v1", None).await;
    assert_eq!(code, StatusCode::OK);
    let rows = json_of(&body);
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["score"], 1.0);

    let (code, body) = call(&app, "GET", &format!("/matches/{match_id}/replay"), None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(body, service.replay(&match_id).unwrap());
    let (code, body) = call(&app, "GET", &format!("/matches/{match_id}/stats"), None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(json_of(&body)["record"]["id"], match_id.as_str());
    let (code, body) = call(&app, "GET", "/matches/nope/replay", None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    assert!(json_of(&body)["error"].is_string());
}
