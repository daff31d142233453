use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use abaclab::datasets::bundled_source;
use abaclab::exchange::import_canonical;
use abaclab::{all_permissions, evaluate, parse_policy};
use abaclab_service::{router, PolicyStore, ServiceConfig};

fn app() -> Router {
    router(Arc::new(PolicyStore::with_bundled()), ServiceConfig::default())
}

async fn send(app: &Router, method: Method, uri: &str, content_type: Option<&str>, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header(header::CONTENT_TYPE, ct);
    }
    let resp = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, Method::GET, uri, None, Body::empty()).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Vec<u8>) {
    send(app, Method::POST, uri, Some("application/json"), body.to_string()).await
}

const SMALL: &str = "userAttrib(a, g=x)\nuserAttrib(b, g=y)\nresourceAttrib(r1, g=x)\nrule(; ; {read}; g = g)\n";

#[tokio::test]
async fn bundled_stats() {
    let app = app();
    let (s, v) = get_json(&app, "/api/policies/university/stats").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"sub":22,"res":34,"uAttr":6,"rAttr":5,"rule":10,"perm":168}));
    let (_, list) = get_json(&app, "/api/policies").await;
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    for id in ["healthcare", "project-mgmt", "university", "workforce", "e-document"] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[tokio::test]
async fn eval_matches_engine() {
    let app = app();
    let p = parse_policy(bundled_source("university").unwrap(), "university").unwrap();
    let perm = all_permissions(&p).into_iter().next().unwrap();
    let (s, b) = post_json(
        &app,
        "/api/policies/university/eval",
        json!({"user": perm.user, "resource": perm.resource, "action": perm.action}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&b).unwrap();
    let d = evaluate(&p, &perm.user, &perm.resource, &perm.action).unwrap();
    assert_eq!(v, json!({"permitted": true, "matchingRules": d.matching_rules}));

    let (_, b) = post_json(&app, "/api/policies/university/eval", json!({})).await;
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["total"], 168);
    assert_eq!(v["permissions"].as_array().unwrap().len(), 168);
    assert_eq!(v["truncated"], false);

    let (_, b) = post_json(&app, "/api/policies/university/eval", json!({"limit": 5, "user": ""})).await;
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!((v["total"].as_u64(), v["permissions"].as_array().unwrap().len()), (Some(168), 5));

    let (s, _) = post_json(&app, "/api/policies/university/eval", json!({"user": "nobody"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post_json(&app, "/api/policies/university/eval", json!({"usr": "x"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn enumeration_is_capped_by_default() {
    let app = app();
    let (_, b) = post_json(&app, "/api/policies/e-document/eval", json!({})).await;
    let v: Value = serde_json::from_slice(&b).unwrap();
    let p = parse_policy(bundled_source("e-document").unwrap(), "e").unwrap();
    assert_eq!(v["total"].as_u64().unwrap() as usize, all_permissions(&p).len());
    assert_eq!(v["permissions"].as_array().unwrap().len(), 1000);
    assert_eq!(v["truncated"], true);
}

#[tokio::test]
async fn upload_raw_and_delete() {
    let app = app();
    let (s, b) = send(&app, Method::POST, "/api/policies?name=tiny", Some("text/plain"), SMALL).await;
    assert_eq!(s, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["id"], "tiny");
    assert_eq!(v["stats"]["perm"], 1);

    let (s, b) = send(&app, Method::POST, "/api/policies?name=tiny", None, SMALL).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap()["id"], "tiny-2");

    let (s, _) = send(&app, Method::DELETE, "/api/policies/tiny", None, Body::empty()).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = get_json(&app, "/api/policies/tiny/stats").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = send(&app, Method::DELETE, "/api/policies/tiny", None, Body::empty()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn upload_multipart() {
    let app = app();
    let boundary = "XyZ";
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"clinic.abac\"\r\n\
         Content-Type: application/octet-stream\r\n\r\n{SMALL}\r\n--{boundary}--\r\n"
    );
    let (s, b) = send(
        &app,
        Method::POST,
        "/api/policies",
        Some(&format!("multipart/form-data; boundary={boundary}")),
        body,
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap()["id"], "clinic");
}

#[tokio::test]
async fn upload_errors() {
    let app = app();
    let (s, b) = send(&app, Method::POST, "/api/policies", None, "userAttrib(a, g=x)\nrule(g in {x}; ; {}; )").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["line"], 2);
    assert!(v["error"].as_str().unwrap().starts_with("line 2"));

    let small = router(
        Arc::new(PolicyStore::new()),
        ServiceConfig {
            max_upload_bytes: 64,
            ..ServiceConfig::default()
        },
    );
    let (s, _) = send(&small, Method::POST, "/api/policies", None, "#".repeat(1000)).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);

    let (s, _) = get_json(&app, "/api/policies/nope/heatmap").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn check_endpoint() {
    let app = app();
    let (s, b) = send(&app, Method::POST, "/api/policies?name=t", None, SMALL).await;
    assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
    let (s, b) = send(
        &app,
        Method::POST,
        "/api/policies/t/check",
        Some("text/csv"),
        "user,resource,action\na,r1,read\nb,r1,read\n",
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        String::from_utf8(b).unwrap(),
        "user,resource,action,decision,matching_rules\r\na,r1,read,permit,1\r\nb,r1,read,deny,\r\n"
    );
    let (s, _) = send(&app, Method::POST, "/api/policies/t/check", None, "bad").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn coverage_heatmap_resource_access() {
    let app = app();
    let (_, v) = get_json(&app, "/api/policies/university/coverage").await;
    let counts: Vec<u64> = v.as_array().unwrap().iter().map(|c| c["grantedCount"].as_u64().unwrap()).collect();
    assert_eq!(counts, [11, 20, 16, 32, 8, 9, 9, 18, 9, 36]);

    let (s, b) = send(&app, Method::POST, "/api/policies/university/coverage", None, "rule(; ; {readScore}; )").await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v[0]["grantedCount"], 22 * 34);
    let (s, _) = send(&app, Method::POST, "/api/policies/university/coverage", None, "rule(").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (_, v) = get_json(&app, "/api/policies/university/heatmap").await;
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
    assert_eq!(v["cells"].as_array().unwrap().len(), 10);

    let (_, v) = get_json(&app, "/api/policies/university/resource-access").await;
    assert_eq!(v["top"].as_array().unwrap().len(), 10);
    assert_eq!(v["bottom"].as_array().unwrap().len(), 10);
}

#[tokio::test]
async fn log_endpoint() {
    let app = app();
    let cfg = json!({"n": 100, "permitRatio": 0.6, "seed": 3});
    let (s, a) = post_json(&app, "/api/policies/healthcare/logs", cfg.clone()).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = post_json(&app, "/api/policies/healthcare/logs", cfg).await;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().filter(|l| l.ends_with(",permit")).count(), 60);

    let (s, _) = post_json(&app, "/api/policies/healthcare/logs", json!({"n": 0, "permitRatio": 0.5})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = post_json(
        &app,
        "/api/policies/healthcare/logs",
        json!({"n": 100000, "permitRatio": 1.0, "unique": true}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn export_round_trip() {
    let app = app();
    let (s, b) = send(&app, Method::GET, "/api/policies/healthcare/export?format=canonical", None, Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    let p = import_canonical(&b).unwrap();
    let orig = parse_policy(bundled_source("healthcare").unwrap(), "healthcare").unwrap();
    assert_eq!(p, orig);

    let (s, up) = send(&app, Method::POST, "/api/policies", Some("application/json"), b).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(serde_json::from_slice::<Value>(&up).unwrap()["id"], "healthcare-2");

    let (_, v) = get_json(&app, "/api/policies/university/export?format=csv").await;
    assert_eq!(v["users"].as_str().unwrap().lines().count(), 23);
    let (s, _) = get_json(&app, "/api/policies/university/export?format=xml").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn persistence_directory() {
    let dir = tempfile::tempdir().unwrap();
    let store = PolicyStore::new().persist_to(dir.path()).unwrap();
    let app = router(Arc::new(store), ServiceConfig::default());
    let (s, _) = send(&app, Method::POST, "/api/policies?name=saved", None, SMALL).await;
    assert_eq!(s, StatusCode::CREATED);
    assert!(dir.path().join("saved.abac").exists());

    let reloaded = PolicyStore::new().persist_to(dir.path()).unwrap();
    assert_eq!(reloaded.get("saved").unwrap().stats.n_perm, 1);

    let (s, _) = send(&app, Method::DELETE, "/api/policies/saved", None, Body::empty()).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    assert!(!dir.path().join("saved.abac").exists());
}

#[tokio::test]
async fn concurrent_reads_agree() {
    let app = app();
    let mut handles = Vec::new();
    for _ in 0..8 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            get_json(&app, "/api/policies/project-mgmt/stats").await.1
        }));
    }
    for h in handles {
        assert_eq!(h.await.unwrap()["perm"], 101);
    }
}
