use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use hexblur_service::{router, AppState, BinsResponse, ServiceConfig};

fn app_with(config: ServiceConfig) -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::open(&config).unwrap());
    (router(Arc::clone(&state), &config), state)
}

fn app() -> Router {
    app_with(ServiceConfig::default()).0
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn upload(app: &Router, csv: &str) -> (StatusCode, Value) {
    let (status, body) = send(
        app,
        Request::post("/api/datasets?name=fixture")
            .header("content-type", "text/csv")
            .body(Body::from(csv.to_string()))
            .unwrap(),
    )
    .await;
    (status, serde_json::from_slice(&body).unwrap())
}

const THREE_ROWS: &str = "x,y,weight,label\n0,0,1,acid\n0,0,1,base\n1.5,-0.8660254037844386,1,acid\n";

#[tokio::test]
async fn health_and_colormaps() {
    let app = app();
    assert_eq!(get(&app, "/healthz").await.0, StatusCode::OK);
    let (status, body) = get(&app, "/api/colormaps").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, br#"["grayscale","viridis"]"#);
}

#[tokio::test]
async fn upload_three_rows() {
    let app = app();
    let (status, rec) = upload(&app, THREE_ROWS).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(rec["point_count"], 3);
    assert_eq!(rec["name"], "fixture");
    assert_eq!(rec["bounds"]["max_x"], 1.5);

    let id = rec["id"].as_str().unwrap();
    let (status, again) = get(&app, &format!("/api/datasets/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&again).unwrap()["id"], id);
}

#[tokio::test]
async fn malformed_row_reports_line() {
    let app = app();
    let (status, err) = upload(&app, "0,0\nfoo,1\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err["error"].as_str().unwrap().contains("line 2"), "{err}");
}

#[tokio::test]
async fn duplicate_uploads_get_distinct_ids() {
    let app = app();
    let (_, a) = upload(&app, THREE_ROWS).await;
    let (_, b) = upload(&app, THREE_ROWS).await;
    assert_ne!(a["id"], b["id"]);
}

#[tokio::test]
async fn oversized_upload_is_413() {
    let (app, _) = app_with(ServiceConfig {
        max_body_bytes: 16,
        ..ServiceConfig::default()
    });
    let (status, _) = send(
        &app,
        Request::post("/api/datasets")
            .body(Body::from("0,0\n".repeat(100)))
            .unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn unknown_dataset_is_404() {
    let app = app();
    assert_eq!(get(&app, "/api/datasets/nope/bins").await.0, StatusCode::NOT_FOUND);
    assert_eq!(
        get(&app, "/api/datasets/nope/blur?sigma_x=1&sigma_y=1").await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        get(&app, "/api/datasets/nope/bins/0/0/labels").await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn bins_endpoint_sorted_with_vmax() {
    let app = app();
    let (_, rec) = upload(&app, THREE_ROWS).await;
    let id = rec["id"].as_str().unwrap();
    let (status, body) = get(&app, &format!("/api/datasets/{id}/bins?size_x=1&size_y=1")).await;
    assert_eq!(status, StatusCode::OK);
    let resp: BinsResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(resp.bins.len(), 2);
    assert_eq!((resp.bins[0].q, resp.bins[0].r), (0, 0));
    assert_eq!((resp.bins[1].q, resp.bins[1].r), (1, 0));
    assert_eq!(resp.v_max, 2.0);
    assert!(resp.params.is_none());
}

#[tokio::test]
async fn blur_single_point_matches_stencil() {
    let app = app();
    let (_, rec) = upload(&app, "0,0\n").await;
    let id = rec["id"].as_str().unwrap();
    let uri = format!(
        "/api/datasets/{id}/blur?size_x=1&size_y=1&sigma_x=2&sigma_y=1&epsilon=0.001&mode=center_relative"
    );
    let (status, body) = get(&app, &uri).await;
    assert_eq!(status, StatusCode::OK);
    let resp: BinsResponse = serde_json::from_slice(&body).unwrap();
    let value = |q: i64, r: i64| resp.bins.iter().find(|b| b.q == q && b.r == r).unwrap().value;
    assert_eq!(value(0, 0), 1.0);
    assert_eq!(resp.v_max, 1.0);
    for (q, r) in [(1, -1), (1, 0), (-1, 0), (-1, 1)] {
        assert!((value(q, r) - 0.519).abs() < 5e-4);
    }
    assert_eq!(resp.params.unwrap().mode, "center_relative");

    let (_, again) = get(&app, &uri).await;
    assert_eq!(body, again);
}

#[tokio::test]
async fn invalid_params_are_422_with_field() {
    let app = app();
    let (_, rec) = upload(&app, THREE_ROWS).await;
    let id = rec["id"].as_str().unwrap();
    for (query, field) in [
        ("sigma_x=0&sigma_y=1", "sigma_x"),
        ("sigma_x=1&sigma_y=-2", "sigma_y"),
        ("sigma_x=abc&sigma_y=1", "sigma_x"),
        ("sigma_y=1", "sigma_x"),
        ("sigma_x=1&sigma_y=1&epsilon=2", "epsilon"),
        ("sigma_x=1&sigma_y=1&mode=radial", "mode"),
        ("sigma_x=1&sigma_y=1&size_x=0&size_y=1", "size_x"),
        ("sigma_x=1&sigma_y=1&size_x=1", "size_y"),
    ] {
        let (status, body) = get(&app, &format!("/api/datasets/{id}/blur?{query}")).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{query}");
        let err: Value = serde_json::from_slice(&body).unwrap();
        assert_eq!(err["field"], field, "{query}");
    }
}

#[tokio::test]
async fn labels_endpoint() {
    let app = app();
    let csv = "0,0,3,a\n0,0,1,b\n0,0,2,c\n9,9,1,z\n";
    let (_, rec) = upload(&app, csv).await;
    let id = rec["id"].as_str().unwrap();
    let (status, body) =
        get(&app, &format!("/api/datasets/{id}/bins/0/0/labels?k=2&size_x=1&size_y=1")).await;
    assert_eq!(status, StatusCode::OK);
    let labels: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(labels, serde_json::json!([{"label":"a","weight":3.0},{"label":"c","weight":2.0}]));
    let (_, body) =
        get(&app, &format!("/api/datasets/{id}/bins/40/40/labels?size_x=1&size_y=1")).await;
    assert_eq!(body, b"[]");
}

#[tokio::test]
async fn stencils_are_cached() {
    let (app, state) = app_with(ServiceConfig::default());
    let (_, rec) = upload(&app, THREE_ROWS).await;
    let id = rec["id"].as_str().unwrap();
    for _ in 0..3 {
        get(&app, &format!("/api/datasets/{id}/blur?sigma_x=1&sigma_y=2")).await;
    }
    assert_eq!(state.stencils.len(), 1);
    get(&app, &format!("/api/datasets/{id}/blur?sigma_x=1&sigma_y=2&mode=center_relative")).await;
    assert_eq!(state.stencils.len(), 2);
}

#[tokio::test]
async fn datasets_reload_from_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        data_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let (app, _) = app_with(config.clone());
    let (_, rec) = upload(&app, THREE_ROWS).await;
    let id = rec["id"].as_str().unwrap().to_string();

    let (app, state) = app_with(config);
    assert_eq!(state.len(), 1);
    let (status, body) = get(&app, &format!("/api/datasets/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let rec: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(rec["name"], "fixture");
    assert_eq!(rec["point_count"], 3);
}

#[tokio::test]
async fn cors_header_present() {
    let (app, _) = app_with(ServiceConfig {
        allow_origin: Some("http://localhost:5173".into()),
        ..ServiceConfig::default()
    });
    let resp = app
        .oneshot(
            Request::get("/healthz")
                .header("origin", "http://localhost:5173")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(
        resp.headers()["access-control-allow-origin"],
        "http://localhost:5173"
    );
}
