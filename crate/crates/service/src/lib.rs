//! HTTP JSON API over datasets, hexagonal binning, blur and bin inspection.
//!
//! Routes:
//!
//! | method | path                                         |
//! |--------|----------------------------------------------|
//! | POST   | `/api/datasets` (CSV body, `?name=`)         |
//! | GET    | `/api/datasets/{id}`                         |
//! | GET    | `/api/datasets/{id}/bins`                    |
//! | GET    | `/api/datasets/{id}/blur`                    |
//! | GET    | `/api/datasets/{id}/bins/{q}/{r}/labels`     |
//! | GET    | `/api/colormaps`                             |
//! | GET    | `/healthz`                                   |

mod api;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use api::{BinJson, BinsResponse, LabelJson, LayoutJson, ParamsJson};
pub use store::{AppState, DatasetRecord, StencilCache};

pub const DEFAULT_MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Uploads larger than this are refused with 413.
    pub max_body_bytes: usize,
    /// Raw CSV uploads are kept here and reloaded at startup.
    pub data_dir: Option<PathBuf>,
    /// Allowed CORS origin; `None` allows any.
    pub allow_origin: Option<String>,
    /// Blur worker threads (0 = all cores).
    pub threads: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
            data_dir: None,
            allow_origin: None,
            threads: 0,
        }
    }
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Router {
    let origin = match &config.allow_origin {
        Some(o) => match HeaderValue::from_str(o) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => {
                log::warn!("ignoring unparseable --allow-origin {o:?}");
                AllowOrigin::any()
            }
        },
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(tower_http::cors::Any);

    Router::new()
        .route("/healthz", get(api::healthz))
        .route("/api/colormaps", get(api::colormaps))
        .route("/api/datasets", post(api::create_dataset))
        .route("/api/datasets/{id}", get(api::get_dataset))
        .route("/api/datasets/{id}/bins", get(api::bins))
        .route("/api/datasets/{id}/blur", get(api::blur))
        .route("/api/datasets/{id}/bins/{q}/{r}/labels", get(api::labels))
        .layer(DefaultBodyLimit::max(config.max_body_bytes))
        .layer(cors)
        .with_state(state)
}

/// Builds the state (reloading `data_dir` if set) and serves until the
/// process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::open(&config)?);
    let app = router(state, &config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
