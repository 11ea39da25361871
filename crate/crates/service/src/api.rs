use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hexblur::{
    apply_blur_with_threads, bin_points, top_labels, AxialCoord, BinGrid, BlurParams, Bounds,
    Colormap, Error, HexLayout, LayoutRequest, NormalizationMode,
};

use crate::store::{AppState, DatasetRecord};

#[derive(Debug)]
pub(crate) struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<&'static str>,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: format!("unknown dataset {id:?}"),
            field: None,
        }
    }

    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: message.into(),
            field: Some(field),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter { .. } | Error::EmptyDataset | Error::NonFinite(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::Parse { .. } => StatusCode::BAD_REQUEST,
            Error::LayoutMismatch | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            field: e.field(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.field {
            Some(f) => json!({ "error": self.message, "field": f }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutJson {
    pub origin_x: f64,
    pub origin_y: f64,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl From<&HexLayout> for LayoutJson {
    fn from(l: &HexLayout) -> Self {
        LayoutJson {
            origin_x: l.origin_x,
            origin_y: l.origin_y,
            scale_x: l.scale_x,
            scale_y: l.scale_y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinJson {
    pub q: i64,
    pub r: i64,
    /// Center in data units.
    pub cx: f64,
    pub cy: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub epsilon: f64,
    pub mode: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinsResponse {
    pub layout: LayoutJson,
    /// Sorted by `(q, r)`.
    pub bins: Vec<BinJson>,
    pub v_max: f64,
    pub params: Option<ParamsJson>,
}

impl BinsResponse {
    pub fn new(grid: &BinGrid, params: Option<&BlurParams>) -> Self {
        let layout = grid.layout();
        let bins = grid
            .iter()
            .map(|(a, agg)| {
                let (cx, cy) = layout.center(*a);
                BinJson {
                    q: a.q,
                    r: a.r,
                    cx,
                    cy,
                    value: agg.total_weight,
                }
            })
            .collect();
        BinsResponse {
            layout: layout.into(),
            bins,
            v_max: grid.max_value(),
            params: params.map(|p| ParamsJson {
                sigma_x: p.sigma_x,
                sigma_y: p.sigma_y,
                epsilon: p.epsilon,
                mode: p.mode.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelJson {
    pub label: String,
    pub weight: f64,
}

#[derive(Serialize)]
struct BoundsJson {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl From<Bounds> for BoundsJson {
    fn from(b: Bounds) -> Self {
        BoundsJson {
            min_x: b.min_x,
            max_x: b.max_x,
            min_y: b.min_y,
            max_y: b.max_y,
        }
    }
}

#[derive(Serialize)]
struct RecordJson<'a> {
    id: &'a str,
    name: &'a str,
    point_count: usize,
    bounds: Option<BoundsJson>,
    created_at: u64,
}

impl<'a> From<&'a DatasetRecord> for RecordJson<'a> {
    fn from(r: &'a DatasetRecord) -> Self {
        RecordJson {
            id: &r.id,
            name: &r.name,
            point_count: r.point_count,
            bounds: r.bounds.map(Into::into),
            created_at: r.created_at,
        }
    }
}

type Params = HashMap<String, String>;

fn opt_f64(q: &Params, key: &'static str) -> ApiResult<Option<f64>> {
    q.get(key)
        .map(|raw| {
            raw.parse::<f64>()
                .map_err(|_| ApiError::invalid(key, format!("{key}={raw:?} is not a number")))
        })
        .transpose()
}

fn opt_u32(q: &Params, key: &'static str) -> ApiResult<Option<u32>> {
    q.get(key)
        .map(|raw| {
            raw.parse::<u32>().map_err(|_| {
                ApiError::invalid(key, format!("{key}={raw:?} is not a non-negative integer"))
            })
        })
        .transpose()
}

fn required_f64(q: &Params, key: &'static str) -> ApiResult<f64> {
    opt_f64(q, key)?.ok_or_else(|| ApiError::invalid(key, format!("{key} is required")))
}

fn layout_request(q: &Params) -> ApiResult<LayoutRequest> {
    Ok(LayoutRequest {
        origin_x: opt_f64(q, "origin_x")?,
        origin_y: opt_f64(q, "origin_y")?,
        size_x: opt_f64(q, "size_x")?,
        size_y: opt_f64(q, "size_y")?,
        auto_bins: opt_u32(q, "bins_across")?,
    })
}

fn blur_params(q: &Params) -> ApiResult<BlurParams> {
    let mode = match q.get("mode") {
        Some(m) => m.parse::<NormalizationMode>()?,
        None => NormalizationMode::default(),
    };
    let epsilon = opt_f64(q, "epsilon")?.unwrap_or(hexblur::blur::DEFAULT_EPSILON);
    Ok(BlurParams::with_options(
        required_f64(q, "sigma_x")?,
        required_f64(q, "sigma_y")?,
        epsilon,
        mode,
    )?)
}

fn record(state: &AppState, id: &str) -> ApiResult<Arc<DatasetRecord>> {
    state.get(id).ok_or_else(|| ApiError::not_found(id))
}

fn binned(record: &DatasetRecord, q: &Params) -> ApiResult<BinGrid> {
    let layout = layout_request(q)?.resolve(&record.dataset)?;
    Ok(bin_points(&record.dataset, layout)?)
}

pub(crate) async fn healthz() -> &'static str {
    "ok"
}

pub(crate) async fn colormaps() -> Json<Vec<&'static str>> {
    Json(Colormap::ALL.iter().map(|c| c.as_str()).collect())
}

pub(crate) async fn create_dataset(
    State(state): State<Arc<AppState>>,
    Query(q): Query<Params>,
    body: String,
) -> ApiResult<Response> {
    let name = q.get("name").cloned();
    let rec = tokio::task::spawn_blocking(move || state.create(name, &body))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
            field: None,
        })??;
    log::info!("created dataset {} ({} points)", rec.id, rec.point_count);
    Ok((StatusCode::CREATED, Json(RecordJson::from(rec.as_ref()))).into_response())
}

pub(crate) async fn get_dataset(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let rec = record(&state, &id)?;
    Ok(Json(RecordJson::from(rec.as_ref())).into_response())
}

pub(crate) async fn bins(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<Params>,
) -> ApiResult<Json<BinsResponse>> {
    let rec = record(&state, &id)?;
    let grid = binned(&rec, &q)?;
    Ok(Json(BinsResponse::new(&grid, None)))
}

pub(crate) async fn blur(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<Params>,
) -> ApiResult<Json<BinsResponse>> {
    let rec = record(&state, &id)?;
    let params = blur_params(&q)?;
    let grid = binned(&rec, &q)?;
    let stencil = state.stencils.get_or_build(params)?;
    let threads = state.threads;
    let blurred = tokio::task::spawn_blocking(move || {
        apply_blur_with_threads(&grid, &stencil, threads)
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
        field: None,
    })??;
    Ok(Json(BinsResponse::new(&blurred, Some(&params))))
}

pub(crate) async fn labels(
    State(state): State<Arc<AppState>>,
    Path((id, bin_q, bin_r)): Path<(String, i64, i64)>,
    Query(q): Query<Params>,
) -> ApiResult<Json<Vec<LabelJson>>> {
    let rec = record(&state, &id)?;
    let k = opt_u32(&q, "k")?.unwrap_or(10);
    if k == 0 {
        return Err(ApiError::invalid("k", "k must be >= 1"));
    }
    let grid = binned(&rec, &q)?;
    let out = top_labels(&grid, AxialCoord::new(bin_q, bin_r), k as usize)
        .into_iter()
        .map(|(label, weight)| LabelJson { label, weight })
        .collect();
    Ok(Json(out))
}
