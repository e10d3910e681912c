//! Read-mostly HTTP/JSON API over a completed run directory.
//!
//! | route | answer |
//! |---|---|
//! | `GET /api/v1/summary` | states, segments, time steps, PCA eigenvalues and loadings |
//! | `GET /api/v1/tracks?axes=1,3` | every track projected onto two principal axes, with metrics |
//! | `GET /api/v1/csp/{state}/{segment}/{t}` | one stored CSP, bin masses as base64 little-endian f64 |
//! | `POST /api/v1/fiber` | fiber surface of a step's field under a control polygon |
//!
//! The run directory is read once into a [`Snapshot`]. Until that finishes
//! every route answers 503; if it fails, 404. GET answers carry the
//! snapshot's content hash as ETag and honour `If-None-Match`.

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use bimoment_core::tracks::TrackMetrics;
use bimoment_core::{extract_fiber_surface, track_metrics, AxisPair, SegmentKey, TriangleMesh};
use bimoment_pipeline::artifacts::read_csp;
use bimoment_pipeline::source::LoadedStep;
use bimoment_pipeline::stages::PolygonInput;
use lru::LruCache;
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

pub mod snapshot;

pub use snapshot::{LoadError, Snapshot};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Upper bound on one fiber extraction, including field loading.
    pub fiber_timeout: Duration,
    /// Steps whose fields stay in memory.
    pub field_cache: NonZeroUsize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            fiber_timeout: Duration::from_secs(30),
            field_cache: NonZeroUsize::new(4).unwrap(),
        }
    }
}

type FieldCache = LruCache<(String, usize), Arc<LoadedStep>>;

pub struct AppState {
    config: ServiceConfig,
    snapshot: OnceLock<Result<Arc<Snapshot>, String>>,
    fields: Mutex<FieldCache>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            fields: Mutex::new(LruCache::new(config.field_cache)),
            snapshot: OnceLock::new(),
            config,
        })
    }

    /// Loads the snapshot from the configured directory. Only the first call
    /// has an effect.
    pub fn load(&self) {
        let result = Snapshot::load(&self.config.data_dir)
            .map(Arc::new)
            .map_err(|e| e.to_string());
        match &result {
            Ok(s) => log::info!(
                "loaded {} ({} tracks)",
                self.config.data_dir.display(),
                s.tracks.tracks.len()
            ),
            Err(e) => log::error!("{e}"),
        }
        let _ = self.snapshot.set(result);
    }

    fn snapshot(&self) -> Result<Arc<Snapshot>, ApiError> {
        match self.snapshot.get() {
            None => Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "run directory is still loading",
            )),
            Some(Err(e)) => Err(ApiError::new(StatusCode::NOT_FOUND, e.clone())),
            Some(Ok(s)) => Ok(s.clone()),
        }
    }

    fn field(&self, snap: &Snapshot, state: &str, t: usize) -> Result<Arc<LoadedStep>, ApiError> {
        let key = (state.to_owned(), t);
        if let Some(f) = self.fields.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let step = snap
            .step(state, t)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no step {t} of state {state}")))?;
        let loaded = Arc::new(step.source.load(snap.index.weights).map_err(ApiError::internal)?);
        self.fields.lock().unwrap().put(key, loaded.clone());
        Ok(loaded)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize)]
pub struct TimeStep {
    pub time_index: usize,
    pub time_fs: f64,
}

#[derive(Serialize)]
pub struct StateSummary {
    pub state_label: String,
    /// Atom segments; `all` and `boundary` are always available as well.
    pub segments: Vec<i32>,
    pub time_steps: Vec<TimeStep>,
}

#[derive(Serialize)]
pub struct PcaSummary {
    pub eigenvalues: [f64; 4],
    pub explained_variance_ratio: [f64; 4],
    pub mean: [f64; 4],
    /// Row `k` weighs the inputs named in `loadings_on` for PC `k + 1`.
    pub loadings: [[f64; 4]; 4],
    pub loadings_on: [String; 4],
}

#[derive(Serialize)]
pub struct Summary {
    pub states: Vec<StateSummary>,
    pub window: bimoment_core::RangeWindow<f64>,
    pub res: [usize; 2],
    pub pca: PcaSummary,
}

async fn summary(State(app): State<Arc<AppState>>) -> ApiResult<Summary> {
    let snap = app.snapshot()?;
    let model = &snap.tracks.model;
    Ok(Json(Summary {
        states: snap
            .index
            .states
            .iter()
            .map(|s| StateSummary {
                state_label: s.state_label.clone(),
                segments: s.segments.clone(),
                time_steps: s
                    .steps
                    .iter()
                    .map(|st| TimeStep {
                        time_index: st.time_index,
                        time_fs: st.time_fs,
                    })
                    .collect(),
            })
            .collect(),
        window: snap.index.window,
        res: snap.index.res,
        pca: PcaSummary {
            eigenvalues: model.eigenvalues,
            explained_variance_ratio: model.explained_variance_ratio,
            mean: model.mean,
            loadings: model.components,
            loadings_on: model.loadings_on.clone(),
        },
    }))
}

#[derive(Deserialize)]
struct TracksQuery {
    axes: Option<String>,
}

#[derive(Serialize)]
pub struct TrackPoint2d {
    pub time_index: usize,
    pub time_fs: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Serialize)]
pub struct TrackSlice {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub points: Vec<TrackPoint2d>,
    pub arc_length: f64,
    pub bbox_area: f64,
    pub max_step: f64,
}

#[derive(Serialize)]
pub struct TracksResponse {
    pub axes: [usize; 2],
    pub tracks: Vec<TrackSlice>,
}

async fn tracks(State(app): State<Arc<AppState>>, Query(q): Query<TracksQuery>) -> ApiResult<TracksResponse> {
    let snap = app.snapshot()?;
    let axes: AxisPair = q
        .axes
        .as_deref()
        .unwrap_or("1,2")
        .parse()
        .map_err(|e: bimoment_core::Error| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let set = &snap.tracks.tracks;
    let metrics: Vec<TrackMetrics> = track_metrics(set, axes);
    let tracks = set
        .tracks
        .iter()
        .map(|t| {
            let m = metrics
                .iter()
                .find(|m| m.state_label == t.state_label && m.segment_id == t.segment_id)
                .expect("metrics cover every track");
            TrackSlice {
                state_label: t.state_label.clone(),
                segment_id: t.segment_id,
                points: t
                    .points
                    .iter()
                    .zip(t.points_2d(axes))
                    .map(|(p, [x, y])| TrackPoint2d {
                        time_index: p.time_index,
                        time_fs: p.time_fs,
                        x,
                        y,
                    })
                    .collect(),
                arc_length: m.arc_length,
                bbox_area: m.bbox_area,
                max_step: m.max_step,
            }
        })
        .collect();
    Ok(Json(TracksResponse {
        axes: [axes.first(), axes.second()],
        tracks,
    }))
}

#[derive(Serialize)]
pub struct CspResponse {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub time_index: usize,
    pub time_fs: f64,
    pub window: bimoment_core::RangeWindow<f64>,
    pub res: [usize; 2],
    /// Bin masses, little-endian f64, f1 fastest.
    pub density: String,
    pub total_mass: f64,
    pub out_of_window: f64,
}

async fn csp(
    State(app): State<Arc<AppState>>,
    UrlPath((state, segment, t)): UrlPath<(String, String, String)>,
) -> ApiResult<CspResponse> {
    let snap = app.snapshot()?;
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("no CSP {state}/{segment}/{t}"));
    let seg: SegmentKey = segment.parse().map_err(|_| not_found())?;
    let t: usize = t.parse().map_err(|_| not_found())?;
    if !snap.has_csp(&(state.clone(), seg, t)) {
        return Err(not_found());
    }
    let (hist, side) = read_csp(&snap.run.csp_stem(&state, t, seg)).map_err(ApiError::internal)?;
    Ok(Json(CspResponse {
        state_label: side.state_label,
        segment_id: side.segment_id,
        time_index: side.time_index,
        time_fs: side.time_fs,
        window: side.window,
        res: side.res,
        density: base64::engine::general_purpose::STANDARD.encode(hist.to_le_bytes()),
        total_mass: side.total_mass,
        out_of_window: side.out_of_window,
    }))
}

#[derive(Deserialize)]
pub struct FiberRequest {
    pub state: String,
    pub t: usize,
    pub polygon: PolygonInput,
}

async fn fiber(State(app): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<TriangleMesh<f64>> {
    let snap = app.snapshot()?;
    let req: FiberRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad fiber request: {e}")))?;
    if snap.step(&req.state, req.t).is_none() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("no step {} of state {}", req.t, req.state),
        ));
    }
    let polygon = req
        .polygon
        .build(&snap.index.window)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let timeout = app.config.fiber_timeout;
    let work = tokio::task::spawn_blocking(move || {
        let step = app.field(&snap, &req.state, req.t)?;
        Ok::<_, ApiError>(extract_fiber_surface(&step.field, &polygon))
    });
    match tokio::time::timeout(timeout, work).await {
        Ok(joined) => Ok(Json(joined.map_err(ApiError::internal)??)),
        Err(_) => Err(ApiError::new(
            StatusCode::GATEWAY_TIMEOUT,
            format!("fiber extraction exceeded {} ms", timeout.as_millis()),
        )),
    }
}

/// Adds the snapshot hash as ETag to successful GETs and answers 304 when
/// the client already holds it.
async fn etag(State(app): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let tag = match (req.method() == Method::GET, app.snapshot()) {
        (true, Ok(s)) => Some(format!("\"{}\"", s.content_hash)),
        _ => None,
    };
    let Some(tag) = tag else {
        return next.run(req).await;
    };
    let fresh = req
        .headers()
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == tag || t.trim() == "*"));
    let value = HeaderValue::from_str(&tag).expect("hex digest is a valid header");
    if fresh {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, value)]).into_response();
    }
    let mut res = next.run(req).await;
    if res.status().is_success() {
        res.headers_mut().insert(header::ETAG, value);
    }
    res
}

pub fn router(app: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH])
        .expose_headers([header::ETAG]);
    Router::new()
        .route("/api/v1/summary", get(summary))
        .route("/api/v1/tracks", get(tracks))
        .route("/api/v1/csp/{state}/{segment}/{t}", get(csp))
        .route("/api/v1/fiber", post(fiber))
        .layer(middleware::from_fn_with_state(app.clone(), etag))
        .layer(cors)
        .with_state(app)
}

/// Binds `addr`, loads the run directory in the background and serves until
/// the process ends.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let app = AppState::new(config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    let loader = app.clone();
    tokio::task::spawn_blocking(move || loader.load());
    axum::serve(listener, router(app)).await
}
