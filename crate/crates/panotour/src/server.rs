//! Read-only HTTP service over a compiled bundle.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/tour` | `manifest.resolved`, byte for byte |
//! | `GET /api/scene/{id}/pano` | panorama; honours single `Range` requests |
//! | `GET /api/scene/{id}/preview` | little-planet PNG |
//! | `GET /api/scene/{id}/cubemap/{face}` | cube face PNG, 404 unless compiled with cubemaps |
//! | `GET /api/scene/{id}/view?yaw_deg&pitch_deg&fov_deg&w&h` | perspective PNG |
//! | `GET /api/media/{ref}` | picture payload |
//! | `GET /api/metrics` | per-endpoint counters as JSON |
//! | `GET /`, `GET /viewer/*` | browser client |
//!
//! Errors are JSON objects `{"code": ..., "message": ...}`.

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::extract::{MatchedPath, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{OnceCell, Semaphore};

use panotour_core::tour::is_valid_media_ref;
use panotour_core::{CubeFace, Dimensions, EquirectImage, ViewParams};

use crate::bundle::{BundleError, TourBundle, MANIFEST_FILE};
use crate::codec::{decode_image, encode_png};
use crate::{render, viewer};

/// Largest `/view` output edge, in pixels.
pub const MAX_VIEW_EDGE: u32 = 2048;
/// Largest `/view` field of view, in degrees.
pub const MAX_VIEW_FOV_DEG: f64 = 170.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub bind: String,
    pub bundle: PathBuf,
    pub cache_seconds: u64,
    pub max_concurrent_renders: usize,
}

impl ServerConfig {
    pub fn new(bundle: impl Into<PathBuf>) -> Self {
        Self {
            bind: crate::config::DEFAULT_BIND.to_string(),
            bundle: bundle.into(),
            cache_seconds: 3600,
            max_concurrent_renders: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("bundle failed to open: {0}")]
    Bundle(#[from] BundleError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("max_concurrent_renders must be at least 1")]
    Concurrency,
    #[error("server stopped: {0}")]
    Io(#[from] std::io::Error),
}

/// Metric keys, one per route family.
pub const ENDPOINTS: [&str; 9] = ["tour", "pano", "preview", "cubemap", "view", "media", "metrics", "index", "viewer"];

fn endpoint_of(route: &str) -> Option<usize> {
    let key = match route {
        "/api/tour" => "tour",
        "/api/scene/{id}/pano" => "pano",
        "/api/scene/{id}/preview" => "preview",
        "/api/scene/{id}/cubemap/{face}" => "cubemap",
        "/api/scene/{id}/view" => "view",
        "/api/media/{*path}" => "media",
        "/api/metrics" => "metrics",
        "/" => "index",
        "/viewer/{*path}" => "viewer",
        _ => return None,
    };
    ENDPOINTS.iter().position(|e| *e == key)
}

// latency buckets: four per power of two of microseconds
const BUCKETS: usize = 4 * 40;

fn bucket_of(us: u64) -> usize {
    (((us as f64 + 1.0).log2() * 4.0) as usize).min(BUCKETS - 1)
}

fn bucket_upper_us(i: usize) -> f64 {
    2f64.powf((i + 1) as f64 / 4.0) - 1.0
}

struct EndpointStats {
    count: AtomicU64,
    bytes: AtomicU64,
    max_us: AtomicU64,
    buckets: Vec<AtomicU64>,
}

impl EndpointStats {
    fn new() -> Self {
        Self {
            count: AtomicU64::new(0),
            bytes: AtomicU64::new(0),
            max_us: AtomicU64::new(0),
            buckets: (0..BUCKETS).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    fn record(&self, bytes: u64, us: u64) {
        self.buckets[bucket_of(us)].fetch_add(1, Ordering::Relaxed);
        self.bytes.fetch_add(bytes, Ordering::Relaxed);
        self.max_us.fetch_max(us, Ordering::Relaxed);
        self.count.fetch_add(1, Ordering::Release);
    }

    fn snapshot(&self) -> EndpointSnapshot {
        let count = self.count.load(Ordering::Acquire);
        let counts: Vec<u64> = self.buckets.iter().map(|b| b.load(Ordering::Relaxed)).collect();
        let max_ms = self.max_us.load(Ordering::Relaxed) as f64 / 1000.0;
        let total: u64 = counts.iter().sum();
        let quantile = |q: f64| {
            if total == 0 {
                return 0.0;
            }
            let rank = (q * total as f64).ceil().max(1.0) as u64;
            let mut seen = 0;
            for (i, c) in counts.iter().enumerate() {
                seen += c;
                if seen >= rank {
                    return (bucket_upper_us(i) / 1000.0).min(max_ms);
                }
            }
            max_ms
        };
        EndpointSnapshot {
            count,
            bytes: self.bytes.load(Ordering::Relaxed),
            p50_ms: quantile(0.5),
            p95_ms: quantile(0.95),
            max_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSnapshot {
    pub count: u64,
    pub bytes: u64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub endpoints: BTreeMap<String, EndpointSnapshot>,
}

/// Lock-free per-endpoint counters.
pub struct Metrics {
    stats: Vec<EndpointStats>,
}

impl Default for Metrics {
    fn default() -> Self {
        Self {
            stats: ENDPOINTS.iter().map(|_| EndpointStats::new()).collect(),
        }
    }
}

impl Metrics {
    pub fn record(&self, endpoint: &str, bytes: u64, us: u64) {
        if let Some(i) = ENDPOINTS.iter().position(|e| *e == endpoint) {
            self.stats[i].record(bytes, us);
        }
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        MetricsSnapshot {
            endpoints: ENDPOINTS
                .iter()
                .zip(&self.stats)
                .map(|(e, s)| (e.to_string(), s.snapshot()))
                .collect(),
        }
    }
}

/// Shared, immutable service state.
pub struct AppState {
    bundle: TourBundle,
    manifest: Vec<u8>,
    renders: Semaphore,
    panoramas: BTreeMap<String, OnceCell<Arc<EquirectImage>>>,
    metrics: Metrics,
    cache_control: HeaderValue,
}

impl AppState {
    pub fn new(bundle: TourBundle, cache_seconds: u64, max_concurrent_renders: usize) -> Result<Self, ServeError> {
        if max_concurrent_renders == 0 {
            return Err(ServeError::Concurrency);
        }
        let path = bundle.path_of(MANIFEST_FILE);
        let manifest = std::fs::read(&path).map_err(|source| BundleError::Io { path, source })?;
        let panoramas = bundle
            .tour()
            .scenes()
            .iter()
            .map(|s| (s.id().to_string(), OnceCell::new()))
            .collect();
        Ok(Self {
            bundle,
            manifest,
            renders: Semaphore::new(max_concurrent_renders),
            panoramas,
            metrics: Metrics::default(),
            cache_control: HeaderValue::from_str(&format!("public, max-age={cache_seconds}"))
                .expect("ascii header value"),
        })
    }

    pub fn bundle(&self) -> &TourBundle {
        &self.bundle
    }

    pub fn metrics_snapshot(&self) -> MetricsSnapshot {
        self.metrics.snapshot()
    }

    async fn panorama(&self, scene: &str) -> Result<Arc<EquirectImage>, ApiError> {
        let cell = self.panoramas.get(scene).ok_or_else(|| ApiError::not_found(format!("no scene {scene:?}")))?;
        let files = self
            .bundle
            .scene_files(scene)
            .filter(|f| !f.pano.is_empty())
            .ok_or_else(|| ApiError::not_found(format!("scene {scene:?} has no panorama")))?;
        let path = self.bundle.path_of(&files.pano);
        cell.get_or_try_init(|| async move {
            let bytes = tokio::fs::read(&path).await.map_err(ApiError::internal)?;
            let decoded = tokio::task::spawn_blocking(move || decode_image(&bytes))
                .await
                .map_err(ApiError::internal)?
                .map_err(ApiError::internal)?;
            Ok(Arc::new(decoded.image))
        })
        .await
        .cloned()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<(header::HeaderName, HeaderValue)>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            extra: None,
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_PARAMETER", message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_vec(&ErrorBody {
            code: self.code,
            message: self.message,
        })
        .expect("serializable");
        let mut r = full(self.status, "application/json", body, HeaderValue::from_static("no-store"));
        if let Some((k, v)) = self.extra {
            r.headers_mut().insert(k, v);
        }
        r
    }
}

fn full(status: StatusCode, content_type: &'static str, body: Vec<u8>, cache: HeaderValue) -> Response {
    let len = body.len();
    let mut r = Response::new(Body::from(body));
    *r.status_mut() = status;
    let h = r.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    h.insert(header::CONTENT_LENGTH, HeaderValue::from(len));
    h.insert(header::CACHE_CONTROL, cache);
    r
}

pub type Shared = Arc<AppState>;

async fn read_asset(state: &AppState, rel: &str) -> Result<Vec<u8>, ApiError> {
    if state.bundle.asset(rel).is_none() {
        return Err(ApiError::not_found(format!("{rel} is not part of this bundle")));
    }
    tokio::fs::read(state.bundle.path_of(rel)).await.map_err(ApiError::internal)
}

async fn serve_asset(state: &AppState, rel: &str) -> Result<Response, ApiError> {
    let bytes = read_asset(state, rel).await?;
    Ok(full(StatusCode::OK, viewer::content_type(rel), bytes, state.cache_control.clone()))
}

fn scene_files<'a>(state: &'a AppState, id: &str) -> Result<&'a crate::bundle::SceneFiles, ApiError> {
    state
        .bundle
        .scene_files(id)
        .ok_or_else(|| ApiError::not_found(format!("no scene {id:?}")))
}

async fn tour(State(s): State<Shared>) -> Response {
    full(StatusCode::OK, "application/json", s.manifest.clone(), s.cache_control.clone())
}

/// A satisfiable single byte range, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteRange {
    Full,
    Partial(u64, u64),
    Unsatisfiable,
}

/// Parses a `Range` header against a resource of `len` bytes. Multi-range
/// and malformed headers fall back to the full resource.
pub fn parse_range(value: Option<&str>, len: u64) -> ByteRange {
    let Some(spec) = value.and_then(|v| v.trim().strip_prefix("bytes=")) else {
        return ByteRange::Full;
    };
    if spec.contains(',') {
        return ByteRange::Full;
    }
    let Some((a, b)) = spec.trim().split_once('-') else {
        return ByteRange::Full;
    };
    let (a, b) = (a.trim(), b.trim());
    let parsed = match (a.is_empty(), b.is_empty()) {
        (true, true) => return ByteRange::Full,
        (true, false) => match b.parse::<u64>() {
            Ok(0) => return ByteRange::Unsatisfiable,
            Ok(n) => (len.saturating_sub(n), len.saturating_sub(1)),
            Err(_) => return ByteRange::Full,
        },
        (false, _) => {
            let Ok(start) = a.parse::<u64>() else { return ByteRange::Full };
            let end = if b.is_empty() {
                len.saturating_sub(1)
            } else {
                match b.parse::<u64>() {
                    Ok(e) if e >= start => e.min(len.saturating_sub(1)),
                    _ => return ByteRange::Full,
                }
            };
            (start, end)
        }
    };
    if len == 0 || parsed.0 >= len {
        ByteRange::Unsatisfiable
    } else {
        ByteRange::Partial(parsed.0, parsed.1)
    }
}

async fn pano(State(s): State<Shared>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, ApiError> {
    let files = scene_files(&s, &id)?;
    let rel = files.pano.clone();
    let bytes = read_asset(&s, &rel).await?;
    let len = bytes.len() as u64;
    let ctype = viewer::content_type(&rel);
    let range = parse_range(headers.get(header::RANGE).and_then(|v| v.to_str().ok()), len);
    let mut r = match range {
        ByteRange::Full => full(StatusCode::OK, ctype, bytes, s.cache_control.clone()),
        ByteRange::Partial(a, b) => {
            let mut r = full(
                StatusCode::PARTIAL_CONTENT,
                ctype,
                bytes[a as usize..=b as usize].to_vec(),
                s.cache_control.clone(),
            );
            r.headers_mut().insert(
                header::CONTENT_RANGE,
                HeaderValue::from_str(&format!("bytes {a}-{b}/{len}")).expect("ascii"),
            );
            r
        }
        ByteRange::Unsatisfiable => {
            let mut e = ApiError::new(
                StatusCode::RANGE_NOT_SATISFIABLE,
                "RANGE_NOT_SATISFIABLE",
                format!("requested range lies outside the {len}-byte panorama"),
            );
            e.extra = Some((
                header::CONTENT_RANGE,
                HeaderValue::from_str(&format!("bytes */{len}")).expect("ascii"),
            ));
            return Err(e);
        }
    };
    r.headers_mut().insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    Ok(r)
}

async fn preview(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let rel = scene_files(&s, &id)?.preview.clone();
    serve_asset(&s, &rel).await
}

async fn cubemap(State(s): State<Shared>, UrlPath((id, face)): UrlPath<(String, String)>) -> Result<Response, ApiError> {
    let files = scene_files(&s, &id)?;
    let face = CubeFace::from_name(&face)
        .ok_or_else(|| ApiError::not_found(format!("no cube face {face:?} (expected px, nx, py, ny, pz or nz)")))?;
    let rel = files
        .cube_faces
        .get(&face)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("scene {id:?} was compiled without cube faces")))?;
    serve_asset(&s, &rel).await
}

/// Validated `/view` query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewQuery {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

impl ViewQuery {
    pub fn parse(q: &BTreeMap<String, String>) -> Result<Self, String> {
        let num = |k: &str, default: f64| -> Result<f64, String> {
            match q.get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("{k}={v:?} is not a finite number")),
            }
        };
        let edge = |k: &str, default: u32| -> Result<u32, String> {
            match q.get(k) {
                None => Ok(default),
                Some(v) => match v.parse::<u32>() {
                    Ok(n) if (1..=MAX_VIEW_EDGE).contains(&n) => Ok(n),
                    _ => Err(format!("{k}={v:?} must be an integer in 1..={MAX_VIEW_EDGE}")),
                },
            }
        };
        let v = ViewQuery {
            yaw_deg: num("yaw_deg", 0.0)?,
            pitch_deg: num("pitch_deg", 0.0)?,
            fov_deg: num("fov_deg", 90.0)?,
            width: edge("w", 640)?,
            height: edge("h", 480)?,
        };
        if !(-90.0..=90.0).contains(&v.pitch_deg) {
            return Err(format!("pitch_deg={} outside [-90, 90]", v.pitch_deg));
        }
        if !(v.fov_deg > 0.0 && v.fov_deg <= MAX_VIEW_FOV_DEG) {
            return Err(format!("fov_deg={} outside (0, {MAX_VIEW_FOV_DEG}]", v.fov_deg));
        }
        Ok(v)
    }

    pub fn view_params(&self) -> ViewParams {
        let out = Dimensions::new(self.width, self.height).expect("validated edges");
        ViewParams::from_degrees(self.yaw_deg, self.pitch_deg, self.fov_deg, out).expect("validated angles")
    }
}

async fn view(
    State(s): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let query = ViewQuery::parse(&q).map_err(ApiError::bad_request)?;
    let img = s.panorama(&id).await?;
    // queue rather than refuse when all render slots are busy
    let _permit = s.renders.acquire().await.map_err(ApiError::internal)?;
    let png = tokio::task::spawn_blocking(move || encode_png(&render::perspective(&img, &query.view_params())))
        .await
        .map_err(ApiError::internal)?;
    Ok(full(StatusCode::OK, "image/png", png, s.cache_control.clone()))
}

async fn media(State(s): State<Shared>, UrlPath(path): UrlPath<String>) -> Result<Response, ApiError> {
    if !is_valid_media_ref(&path) {
        return Err(ApiError::not_found(format!("{path:?} is not a media reference")));
    }
    serve_asset(&s, &format!("media/{path}")).await
}

async fn metrics(State(s): State<Shared>) -> Response {
    let body = serde_json::to_vec_pretty(&s.metrics.snapshot()).expect("serializable");
    full(StatusCode::OK, "application/json", body, HeaderValue::from_static("no-store"))
}

async fn index(State(s): State<Shared>) -> Result<Response, ApiError> {
    serve_asset(&s, "viewer/index.html").await
}

async fn viewer_asset(State(s): State<Shared>, UrlPath(path): UrlPath<String>) -> Result<Response, ApiError> {
    if !is_valid_media_ref(&path) {
        return Err(ApiError::not_found(format!("no viewer asset {path:?}")));
    }
    serve_asset(&s, &format!("viewer/{path}")).await
}

async fn not_found(req: Request) -> ApiError {
    ApiError::not_found(format!("no route for {}", req.uri().path()))
}

async fn track(State(s): State<Shared>, req: Request, next: Next) -> Response {
    let started = Instant::now();
    let endpoint = req.extensions().get::<MatchedPath>().and_then(|m| endpoint_of(m.as_str()));
    let resp = next.run(req).await;
    if let Some(i) = endpoint {
        let bytes = resp
            .headers()
            .get(header::CONTENT_LENGTH)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        s.metrics.stats[i].record(bytes, started.elapsed().as_micros() as u64);
    }
    resp
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/tour", get(tour))
        .route("/api/scene/{id}/pano", get(pano))
        .route("/api/scene/{id}/preview", get(preview))
        .route("/api/scene/{id}/cubemap/{face}", get(cubemap))
        .route("/api/scene/{id}/view", get(view))
        .route("/api/media/{*path}", get(media))
        .route("/api/metrics", get(metrics))
        .route("/", get(index))
        .route("/viewer/{*path}", get(viewer_asset))
        .route_layer(middleware::from_fn_with_state(state.clone(), track))
        .fallback(not_found)
        .with_state(state)
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    state: Shared,
}

impl Server {
    /// Opens and verifies the bundle, then binds the listener.
    pub async fn bind(config: &ServerConfig) -> Result<Server, ServeError> {
        let bundle = TourBundle::open(&config.bundle)?;
        let verify = bundle.clone();
        tokio::task::spawn_blocking(move || verify.verify())
            .await
            .map_err(|e| ServeError::Io(std::io::Error::other(e)))??;
        let state = Arc::new(AppState::new(bundle, config.cache_seconds, config.max_concurrent_renders)?);
        let listener = TcpListener::bind(&config.bind).await.map_err(|source| ServeError::Bind {
            addr: config.bind.clone(),
            source,
        })?;
        Ok(Server { listener, state })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> Shared {
        self.state.clone()
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run_until(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, router(self.state))
            .with_graceful_shutdown(shutdown)
            .await?;
        Ok(())
    }
}
