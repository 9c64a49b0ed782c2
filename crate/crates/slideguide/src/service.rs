//! HTTP/JSON retrieval service over a loaded corpus.
//!
//! The corpus and font model are loaded once and shared read-only by every
//! handler; the only mutable state is an atomic request counter. Responses
//! carry an `x-elapsed-ms` header, and JSON bodies of successful calls also
//! carry `elapsed_ms`.

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use slideguide_core::corpus::{load_corpus, Corpus, CorpusError};
use slideguide_core::fontnet::{classify_font, load_model, FontError, FontModel};
use slideguide_core::ingest::{LayoutRegion, NormRect, SlideLayout};
use slideguide_core::layout::{heatmap_for_sketch, retrieve_layouts, ClassFilter, DEFAULT_HEATMAP_K};
use slideguide_core::matching::{retrieve_diagrams, MatcherConfig};
use slideguide_core::raster::decode_image;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_LAYOUT_TOP_K: usize = 9;
pub const DEFAULT_DIAGRAM_TOP_K: usize = 6;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindError { addr: SocketAddr, source: std::io::Error },
    #[error("cannot load corpus: {0}")]
    CorpusLoadError(#[from] CorpusError),
    #[error("cannot load font model {path}: {source}")]
    FontModel { path: PathBuf, source: FontError },
    #[error("invalid service configuration: {0}")]
    InvalidConfig(String),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub host: IpAddr,
    pub port: u16,
    pub corpus_dir: PathBuf,
    pub layout_top_k: usize,
    pub diagram_top_k: usize,
    /// Size of the retrieved subset behind sketch-conditioned heat maps.
    pub heatmap_k: usize,
    pub matcher: MatcherConfig,
    /// Allowed browser origins; empty allows any origin.
    pub cors_origins: Vec<String>,
}

impl ServiceConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>) -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            corpus_dir: corpus_dir.into(),
            layout_top_k: DEFAULT_LAYOUT_TOP_K,
            diagram_top_k: DEFAULT_DIAGRAM_TOP_K,
            heatmap_k: DEFAULT_HEATMAP_K,
            matcher: MatcherConfig::default(),
            cors_origins: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.layout_top_k == 0 || self.diagram_top_k == 0 || self.heatmap_k == 0 {
            return Err(ServiceError::InvalidConfig("top-k values must be positive".into()));
        }
        MatcherConfig::new(self.matcher.ratio, self.matcher.sim_floor)
            .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
        for o in &self.cors_origins {
            HeaderValue::from_str(o).map_err(|_| ServiceError::InvalidConfig(format!("bad CORS origin {o:?}")))?;
        }
        Ok(())
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.port)
    }
}

struct Shared {
    corpus: Corpus,
    font: Option<FontModel>,
    config: ServiceConfig,
    requests: AtomicU64,
}

/// Cheap-to-clone handle on the shared read-only state.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(corpus: Corpus, font: Option<FontModel>, config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        Ok(Self(Arc::new(Shared { corpus, font, config, requests: AtomicU64::new(0) })))
    }

    /// Loads the corpus at `config.corpus_dir` and, when present, its font
    /// model.
    pub fn load(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let corpus = load_corpus(&config.corpus_dir)?;
        let font = match corpus.font_model_path() {
            Some(path) if path.is_file() => {
                Some(load_model(&path).map_err(|source| ServiceError::FontModel { path, source })?)
            }
            _ => None,
        };
        Self::new(corpus, font, config)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.0.corpus
    }

    pub fn requests_served(&self) -> u64 {
        self.0.requests.load(Ordering::Relaxed)
    }
}

pub fn router(state: AppState) -> Router {
    let cfg = &state.0.config;
    let origins = if cfg.cors_origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        AllowOrigin::list(cfg.cors_origins.iter().map(|o| HeaderValue::from_str(o).expect("validated")))
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/healthz", get(healthz))
        .route("/retrieve/layout", post(retrieve_layout))
        .route("/heatmap", post(heatmap))
        .route("/retrieve/diagram", post(retrieve_diagram))
        .route("/font/classify", post(font_classify))
        .route("/slide/{file}", get(slide_image))
        .route("/diagram/{file}", get(diagram_image))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), timing))
        .layer(cors)
        .with_state(state)
}

/// Binds the configured address. Port 0 picks a free port.
pub async fn bind(config: &ServiceConfig) -> Result<TcpListener, ServiceError> {
    let addr = config.addr();
    TcpListener::bind(addr).await.map_err(|source| ServiceError::BindError { addr, source })
}

/// Serves until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Loads the corpus, binds, and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::load(config.clone())?;
    let listener = bind(&config).await?;
    log::info!(
        "serving {} slides / {} diagrams on http://{}",
        state.corpus().slides().len(),
        state.corpus().diagrams().len(),
        listener.local_addr()?
    );
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

async fn timing(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let start = Instant::now();
    state.0.requests.fetch_add(1, Ordering::Relaxed);
    let mut res = next.run(req).await;
    let ms = format!("{:.3}", elapsed_ms(start));
    res.headers_mut().insert("x-elapsed-ms", HeaderValue::from_str(&ms).expect("ascii"));
    res
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: kind, message: message.into() } }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn effective_k(k: Option<usize>, default: usize) -> Result<usize, ApiError> {
    match k {
        Some(0) => Err(ApiError::bad_request("k must be positive")),
        Some(k) => Ok(k),
        None => Ok(default),
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RegionJson {
    class: String,
    bbox: [f64; 4],
}

fn query_layout(regions: &[RegionJson]) -> Result<SlideLayout, ApiError> {
    let regions = regions
        .iter()
        .map(|r| {
            let [x0, y0, x1, y1] = r.bbox;
            Ok(LayoutRegion { class: r.class.parse()?, bbox: NormRect::new(x0, y0, x1, y1)? })
        })
        .collect::<Result<Vec<_>, slideguide_core::ingest::IngestError>>()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    SlideLayout::new("query", regions).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn decode_png_base64(data: &str) -> Result<slideguide_core::GrayImage, ApiError> {
    // Accept canvas `toDataURL` output as-is.
    let payload = match data.strip_prefix("data:") {
        Some(rest) => rest.split_once(',').map(|(_, p)| p).unwrap_or(""),
        None => data,
    };
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(payload.trim())
        .map_err(|e| ApiError::bad_request(format!("invalid base64: {e}")))?;
    decode_image(&bytes).map_err(|e| ApiError::bad_request(e.to_string()))
}

/// Ranked entries with the request that produced them.
#[derive(Debug, Serialize)]
struct RetrievalResponse<Q, E> {
    request: Q,
    entries: Vec<E>,
    elapsed_ms: f64,
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    slides: usize,
    diagrams: usize,
    font_model: bool,
    requests: u64,
    elapsed_ms: f64,
}

async fn healthz(State(s): State<AppState>) -> Json<Health> {
    let start = Instant::now();
    Json(Health {
        status: "ok",
        slides: s.0.corpus.slides().len(),
        diagrams: s.0.corpus.diagrams().len(),
        font_model: s.0.font.is_some(),
        requests: s.requests_served(),
        elapsed_ms: elapsed_ms(start),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutRequest {
    #[serde(default)]
    regions: Vec<RegionJson>,
    k: Option<usize>,
}

#[derive(Debug, Serialize)]
struct LayoutEcho {
    regions: Vec<RegionJson>,
    k: usize,
}

#[derive(Debug, Serialize)]
struct SlideHit {
    rank: usize,
    slide_id: String,
    score: f64,
    image_url: String,
}

async fn retrieve_layout(
    State(s): State<AppState>,
    body: Bytes,
) -> Result<Json<RetrievalResponse<LayoutEcho, SlideHit>>, ApiError> {
    let start = Instant::now();
    let req: LayoutRequest = parse_body(&body)?;
    let k = effective_k(req.k, s.0.config.layout_top_k)?;
    let query = query_layout(&req.regions)?;
    let ranking = retrieve_layouts(&query, &s.0.corpus, k);
    let entries = ranking
        .entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| SlideHit {
            rank: i + 1,
            image_url: format!("/slide/{}.png", e.slide_id),
            slide_id: e.slide_id,
            score: e.score,
        })
        .collect();
    Ok(Json(RetrievalResponse {
        request: LayoutEcho { regions: req.regions, k },
        entries,
        elapsed_ms: elapsed_ms(start),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatmapRequest {
    class: String,
    regions: Option<Vec<RegionJson>>,
    k: Option<usize>,
}

#[derive(Debug, Serialize)]
struct HeatmapResponse {
    class: ClassFilter,
    /// Layouts aggregated: `Some(k)` for a sketch-conditioned subset.
    k: Option<usize>,
    grid_w: usize,
    grid_h: usize,
    counts: Vec<u32>,
    intensities: Vec<f64>,
    elapsed_ms: f64,
}

async fn heatmap(State(s): State<AppState>, body: Bytes) -> Result<Json<HeatmapResponse>, ApiError> {
    let start = Instant::now();
    let req: HeatmapRequest = parse_body(&body)?;
    let filter: ClassFilter =
        req.class.parse().map_err(|e: slideguide_core::ingest::IngestError| ApiError::bad_request(e.to_string()))?;
    let k = effective_k(req.k, s.0.config.heatmap_k)?;
    let query = req.regions.as_deref().map(query_layout).transpose()?;
    let conditioned = query.as_ref().is_some_and(|q| !q.is_empty());
    let h = heatmap_for_sketch(query.as_ref(), &s.0.corpus, filter, k);
    Ok(Json(HeatmapResponse {
        class: filter,
        k: conditioned.then_some(k),
        grid_w: h.grid_w,
        grid_h: h.grid_h,
        counts: h.counts,
        intensities: h.intensities,
        elapsed_ms: elapsed_ms(start),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramRequest {
    sketch_png_base64: String,
    k: Option<usize>,
}

#[derive(Debug, Serialize)]
struct DiagramEcho {
    k: usize,
    sketch_width: usize,
    sketch_height: usize,
}

#[derive(Debug, Serialize)]
struct DiagramHitJson {
    rank: usize,
    diagram_id: String,
    slide_id: String,
    score: f64,
    good_matches: usize,
    image_url: String,
    slide_url: String,
    shadow_default: bool,
}

async fn retrieve_diagram(
    State(s): State<AppState>,
    body: Bytes,
) -> Result<Json<RetrievalResponse<DiagramEcho, DiagramHitJson>>, ApiError> {
    let start = Instant::now();
    let req: DiagramRequest = parse_body(&body)?;
    let k = effective_k(req.k, s.0.config.diagram_top_k)?;
    let sketch = decode_png_base64(&req.sketch_png_base64)?;
    let echo = DiagramEcho { k, sketch_width: sketch.width(), sketch_height: sketch.height() };
    let state = s.clone();
    let hits =
        tokio::task::spawn_blocking(move || retrieve_diagrams(&sketch, &state.0.corpus, k, &state.0.config.matcher))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;
    let entries = hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            let slide_id = s.0.corpus.diagram(&h.diagram_id).map(|d| d.slide_id.clone()).unwrap_or_default();
            DiagramHitJson {
                rank: i + 1,
                image_url: format!("/diagram/{}.png", h.diagram_id),
                slide_url: format!("/slide/{slide_id}.png"),
                diagram_id: h.diagram_id,
                slide_id,
                score: h.score,
                good_matches: h.good_matches,
                shadow_default: i == 0,
            }
        })
        .collect();
    Ok(Json(RetrievalResponse { request: echo, entries, elapsed_ms: elapsed_ms(start) }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FontRequest {
    crop_png_base64: String,
}

#[derive(Debug, Serialize)]
struct FontResponse {
    label: usize,
    font_name: &'static str,
    confidence: f64,
    probabilities: Vec<f64>,
    elapsed_ms: f64,
}

async fn font_classify(State(s): State<AppState>, body: Bytes) -> Result<Json<FontResponse>, ApiError> {
    let start = Instant::now();
    let req: FontRequest = parse_body(&body)?;
    let crop = decode_png_base64(&req.crop_png_base64)?;
    if s.0.font.is_none() {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "ModelUnavailable", "no font model in this corpus"));
    }
    let state = s.clone();
    let pred = tokio::task::spawn_blocking(move || classify_font(&crop, state.0.font.as_ref().expect("checked")))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(|e| match e {
            FontError::EmptyGlyph => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "EmptyGlyph", e.to_string()),
            FontError::ModelUntrained => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "ModelUntrained", e.to_string())
            }
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", other.to_string()),
        })?;
    Ok(Json(FontResponse {
        label: pred.label,
        font_name: pred.font_name,
        confidence: pred.confidence,
        probabilities: pred.probabilities,
        elapsed_ms: elapsed_ms(start),
    }))
}

async fn png_file(path: Option<PathBuf>) -> Result<Response, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such image");
    let path = path.ok_or_else(not_found)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

fn png_id(file: &str) -> Option<&str> {
    file.strip_suffix(".png").filter(|id| !id.is_empty())
}

async fn slide_image(State(s): State<AppState>, UrlPath(file): UrlPath<String>) -> Result<Response, ApiError> {
    png_file(png_id(&file).and_then(|id| s.0.corpus.slide_image_path(id))).await
}

async fn diagram_image(State(s): State<AppState>, UrlPath(file): UrlPath<String>) -> Result<Response, ApiError> {
    png_file(png_id(&file).and_then(|id| s.0.corpus.diagram_image_path(id))).await
}
