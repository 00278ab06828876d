//! HTTP/JSON API over a single shared [`Engine`].
//!
//! All engine access goes through one lock. Mutations take it exclusively,
//! and a sleep cycle additionally raises a flag so that writes arriving
//! meanwhile are refused with 409 instead of queueing behind it.

mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use scm_core::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ErrorBody};

type ApiResult<T> = Result<Json<T>, ApiError>;

pub const DEFAULT_QUERY_K: usize = 5;
pub const DEFAULT_GRAPH_LIMIT: usize = 200;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub port: u16,
    pub snapshot_path: PathBuf,
    /// Origin allowed by CORS; any origin when unset.
    pub cors_origin: Option<String>,
    /// How often the sleep triggers are checked in the background.
    pub tick_interval: Option<Duration>,
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<RwLock<Engine>>,
    sleeping: Arc<AtomicBool>,
    snapshot_path: Arc<PathBuf>,
}

/// Clears the sleeping flag when dropped.
struct SleepGuard(Arc<AtomicBool>);

impl Drop for SleepGuard {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

impl AppState {
    pub fn new(engine: Engine, snapshot_path: impl Into<PathBuf>) -> Self {
        AppState {
            engine: Arc::new(RwLock::new(engine)),
            sleeping: Arc::new(AtomicBool::new(false)),
            snapshot_path: Arc::new(snapshot_path.into()),
        }
    }

    pub fn engine(&self) -> &Arc<RwLock<Engine>> {
        &self.engine
    }

    pub fn is_sleeping(&self) -> bool {
        self.sleeping.load(Ordering::SeqCst)
    }

    fn begin_sleep(&self) -> Result<SleepGuard, ApiError> {
        self.sleeping
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .map(|_| SleepGuard(self.sleeping.clone()))
            .map_err(|_| ApiError::busy())
    }

    fn ensure_awake(&self) -> Result<(), ApiError> {
        if self.is_sleeping() {
            Err(ApiError::busy())
        } else {
            Ok(())
        }
    }

    async fn write<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Engine) -> scm_core::Result<T> + Send + 'static,
    {
        let engine = self.engine.clone();
        tokio::task::spawn_blocking(move || f(&mut engine.write()))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(ApiError::from)
    }

    async fn read<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Engine) -> T + Send + 'static,
    {
        let engine = self.engine.clone();
        tokio::task::spawn_blocking(move || f(&engine.read()))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Runs a sleep cycle if a trigger is pending. Returns whether one ran.
    pub async fn tick(&self) -> Result<bool, ApiError> {
        let pending = self.read(|e| e.config().auto_sleep && e.pending_trigger().is_some()).await?;
        if !pending {
            return Ok(false);
        }
        let Ok(guard) = self.begin_sleep() else {
            return Ok(false);
        };
        let report = self.write(|e| e.tick()).await;
        drop(guard);
        Ok(report?.is_some())
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    if body.is_empty() {
        return serde_json::from_value(Value::Object(Default::default()))
            .map_err(|e| ApiError::bad_request(format!("request body: {e}")));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

fn parse_param<T: std::str::FromStr>(params: &HashMap<String, String>, key: &str, default: T) -> Result<T, ApiError> {
    match params.get(key) {
        None => Ok(default),
        Some(raw) => raw.trim().parse().map_err(|_| ApiError::bad_request(format!("{key}: cannot parse '{raw}'"))),
    }
}

#[derive(Deserialize)]
struct MessageRequest {
    text: String,
}

#[derive(Deserialize)]
struct SleepRequest {
    #[serde(default)]
    force: bool,
}

#[derive(Deserialize)]
struct PathRequest {
    #[serde(default)]
    path: Option<PathBuf>,
}

#[derive(Deserialize)]
struct AdvanceRequest {
    hours: f64,
}

#[derive(Serialize)]
struct StatsResponse {
    concepts: usize,
    edges: usize,
    contradicts: usize,
    wm_size: usize,
    wm_capacity: Option<usize>,
    entropy: f64,
    conflict_density: f64,
    last_sleep: i64,
    now: i64,
    sleeping: bool,
    counters: scm_core::self_model::Counters,
}

async fn health(State(s): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "sleeping": s.is_sleeping() }))
}

async fn post_message(State(s): State<AppState>, body: Bytes) -> ApiResult<scm_core::IngestReport> {
    let req: MessageRequest = parse_body(&body)?;
    s.ensure_awake()?;
    s.write(move |e| e.process_message(&req.text)).await.map(Json)
}

async fn get_query(
    State(s): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Vec<scm_core::RetrievalHit>> {
    let q = params.get("q").cloned().unwrap_or_default();
    if q.trim().is_empty() {
        return Err(ApiError::bad_request("q is required"));
    }
    let k = parse_param(&params, "k", DEFAULT_QUERY_K)?;
    s.ensure_awake()?;
    s.write(move |e| e.query(&q, k)).await.map(Json)
}

async fn post_sleep(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: SleepRequest = parse_body(&body)?;
    let guard = s.begin_sleep()?;
    let out = s
        .write(move |e| {
            if req.force {
                return e.sleep().map(Some);
            }
            match e.pending_trigger() {
                Some(t) => e.run_sleep_cycle(t).map(Some),
                None => Ok(None),
            }
        })
        .await;
    drop(guard);
    match out? {
        Some(report) => Ok(Json(serde_json::to_value(report).map_err(|e| ApiError::internal(e.to_string()))?)),
        None => Ok(Json(json!({ "slept": false, "reason": "no trigger pending" }))),
    }
}

async fn get_self(
    State(s): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<scm_core::SelfReport> {
    let q = params.get("q").cloned().unwrap_or_default();
    s.read(move |e| e.self_report(&q)).await.map(Json)
}

async fn get_stats(State(s): State<AppState>) -> ApiResult<StatsResponse> {
    let sleeping = s.is_sleeping();
    s.read(move |e| {
        let st = e.stats();
        StatsResponse {
            concepts: st.concepts,
            edges: st.edges,
            contradicts: st.contradicts,
            wm_size: st.wm_size,
            wm_capacity: st.wm_capacity,
            entropy: st.entropy,
            conflict_density: st.conflict_density,
            last_sleep: st.last_sleep.as_micros(),
            now: st.now.as_micros(),
            sleeping,
            counters: st.counters,
        }
    })
    .await
    .map(Json)
}

async fn get_graph(
    State(s): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<scm_core::GraphView> {
    let limit = parse_param(&params, "limit", DEFAULT_GRAPH_LIMIT)?;
    s.read(move |e| e.graph_view(limit)).await.map(Json)
}

async fn save_snapshot(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: PathRequest = parse_body(&body)?;
    let path = req.path.unwrap_or_else(|| s.snapshot_path.as_ref().clone());
    let shown = path.display().to_string();
    let bytes = s.write(move |e| e.save(&path)).await?;
    Ok(Json(json!({ "path": shown, "bytes": bytes })))
}

async fn load_snapshot(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: PathRequest = parse_body(&body)?;
    let path = req.path.unwrap_or_else(|| s.snapshot_path.as_ref().clone());
    let shown = path.display().to_string();
    s.ensure_awake()?;
    let concepts = s
        .write(move |e| {
            e.reload(&path)?;
            Ok(e.graph().len())
        })
        .await?;
    Ok(Json(json!({ "path": shown, "concepts": concepts })))
}

async fn advance_clock(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: AdvanceRequest = parse_body(&body)?;
    let simulated = s.read(|e| e.clock().is_simulated()).await?;
    if !simulated {
        return Err(ApiError::new(
            axum::http::StatusCode::NOT_FOUND,
            "not_found",
            "clock advance needs SCM_SIMULATED_CLOCK=true",
        ));
    }
    let now = s.write(move |e| e.advance_clock(req.hours)).await?;
    Ok(Json(json!({ "now": now.as_micros() })))
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => cors.allow_origin(origin),
        None => cors.allow_origin(Any),
    };
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/messages", post(post_message))
        .route("/v1/query", get(get_query))
        .route("/v1/sleep", post(post_sleep))
        .route("/v1/self", get(get_self))
        .route("/v1/stats", get(get_stats))
        .route("/v1/graph", get(get_graph))
        .route("/v1/snapshot/save", post(save_snapshot))
        .route("/v1/snapshot/load", post(load_snapshot))
        .route("/v1/clock/advance", post(advance_clock))
        .layer(cors)
        .with_state(state)
}

/// Binds, then serves until ctrl-c. Binding failures are returned.
pub async fn serve(engine: Engine, opts: ServeOptions) -> std::io::Result<()> {
    let state = AppState::new(engine, opts.snapshot_path.clone());
    let app = router(state.clone(), opts.cors_origin.as_deref());
    let addr = SocketAddr::from(([0, 0, 0, 0], opts.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");

    if let Some(every) = opts.tick_interval {
        let ticker = state.clone();
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(every);
            loop {
                interval.tick().await;
                if let Err(e) = ticker.tick().await {
                    tracing::warn!(detail = %e.body.detail, "background sleep failed");
                }
            }
        });
    }

    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
