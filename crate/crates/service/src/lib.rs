//! HTTP API over the abaclab engine.
//!
//! All routes live under `/api/policies`. Bodies and responses are JSON
//! unless noted; errors are `{"error": "..."}` with a 4xx status.
//!
//! | route | |
//! |---|---|
//! | `POST /api/policies` | upload `.abac` text, multipart `file`, or canonical JSON |
//! | `GET /api/policies` | list with statistics |
//! | `GET /api/policies/{id}` | summary |
//! | `DELETE /api/policies/{id}` | remove |
//! | `GET /api/policies/{id}/stats` | statistics |
//! | `POST /api/policies/{id}/eval` | decision or permission list |
//! | `POST /api/policies/{id}/check` | batch CSV check, CSV out |
//! | `GET/POST /api/policies/{id}/coverage` | per-rule coverage, own or external rules |
//! | `GET /api/policies/{id}/heatmap` | rule × attribute matrix |
//! | `GET /api/policies/{id}/resource-access` | top and bottom resources |
//! | `POST /api/policies/{id}/logs` | synthetic log CSV |
//! | `GET /api/policies/{id}/validate` | warnings |
//! | `GET /api/policies/{id}/export?format=csv\|canonical\|abac` | export |

mod error;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use abaclab::analytics::{attribute_usage, external_rule_coverage, resource_access, rule_coverage};
use abaclab::batch::{check_requests, check_rows_to_csv, parse_requests};
use abaclab::exchange::{export_canonical, import_canonical, to_csv};
use abaclab::loggen::{generate_logs, logs_to_csv, LogConfig};
use abaclab::policy::validate_policy;
use abaclab::{evaluate, parse_policy, query, serialize_policy, Policy};

pub use error::ApiError;
pub use store::{slug, Entry, PolicyStore, Summary};

pub const DEFAULT_EVAL_LIMIT: usize = 1000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Request bodies above this size get 413.
    pub max_upload_bytes: usize,
    /// Upper bound on `n` for `/logs`.
    pub max_log_entries: usize,
    /// Allowed CORS origin; `None` allows any.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_upload_bytes: 16 * 1024 * 1024,
            max_log_entries: 1_000_000,
            cors_origin: None,
        }
    }
}

#[derive(Clone)]
struct AppState {
    store: Arc<PolicyStore>,
    config: Arc<ServiceConfig>,
}

pub fn router(store: Arc<PolicyStore>, config: ServiceConfig) -> Router {
    let cors = match &config.cors_origin {
        Some(origin) => match origin.parse::<HeaderValue>() {
            Ok(v) => CorsLayer::new().allow_origin(v),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    let limit = config.max_upload_bytes;
    let state = AppState {
        store,
        config: Arc::new(config),
    };
    Router::new()
        .route("/api/policies", get(list).post(upload))
        .route("/api/policies/{id}", get(summary).delete(remove))
        .route("/api/policies/{id}/stats", get(stats))
        .route("/api/policies/{id}/eval", post(eval))
        .route("/api/policies/{id}/check", post(check))
        .route("/api/policies/{id}/coverage", get(coverage).post(external_coverage))
        .route("/api/policies/{id}/heatmap", get(heatmap))
        .route("/api/policies/{id}/resource-access", get(resources))
        .route("/api/policies/{id}/logs", post(logs))
        .route("/api/policies/{id}/validate", get(validate))
        .route("/api/policies/{id}/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: Arc<PolicyStore>, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Entry>> {
    state.store.get(id).ok_or_else(|| ApiError::not_found(id))
}

fn csv_response(body: String) -> Response {
    (
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        body,
    )
        .into_response()
}

struct Upload {
    text: Vec<u8>,
    filename: Option<String>,
    json: bool,
}

/// Raw body, or the first file field of a multipart form.
async fn read_upload(req: Request) -> ApiResult<Upload> {
    let content_type = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase();
    if content_type.starts_with("multipart/form-data") {
        let mut form = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        while let Some(field) = form
            .next_field()
            .await
            .map_err(|e| ApiError::new(e.status(), e.body_text()))?
        {
            if field.name() != Some("file") && field.file_name().is_none() {
                continue;
            }
            let filename = field.file_name().map(str::to_string);
            let json = field
                .content_type()
                .is_some_and(|t| t.starts_with("application/json"))
                || filename.as_deref().is_some_and(|f| f.ends_with(".json"));
            let data = field
                .bytes()
                .await
                .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
            return Ok(Upload {
                text: data.to_vec(),
                filename,
                json,
            });
        }
        return Err(ApiError::bad_request("multipart form has no `file` field"));
    }
    let body = Bytes::from_request(req, &())
        .await
        .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
    Ok(Upload {
        text: body.to_vec(),
        filename: None,
        json: content_type.starts_with("application/json"),
    })
}

fn utf8(bytes: Vec<u8>) -> ApiResult<String> {
    String::from_utf8(bytes).map_err(|_| ApiError::bad_request("body is not valid UTF-8"))
}

async fn list(State(state): State<AppState>) -> Json<Vec<Summary>> {
    Json(state.store.list())
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

#[derive(Serialize)]
struct Uploaded {
    id: String,
    name: String,
    stats: abaclab::PolicyStats,
    warnings: Vec<String>,
}

async fn upload(
    State(state): State<AppState>,
    Query(q): Query<UploadQuery>,
    req: Request,
) -> ApiResult<(StatusCode, Json<Uploaded>)> {
    let up = read_upload(req).await?;
    let stem = up
        .filename
        .as_deref()
        .map(|f| f.rsplit(['/', '\\']).next().unwrap_or(f))
        .map(|f| f.split('.').next().unwrap_or(f).to_string());
    let store = state.store.clone();
    blocking(move || {
        let policy: Policy = if up.json {
            import_canonical(&up.text)?
        } else {
            let name = q.name.clone().or(stem.clone()).unwrap_or_else(|| "policy".into());
            parse_policy(&utf8(up.text)?, &name)?
        };
        let name = q.name.or(stem).unwrap_or_else(|| policy.name().to_string());
        let warnings = validate_policy(&policy, false)
            .into_iter()
            .map(|d| d.to_string())
            .collect();
        let entry = store
            .insert(&name, policy)
            .map_err(|e| ApiError::internal(format!("persisting policy: {e}")))?;
        Ok((
            StatusCode::CREATED,
            Json(Uploaded {
                id: entry.id.clone(),
                name: entry.policy.name().to_string(),
                stats: entry.stats,
                warnings,
            }),
        ))
    })
    .await?
}

async fn summary(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Summary>> {
    Ok(Json(lookup(&state, &id)?.summary()))
}

async fn remove(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match state.store.remove(&id) {
        Ok(true) => Ok(StatusCode::NO_CONTENT),
        Ok(false) => Err(ApiError::not_found(&id)),
        Err(e) => Err(ApiError::internal(format!("removing policy file: {e}"))),
    }
}

async fn stats(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<abaclab::PolicyStats>> {
    Ok(Json(lookup(&state, &id)?.stats))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRequest {
    user: Option<String>,
    resource: Option<String>,
    action: Option<String>,
    limit: Option<usize>,
}

#[derive(Serialize)]
struct PermissionList {
    total: usize,
    truncated: bool,
    permissions: Vec<abaclab::Permission>,
}

fn blank_to_none(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

async fn eval(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let req: EvalRequest = if body.iter().all(u8::is_ascii_whitespace) {
        EvalRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let user = blank_to_none(req.user);
    let resource = blank_to_none(req.resource);
    let action = blank_to_none(req.action);
    let limit = req.limit.unwrap_or(DEFAULT_EVAL_LIMIT);
    blocking(move || {
        let p = &entry.policy;
        if let (Some(u), Some(r), Some(a)) = (&user, &resource, &action) {
            return Ok(Json(evaluate(p, u, r, a)?).into_response());
        }
        let mut perms = query(p, user.as_deref(), resource.as_deref(), action.as_deref())?;
        let total = perms.len();
        perms.truncate(limit);
        Ok(Json(PermissionList {
            total,
            truncated: total > perms.len(),
            permissions: perms,
        })
        .into_response())
    })
    .await?
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn check(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
    req: Request,
) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let text = utf8(read_upload(req).await?.text)?;
    blocking(move || {
        let reqs = parse_requests(&text)?;
        let rows = check_requests(&entry.policy, &reqs);
        match q.format.as_deref() {
            Some("json") => Ok(Json(rows).into_response()),
            None | Some("csv") => Ok(csv_response(check_rows_to_csv(&rows))),
            Some(other) => Err(ApiError::bad_request(format!("unknown format `{other}`"))),
        }
    })
    .await?
}

async fn coverage(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    blocking(move || Json(rule_coverage(&entry.policy)).into_response()).await
}

async fn external_coverage(
    State(state): State<AppState>,
    Path(id): Path<String>,
    req: Request,
) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let text = utf8(read_upload(req).await?.text)?;
    blocking(move || Ok(Json(external_rule_coverage(&entry.policy, &text)?).into_response())).await?
}

async fn heatmap(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    blocking(move || Json(attribute_usage(&entry.policy)).into_response()).await
}

async fn resources(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    blocking(move || Json(resource_access(&entry.policy)).into_response()).await
}

#[derive(Debug, Deserialize)]
struct LogsQuery {
    truth: Option<bool>,
}

async fn logs(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<LogsQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let cfg: LogConfig =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if cfg.n > state.config.max_log_entries {
        return Err(ApiError::unprocessable(format!(
            "n = {} exceeds the limit of {}",
            cfg.n, state.config.max_log_entries
        )));
    }
    blocking(move || {
        let entries = generate_logs(&entry.policy, &cfg)?;
        Ok(csv_response(logs_to_csv(&entries, q.truth.unwrap_or(false))))
    })
    .await?
}

async fn validate(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    blocking(move || Json(validate_policy(&entry.policy, true)).into_response()).await
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let entry = lookup(&state, &id)?;
    let p = &entry.policy;
    match q.format.as_deref() {
        Some("canonical") => Ok((
            [(header::CONTENT_TYPE, "application/json")],
            export_canonical(p),
        )
            .into_response()),
        Some("csv") => {
            let out = to_csv(p);
            Ok(Json(serde_json::json!({
                "users": out.users,
                "resources": out.resources,
                "rules": out.rules,
            }))
            .into_response())
        }
        Some("abac") => Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            serialize_policy(p),
        )
            .into_response()),
        Some(other) => Err(ApiError::bad_request(format!(
            "unknown format `{other}` (expected csv, canonical or abac)"
        ))),
        None => Err(ApiError::bad_request("missing `format` (csv, canonical or abac)")),
    }
}
