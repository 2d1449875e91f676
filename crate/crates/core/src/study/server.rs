use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::engine::{FinalizeRequest, Inclusion, StudyEngine};
use super::StudyError;
use crate::condition::Modality;

pub const ADMIN_HEADER: &str = "x-admin-token";

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<StudyEngine>,
    /// Empty disables the export endpoints.
    pub admin_token: String,
    pub audio_dir: PathBuf,
    /// Optional directory of a built participant UI, served at `/`.
    pub ui_dir: Option<PathBuf>,
}

pub fn router(state: AppState) -> Router {
    let mut app = Router::new()
        .route("/api/study", get(study_info))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/pages/{page}", get(page))
        .route("/api/sessions/{id}/rankings", post(submit_ranking))
        .route("/api/sessions/{id}/finalize", post(finalize))
        .route("/api/export", get(export_rows))
        .route("/api/export/exclusions", get(export_exclusions))
        .route("/audio/{*file}", get(audio));
    if state.ui_dir.is_some() {
        app = app
            .route("/", get(ui_index))
            .route("/{*file}", get(ui_file));
    }
    app.with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "study service listening on http://{}",
        listener.local_addr()?
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct ApiError(StatusCode, String);

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        let status = match &e {
            StudyError::NotFound(_) | StudyError::InvalidPage(_) => StatusCode::NOT_FOUND,
            StudyError::ConsentRequired => StatusCode::FORBIDDEN,
            StudyError::InvalidResponse(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StudyError::AlreadySubmitted(_)
            | StudyError::AlreadyFinalized
            | StudyError::Incomplete(_) => StatusCode::CONFLICT,
            StudyError::Config(_) | StudyError::Log { .. } | StudyError::Io { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn study_info(State(s): State<AppState>) -> Json<serde_json::Value> {
    let check = &s.engine.config().attention_check;
    Json(json!({
        "pages": 2,
        "attention_check": { "prompt": check.prompt, "options": check.options },
    }))
}

#[derive(Deserialize)]
struct CreateBody {
    #[serde(default)]
    consent: bool,
}

#[derive(Serialize)]
struct CreateReply {
    session_id: String,
    modality_order: [Modality; 2],
}

async fn create_session(
    State(s): State<AppState>,
    Json(body): Json<CreateBody>,
) -> ApiResult<(StatusCode, Json<CreateReply>)> {
    let session = s.engine.create_session(body.consent)?;
    Ok((
        StatusCode::CREATED,
        Json(CreateReply {
            session_id: session.id,
            modality_order: session.modality_order,
        }),
    ))
}

async fn page(
    State(s): State<AppState>,
    UrlPath((id, page)): UrlPath<(String, u8)>,
) -> ApiResult<Json<serde_json::Value>> {
    let view = s.engine.page(&id, page)?;
    let items: Vec<_> = view
        .items
        .iter()
        .map(|item| {
            json!({
                "stimulus_id": item.stimulus_id,
                "audio_url": format!("/audio/{}", item.audio),
            })
        })
        .collect();
    Ok(Json(json!({
        "page": view.page,
        "modality": view.modality,
        "items": items,
    })))
}

#[derive(Deserialize)]
struct RankingBody {
    page: u8,
    ordered_ids: Vec<String>,
}

async fn submit_ranking(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<RankingBody>,
) -> ApiResult<StatusCode> {
    s.engine.submit_ranking(&id, body.page, body.ordered_ids)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn finalize(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<FinalizeRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(match s.engine.finalize(&id, body)? {
        Inclusion::Included => json!({ "included": true }),
        Inclusion::Excluded(reason) => json!({ "included": false, "reason": reason }),
    }))
}

fn authorize(s: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    let given = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
    if s.admin_token.is_empty() || given != Some(s.admin_token.as_str()) {
        return Err(ApiError(
            StatusCode::UNAUTHORIZED,
            "missing or wrong admin token".into(),
        ));
    }
    Ok(())
}

fn csv_response(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

async fn export_rows(State(s): State<AppState>, headers: HeaderMap) -> ApiResult<Response> {
    authorize(&s, &headers)?;
    Ok(csv_response(s.engine.export().rows_csv()))
}

async fn export_exclusions(State(s): State<AppState>, headers: HeaderMap) -> ApiResult<Response> {
    authorize(&s, &headers)?;
    Ok(csv_response(s.engine.export().exclusions_csv()))
}

/// Joins a request path onto `root`, refusing anything that could escape it.
fn confined(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel.as_os_str().is_empty() || rel.to_string_lossy().contains('\\') {
        return None;
    }
    rel.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then(|| root.join(rel))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "mp3" => "audio/mpeg",
        "wav" => "audio/wav",
        "ogg" | "oga" => "audio/ogg",
        "flac" => "audio/flac",
        "mid" | "midi" => "audio/midi",
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        _ => "application/octet-stream",
    }
}

async fn static_file(root: &Path, rel: &str) -> ApiResult<Response> {
    let not_found = || ApiError(StatusCode::NOT_FOUND, format!("no such file `{rel}`"));
    let path = confined(root, rel).ok_or_else(not_found)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    Ok((
        [(header::CONTENT_TYPE, content_type(&path))],
        Body::from(bytes),
    )
        .into_response())
}

async fn audio(State(s): State<AppState>, UrlPath(file): UrlPath<String>) -> ApiResult<Response> {
    static_file(&s.audio_dir, &file).await
}

async fn ui_index(State(s): State<AppState>) -> ApiResult<Response> {
    let root = s
        .ui_dir
        .as_deref()
        .expect("route only mounted with a UI dir");
    static_file(root, "index.html").await
}

async fn ui_file(State(s): State<AppState>, UrlPath(file): UrlPath<String>) -> ApiResult<Response> {
    let root = s
        .ui_dir
        .as_deref()
        .expect("route only mounted with a UI dir");
    match static_file(root, &file).await {
        Ok(r) => Ok(r),
        // Client-side routes fall back to the app shell.
        Err(_) if !file.contains('.') => static_file(root, "index.html").await,
        Err(e) => Err(e),
    }
}
