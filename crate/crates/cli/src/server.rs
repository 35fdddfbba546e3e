//! HTTP API. Every body is JSON; errors are `{"error": {"code", "message"}}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use level_forge::caption::{grammar, parse_caption, parse_prompt, render, CaptionStyle};
use level_forge::concepts::{detect, ConceptKind};
use level_forge::generate::annotate;
use level_forge::project::{ProjectError, ProjectStore};
use level_forge::protocol::{GenRequest, ProtocolError, SceneGenerator};
use level_forge::score::{c_score, ScoreBreakdown};
use level_forge::solve::{batch_solvability, solve, MoveModel, SceneVerdict, SolveResult};
use level_forge::tiles::{TileGrid, SCENE_HEIGHT};

#[derive(Clone)]
pub struct AppState {
    pub generator: Arc<dyn SceneGenerator>,
    pub store: Arc<ProjectStore>,
    pub model: MoveModel,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::invalid(r.body_text())
    }
}

impl From<ProtocolError> for ApiError {
    fn from(e: ProtocolError) -> Self {
        let (status, code) = match &e {
            ProtocolError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            ProtocolError::Timeout(_) => (StatusCode::GATEWAY_TIMEOUT, "generator_timeout"),
            ProtocolError::ProtocolViolation(_) => (StatusCode::BAD_GATEWAY, "protocol_violation"),
            ProtocolError::GeneratorError { .. } => (StatusCode::BAD_GATEWAY, "generator_error"),
            ProtocolError::Unreachable(_) => (StatusCode::BAD_GATEWAY, "generator_unreachable"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        let (status, code) = match &e {
            ProjectError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ProjectError::Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
            ProjectError::Exists(_) => (StatusCode::CONFLICT, "exists"),
            ProjectError::InvalidId(_)
            | ProjectError::BadIndex { .. }
            | ProjectError::BadScene(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            ProjectError::Corrupt { .. } | ProjectError::Io { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    Ok(payload?.0)
}

fn scene_height(scene: &TileGrid) -> ApiResult<()> {
    if scene.height() != SCENE_HEIGHT {
        return Err(ApiError::invalid(format!(
            "scenes must be {SCENE_HEIGHT} rows tall, got {}",
            scene.height()
        )));
    }
    Ok(())
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/concepts", get(concepts))
        .route("/caption", post(caption))
        .route("/score", post(score))
        .route("/generate", post(generate))
        .route("/solve", post(solve_scenes))
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{id}", get(get_project).delete(delete_project))
        .route("/projects/{id}/scenes", post(append_scene))
        .route(
            "/projects/{id}/scenes/{index}",
            axum::routing::delete(delete_scene),
        )
        .route("/projects/{id}/scenes/{index}/move", post(move_scene))
        .route("/projects/{id}/export", get(export_project))
        .with_state(state)
}

async fn concepts() -> Json<level_forge::caption::Grammar> {
    Json(grammar())
}

#[derive(Debug, Deserialize)]
pub struct CaptionRequest {
    pub scene: TileGrid,
}

#[derive(Debug, Serialize)]
pub struct CaptionResponse {
    pub regular: String,
    pub absence: String,
    pub negative: String,
    pub counts: BTreeMap<ConceptKind, u32>,
}

async fn caption(
    payload: Result<Json<CaptionRequest>, JsonRejection>,
) -> ApiResult<Json<CaptionResponse>> {
    let req = body(payload)?;
    scene_height(&req.scene)?;
    let report = detect(&req.scene).map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok(Json(CaptionResponse {
        regular: render(&report, CaptionStyle::Regular).text(),
        absence: render(&report, CaptionStyle::Absence).text(),
        negative: render(&report, CaptionStyle::Negative).text(),
        counts: report.counts.into_iter().filter(|(_, n)| *n > 0).collect(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct ScoreRequest {
    pub prompt: String,
    #[serde(default)]
    pub scene: Option<TileGrid>,
    #[serde(default)]
    pub caption: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ScoreResponse {
    pub caption: String,
    pub c_score: f64,
    pub breakdown: ScoreBreakdown,
}

async fn score(
    payload: Result<Json<ScoreRequest>, JsonRejection>,
) -> ApiResult<Json<ScoreResponse>> {
    let req = body(payload)?;
    let prompt =
        parse_prompt(&req.prompt).map_err(|e| ApiError::invalid(format!("prompt: {e}")))?;
    let actual = match (req.scene, req.caption) {
        (Some(scene), None) => {
            scene_height(&scene)?;
            render(
                &detect(&scene).map_err(|e| ApiError::invalid(e.to_string()))?,
                CaptionStyle::Regular,
            )
        }
        (None, Some(text)) => parse_caption(&text, CaptionStyle::Regular)
            .map_err(|e| ApiError::invalid(format!("caption: {e}")))?,
        _ => {
            return Err(ApiError::invalid(
                "give exactly one of `scene` and `caption`",
            ))
        }
    };
    let breakdown = c_score(&prompt, &actual);
    Ok(Json(ScoreResponse {
        caption: actual.text(),
        c_score: breakdown.c_score,
        breakdown,
    }))
}

#[derive(Debug, Serialize)]
pub struct GeneratedScene {
    pub scene: TileGrid,
    pub caption: String,
    /// Present when the prompt parses under the caption grammar.
    pub c_score: Option<f64>,
    pub breakdown: Option<ScoreBreakdown>,
}

#[derive(Debug, Serialize)]
pub struct GenerateResponse {
    pub id: String,
    pub generator: String,
    pub scenes: Vec<GeneratedScene>,
}

async fn generate(
    State(state): State<AppState>,
    payload: Result<Json<GenRequest>, JsonRejection>,
) -> ApiResult<Json<GenerateResponse>> {
    let req = body(payload)?;
    req.validate()?;
    blocking(move || {
        let scenes = state.generator.generate(&req)?;
        let prompt = parse_prompt(&req.prompt).ok();
        let scenes = scenes
            .into_iter()
            .map(|scene| {
                let report = detect(&scene).map_err(|e| ApiError::invalid(e.to_string()))?;
                let caption = render(&report, CaptionStyle::Regular).text();
                let breakdown = match &prompt {
                    Some(p) => Some(
                        annotate(&scene, p)
                            .map_err(|e| ApiError::invalid(e.to_string()))?
                            .breakdown,
                    ),
                    None => None,
                };
                Ok(GeneratedScene {
                    c_score: breakdown.as_ref().map(|b| b.c_score),
                    scene,
                    caption,
                    breakdown,
                })
            })
            .collect::<ApiResult<Vec<_>>>()?;
        Ok(Json(GenerateResponse {
            id: req.id,
            generator: state.generator.describe(),
            scenes,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct SolveRequest {
    pub scenes: Vec<TileGrid>,
    #[serde(default)]
    pub model: Option<MoveModel>,
}

#[derive(Debug, Serialize)]
pub struct SolveResponse {
    /// All scenes side by side, played as one level.
    pub level: SolveResult,
    pub scenes: Vec<SceneVerdict>,
}

async fn solve_scenes(
    State(state): State<AppState>,
    payload: Result<Json<SolveRequest>, JsonRejection>,
) -> ApiResult<Json<SolveResponse>> {
    let req = body(payload)?;
    if req.scenes.is_empty() {
        return Err(ApiError::invalid("no scenes to solve"));
    }
    for s in &req.scenes {
        scene_height(s)?;
    }
    let model = req.model.unwrap_or(state.model);
    blocking(move || {
        let level = TileGrid::concat(&req.scenes).map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(Json(SolveResponse {
            level: solve(&level, &model),
            scenes: batch_solvability(&req.scenes, &model).per_scene,
        }))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateProject {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub name: String,
}

async fn list_projects(State(state): State<AppState>) -> ApiResult<Response> {
    let projects = state.store.list()?;
    Ok(Json(json!({ "projects": projects })).into_response())
}

async fn create_project(
    State(state): State<AppState>,
    payload: Result<Json<CreateProject>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    let project = state.store.create(req.id.as_deref(), &req.name)?;
    Ok((StatusCode::CREATED, Json(project)).into_response())
}

async fn get_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(state.store.get(&id)?).into_response())
}

#[derive(Debug, Default, Deserialize)]
pub struct RevisionQuery {
    #[serde(default)]
    pub revision: Option<u64>,
}

async fn delete_project(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<StatusCode> {
    state.store.delete(&id, q.revision)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
pub struct AppendScene {
    pub scene: TileGrid,
    #[serde(default)]
    pub revision: Option<u64>,
}

async fn append_scene(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<AppendScene>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    Ok(Json(state.store.append_scene(&id, req.scene, req.revision)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct MoveScene {
    pub to: usize,
    #[serde(default)]
    pub revision: Option<u64>,
}

async fn move_scene(
    State(state): State<AppState>,
    Path((id, index)): Path<(String, usize)>,
    payload: Result<Json<MoveScene>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(payload)?;
    Ok(Json(state.store.move_scene(&id, index, req.to, req.revision)?).into_response())
}

async fn delete_scene(
    State(state): State<AppState>,
    Path((id, index)): Path<(String, usize)>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Response> {
    Ok(Json(state.store.delete_scene(&id, index, q.revision)?).into_response())
}

async fn export_project(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let project = state.store.get(&id)?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        project.export(),
    )
        .into_response())
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
