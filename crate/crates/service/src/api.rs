use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medcourse_core::clock::Clock;
use medcourse_core::evalkit::AnnotationRecord;
use medcourse_core::exam::Letter;
use medcourse_core::scheduler::Grade;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::engine::{AnnotationIntakeError, SessionError};
use crate::runtime::{Runtime, ServiceError};

#[derive(Clone)]
pub struct AppState {
    runtime: Arc<Mutex<Runtime>>,
    clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(runtime: Runtime, clock: Arc<dyn Clock>) -> Self {
        Self {
            runtime: Arc::new(Mutex::new(runtime)),
            clock,
        }
    }

    pub fn runtime(&self) -> MutexGuard<'_, Runtime> {
        // A panic while holding the lock cannot leave half-applied events:
        // commit writes the log before touching memory.
        self.runtime.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::Session(SessionError::OutOfOrder { .. }) => StatusCode::CONFLICT,
            ServiceError::Session(SessionError::Clock(_)) => StatusCode::CONFLICT,
            ServiceError::Session(SessionError::UnknownItem(_)) => StatusCode::NOT_FOUND,
            ServiceError::Annotation(AnnotationIntakeError::UnknownReport(_)) => StatusCode::NOT_FOUND,
            ServiceError::Annotation(AnnotationIntakeError::Invalid(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Io(_) | ServiceError::Data(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body so that malformed input gets the same error shape as
/// every other failure.
fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

#[derive(Serialize)]
struct CourseSummary {
    course_id: String,
    specialty: String,
    session_years: Vec<String>,
    item_count: usize,
    item_ids: Vec<String>,
}

impl From<&crate::course::Course> for CourseSummary {
    fn from(c: &crate::course::Course) -> Self {
        Self {
            course_id: c.course_id.clone(),
            specialty: c.specialty.clone(),
            session_years: c.session_years.clone(),
            item_count: c.item_ids.len(),
            item_ids: c.item_ids.clone(),
        }
    }
}

#[derive(Deserialize)]
struct AnswerBody {
    letter: Letter,
}

#[derive(Deserialize)]
struct GradeBody {
    grade: Grade,
}

async fn list_courses(State(s): State<AppState>) -> Json<Vec<CourseSummary>> {
    Json(s.runtime().engine().courses().map(CourseSummary::from).collect())
}

async fn get_course(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CourseSummary>> {
    let rt = s.runtime();
    rt.engine()
        .course(&id)
        .map(|c| Json(c.into()))
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown course {id}")))
}

async fn next(State(s): State<AppState>, Path(user): Path<String>) -> ApiResult<Response> {
    let now = s.clock.now();
    Ok(match s.runtime().next(&user, now)? {
        Some(p) => Json(p).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn answer(
    State(s): State<AppState>,
    Path((user, item)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: AnswerBody = parse_body(&body)?;
    let now = s.clock.now();
    Ok(Json(s.runtime().answer(&user, &item, body.letter, now)?).into_response())
}

async fn grade(
    State(s): State<AppState>,
    Path((user, item)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: GradeBody = parse_body(&body)?;
    let now = s.clock.now();
    Ok(Json(s.runtime().grade(&user, &item, body.grade, now)?).into_response())
}

async fn list_reports(State(s): State<AppState>) -> Json<Vec<String>> {
    Json(s.runtime().engine().report_ids().cloned().collect())
}

async fn get_report(State(s): State<AppState>, Path(qid): Path<String>) -> ApiResult<Response> {
    let rt = s.runtime();
    rt.engine()
        .report(&qid)
        .map(|r| Json(r).into_response())
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no report for {qid}")))
}

async fn post_annotation(
    State(s): State<AppState>,
    Path(qid): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let record: AnnotationRecord = parse_body(&body)?;
    s.runtime().submit_annotation(&qid, record)?;
    Ok(Json(json!({ "stored": true })).into_response())
}

async fn iaa_summary(State(s): State<AppState>) -> Response {
    Json(s.runtime().engine().iaa_view()).into_response()
}

/// All endpoints, mounted under `/api/v1`.
pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/courses", get(list_courses))
        .route("/courses/{id}", get(get_course))
        .route("/users/{id}/next", post(next))
        .route("/users/{id}/items/{item}/answer", post(answer))
        .route("/users/{id}/items/{item}/grade", post(grade))
        .route("/reports", get(list_reports))
        .route("/reports/{qid}", get(get_report))
        .route("/reports/{qid}/annotations", post(post_annotation))
        .route("/iaa/summary", get(iaa_summary));
    Router::new().nest("/api/v1", api).with_state(state)
}

/// Serves the API on `addr` until Ctrl-C, then writes a final snapshot.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}/api/v1", listener.local_addr()?);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    state.runtime().snapshot().map_err(std::io::Error::other)
}
