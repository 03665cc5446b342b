//! `/api/v1` routes.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use faq_assist::class::{CandidateClass, FaqId};
use faq_assist::corpus::FaqItem;
use faq_assist::project::Project;
use faq_assist::retrieval::RankedSuggestion;
use faq_assist::session::{ChatMessage, Role, SessionError, SessionSettings, SessionState};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::state::{AppState, CommandError};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/utterances", post(post_utterance))
        .route("/sessions/{id}/slots/{n}/discard", post(discard))
        .route("/sessions/{id}/slots/{n}/copy", post(copy))
        .route("/sessions/{id}/slots/{n}/info", get(info))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/projects", get(projects))
        .route("/sessions/{id}/settings", put(settings));
    Router::new().nest("/api/v1", api).with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<CommandError> for ApiError {
    fn from(e: CommandError) -> Self {
        let status = match &e {
            CommandError::UnknownSession(_) => StatusCode::NOT_FOUND,
            CommandError::Session(s) => match s {
                SessionError::InvalidSlot(_) | SessionError::EmptyText => StatusCode::BAD_REQUEST,
                SessionError::EmptySlot(_) => StatusCode::CONFLICT,
                SessionError::UnknownFaq(_) => StatusCode::UNPROCESSABLE_ENTITY,
                SessionError::OutOfOrder { .. } | SessionError::Ranking(_) => {
                    StatusCode::INTERNAL_SERVER_ERROR
                }
            },
            CommandError::Log { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct SuggestionView {
    pub class: CandidateClass,
    pub theme: Option<String>,
    pub percent: u8,
}

/// A visible card. Slots hold FAQ suggestions only.
#[derive(Debug, Serialize, Deserialize)]
pub struct SlotView {
    pub class: CandidateClass,
    pub theme: String,
    pub question: String,
    pub percent: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceResponse {
    pub suggestions: Vec<SuggestionView>,
    pub slots: [Option<SlotView>; 2],
    pub counter: i64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub messages: Vec<ChatMessage>,
    pub suggestions: Vec<SuggestionView>,
    pub slots: [Option<SlotView>; 2],
    pub counter: i64,
    pub settings: SessionSettings,
}

#[derive(Debug, Deserialize)]
pub struct UtteranceRequest {
    pub sender: String,
    pub text: String,
    pub role: Role,
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub search_terms: String,
    pub faq_id: FaqId,
}

fn suggestion_view(state: &AppState, s: &RankedSuggestion) -> SuggestionView {
    SuggestionView {
        class: s.class,
        theme: s
            .class
            .faq_id()
            .and_then(|id| state.faqs.get(id))
            .map(|f| f.theme.clone()),
        percent: s.percent,
    }
}

fn slot_views(state: &AppState, session: &SessionState) -> [Option<SlotView>; 2] {
    session.slots.map(|slot| {
        let s = slot?;
        let item = state.faqs.get(s.class.faq_id()?)?;
        Some(SlotView {
            class: s.class,
            theme: item.theme.clone(),
            question: item.question.clone(),
            percent: s.percent,
        })
    })
}

async fn health(State(state): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "ranker": state.ranker.name(),
        "faqs": state.faqs.len(),
        "sessions": state.session_count(),
    }))
}

async fn create_session(State(state): State<Shared>) -> (StatusCode, Json<serde_json::Value>) {
    let id = state.create_session();
    (StatusCode::CREATED, Json(json!({ "session_id": id })))
}

async fn get_session(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<SessionView> {
    let view = state.read(&id, |s| {
        let st = s.state();
        SessionView {
            session_id: st.id.clone(),
            messages: st.messages.clone(),
            suggestions: st
                .ranking
                .iter()
                .map(|r| suggestion_view(&state, r))
                .collect(),
            slots: slot_views(&state, st),
            counter: st.counter,
            settings: st.settings,
        }
    })?;
    Ok(Json(view))
}

async fn post_utterance(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<UtteranceRequest>,
) -> ApiResult<UtteranceResponse> {
    let out = state.command(&id, |session, app, at| {
        session.post_utterance(&req.sender, &req.text, req.role, app.ranker.as_ref(), at)?;
        let st = session.state();
        // The ranking is empty while AI support is off.
        Ok(UtteranceResponse {
            suggestions: st.ranking.iter().map(|r| suggestion_view(app, r)).collect(),
            slots: slot_views(app, st),
            counter: st.counter,
        })
    })?;
    Ok(Json(out))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiscardResponse {
    pub slots: [Option<SlotView>; 2],
    pub counter: i64,
}

async fn discard(
    State(state): State<Shared>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<DiscardResponse> {
    let out = state.command(&id, |session, app, at| {
        session.discard(n, at)?;
        let st = session.state();
        Ok(DiscardResponse {
            slots: slot_views(app, st),
            counter: st.counter,
        })
    })?;
    Ok(Json(out))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CopyResponse {
    pub answer_text: String,
    pub counter: i64,
}

async fn copy(
    State(state): State<Shared>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<CopyResponse> {
    let out = state.command(&id, |session, app, at| {
        let answer_text = session.copy_to_chat(n, &app.faqs, at)?;
        Ok(CopyResponse {
            answer_text,
            counter: session.state().counter,
        })
    })?;
    Ok(Json(out))
}

async fn info(
    State(state): State<Shared>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<FaqItem> {
    let item = state.command(&id, |session, app, at| {
        session.get_more_info(n, &app.faqs, at)
    })?;
    Ok(Json(item))
}

async fn feedback(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<FeedbackRequest>,
) -> ApiResult<serde_json::Value> {
    state.command(&id, |session, app, at| {
        session
            .submit_feedback(&req.search_terms, req.faq_id, &app.faqs, at)
            .map(|_| ())
    })?;
    Ok(Json(json!({ "ok": true })))
}

async fn projects(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Vec<Project>> {
    let matched = state.read(&id, |s| {
        s.state()
            .match_projects(&state.projects)
            .into_iter()
            .cloned()
            .collect()
    })?;
    Ok(Json(matched))
}

async fn settings(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<SessionSettings>,
) -> ApiResult<serde_json::Value> {
    state.command(&id, |session, _, at| {
        session.update_settings(req, at);
        Ok(())
    })?;
    Ok(Json(json!({ "ok": true })))
}
