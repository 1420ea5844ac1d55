use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::debug;

use storygraph_core::graph::Scope;
use storygraph_core::story::{Project, Stakeholder, StoryFormat};
use storygraph_core::{ProjectId, StoryId, UserId};

use crate::hub::{ClientFrame, Frame};
use crate::service::{Service, ServiceError};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let Some(text) = self.rejected_text() {
            body["text"] = json!(text);
        }
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

fn bad(message: impl Into<String>) -> ServiceError {
    ServiceError::BadRequest(message.into())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{p}", get(get_project))
        .route("/projects/{p}/members", post(join))
        .route("/projects/{p}/stories", post(create_story).get(list_stories))
        .route("/stories/{id}", put(edit_story).delete(delete_story))
        .route("/projects/{p}/import", post(import))
        .route("/projects/{p}/export", get(export))
        .route("/projects/{p}/suggestions", post(request_suggestions).get(get_suggestions))
        .route("/suggestions/{id}/feedback", post(feedback))
        .route("/projects/{p}/graph", get(graph))
        .route("/projects/{p}/metrics", get(metrics))
        .route("/projects/{p}/chat", post(chat).get(chat_history))
        .route("/projects/{p}/channel", get(channel))
        .with_state(service)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct MemberBody {
    id: UserId,
    display_name: String,
}

impl From<MemberBody> for Stakeholder {
    fn from(m: MemberBody) -> Self {
        Stakeholder {
            id: m.id,
            display_name: m.display_name,
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateProject {
    id: ProjectId,
    name: String,
    #[serde(default)]
    scenario_text: String,
    members: Vec<MemberBody>,
}

async fn create_project(State(s): State<Arc<Service>>, Json(body): Json<CreateProject>) -> ApiResult<impl IntoResponse> {
    let project = Project {
        id: body.id,
        name: body.name,
        scenario_text: body.scenario_text,
        member_ids: Default::default(),
    };
    let founders = body.members.into_iter().map(Into::into).collect();
    Ok((StatusCode::CREATED, Json(s.create_project(project, founders)?)))
}

async fn get_project(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.project(&p)?))
}

async fn join(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Json(body): Json<MemberBody>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.join(&p, body.into())?))
}

#[derive(Deserialize)]
struct StoryBody {
    user: UserId,
    text: String,
}

async fn create_story(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Json(body): Json<StoryBody>) -> ApiResult<impl IntoResponse> {
    Ok((StatusCode::CREATED, Json(s.create_story(&p, &body.user, &body.text)?)))
}

async fn edit_story(State(s): State<Arc<Service>>, Path(id): Path<StoryId>, Json(body): Json<StoryBody>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.edit_story(&id, &body.user, &body.text)?))
}

#[derive(Deserialize)]
struct UserQuery {
    user: UserId,
}

async fn delete_story(State(s): State<Arc<Service>>, Path(id): Path<StoryId>, Query(q): Query<UserQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.delete_story(&id, &q.user)?))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ListQuery {
    author: Option<UserId>,
    #[serde(default)]
    include_deleted: bool,
    format: Option<String>,
}

async fn list_stories(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<ListQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.list_stories(&p, q.author.as_ref(), q.include_deleted)?))
}

fn parse_format(raw: Option<&str>) -> ApiResult<StoryFormat> {
    raw.unwrap_or("json").parse().map_err(bad)
}

#[derive(Deserialize)]
struct ImportQuery {
    user: UserId,
    format: Option<String>,
}

async fn import(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<ImportQuery>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let format = parse_format(q.format.as_deref())?;
    Ok(Json(s.import(&p, &q.user, format, &body)?))
}

async fn export(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<ListQuery>) -> ApiResult<impl IntoResponse> {
    let format = parse_format(q.format.as_deref())?;
    let bytes = s.export(&p, q.author.as_ref(), format, q.include_deleted)?;
    let content_type = match format {
        StoryFormat::Json => "application/json",
        StoryFormat::Csv => "text/csv; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], bytes))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SuggestionQuery {
    user: UserId,
    #[serde(default)]
    include_hidden: bool,
}

async fn request_suggestions(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<SuggestionQuery>) -> ApiResult<impl IntoResponse> {
    let set = s.request_suggestions(&p, &q.user).await?;
    Ok(Json(set))
}

async fn get_suggestions(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<SuggestionQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.suggestions(&p, &q.user, q.include_hidden)?))
}

#[derive(Deserialize)]
struct FeedbackBody {
    user: UserId,
    #[serde(default = "yes")]
    disliked: bool,
}

fn yes() -> bool {
    true
}

async fn feedback(State(s): State<Arc<Service>>, Path(id): Path<String>, Json(body): Json<FeedbackBody>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.feedback(&id, &body.user, body.disliked)?))
}

#[derive(Deserialize)]
struct GraphQuery {
    scope: Option<String>,
    user: Option<UserId>,
    format: Option<String>,
}

async fn graph(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<GraphQuery>) -> ApiResult<Response> {
    let scope = match q.scope.as_deref().unwrap_or("project") {
        "project" => Scope::project(p),
        "user" => Scope::user(q.user.ok_or_else(|| bad("scope=user needs a user parameter"))?, p),
        other => return Err(bad(format!("unknown scope {other:?}"))),
    };
    let view = s.graph(&scope)?;
    Ok(match q.format.as_deref().unwrap_or("json") {
        "json" => Json(view.export()).into_response(),
        "dot" => ([(header::CONTENT_TYPE, "text/vnd.graphviz")], view.to_dot()).into_response(),
        other => return Err(bad(format!("unknown graph format {other:?}"))),
    })
}

async fn metrics(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.metrics(&p)?))
}

#[derive(Deserialize)]
struct ChatBody {
    user: UserId,
    body: String,
}

#[derive(Serialize)]
struct ChatReceipt {
    message: crate::state::ChatMessage,
    delivered: usize,
}

async fn chat(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Json(body): Json<ChatBody>) -> ApiResult<impl IntoResponse> {
    let (message, delivered) = s.chat(&p, &body.user, &body.body)?;
    Ok((StatusCode::CREATED, Json(ChatReceipt { message, delivered })))
}

#[derive(Deserialize)]
struct ChannelQuery {
    user: UserId,
    #[serde(default)]
    since: u64,
}

async fn chat_history(State(s): State<Arc<Service>>, Path(p): Path<ProjectId>, Query(q): Query<ChannelQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.chat_history(&p, &q.user, q.since)?))
}

async fn channel(
    State(s): State<Arc<Service>>,
    Path(p): Path<ProjectId>,
    Query(q): Query<ChannelQuery>,
    ws: WebSocketUpgrade,
) -> ApiResult<Response> {
    s.require_member(&p, &q.user)?;
    Ok(ws.on_upgrade(move |socket| run_channel(s, p, q.user, q.since, socket)))
}

async fn run_channel(s: Arc<Service>, project: ProjectId, user: UserId, since: u64, socket: WebSocket) {
    let Ok(mut registration) = s.connect(&project, &user, since) else {
        return;
    };
    let (mut sink, mut stream) = socket.split();
    loop {
        tokio::select! {
            frame = registration.rx.recv() => {
                // None means a newer channel replaced this one
                let Some(frame) = frame else { break };
                let text = serde_json::to_string(&frame).expect("frames serialize");
                if sink.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            incoming = stream.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<ClientFrame>(&text) {
                    Ok(ClientFrame::Chat { body }) => s.chat(&project, &user, &body).err().map(|e| e.to_string()),
                    Err(e) => Some(format!("unreadable frame: {e}")),
                };
                if let Some(message) = reply {
                    let text = serde_json::to_string(&Frame::Error { message }).expect("frames serialize");
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
            }
        }
    }
    s.hub.unregister(&project, &user, registration.conn);
    let _ = sink.close().await;
    debug!(%project, %user, "channel closed");
}
