use std::collections::HashMap;
use std::io;
use std::sync::Arc;

use axum::http::StatusCode;
use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use storygraph_core::embedding::{EmbeddingProvider, HashedTrigramEmbedder, ProviderError};
use storygraph_core::graph::{GraphError, GraphView, Scope};
use storygraph_core::metrics::{project_metrics, ProjectMetrics};
use storygraph_core::pipeline::{Pipeline, PipelineError};
use storygraph_core::story::{
    export_stories, import_stories, FormatError, ImportError, ImportReport, Project, Stakeholder, StoryError,
    StoryFormat, UserStory,
};
use storygraph_core::suggest::{SuggestError, SuggestionFeedback, SuggestionSet};
use storygraph_core::{ProjectId, StoryId, UserId};

use crate::config::{Config, ProviderSpec};
use crate::hub::{Frame, Hub, Registration, StoryChange};
use crate::journal::Journal;
use crate::remote::RemoteEmbedder;
use crate::state::{latest_key, AppState, ChatMessage, Event};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error(transparent)]
    Suggest(#[from] SuggestError),
    #[error("embedding provider unavailable: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Story(e) => e.into(),
            PipelineError::Provider(e) => e.into(),
            PipelineError::Graph(e) => e.into(),
            PipelineError::Glossary(e) => Self::Internal(e.to_string()),
        }
    }
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::Story(e) => match e {
                StoryError::UnknownProject(_) | StoryError::UnknownStory(_) => StatusCode::NOT_FOUND,
                StoryError::DuplicateProject(_)
                | StoryError::DuplicateStory(_)
                | StoryError::NotAMember { .. }
                | StoryError::DuplicateDisplayName { .. } => StatusCode::CONFLICT,
                StoryError::NoMembers | StoryError::Format(_) => StatusCode::BAD_REQUEST,
            },
            Self::Import(_) | Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Suggest(_) | Self::UnknownUser(_) => StatusCode::NOT_FOUND,
            Self::Provider(_) => StatusCode::SERVICE_UNAVAILABLE,
            Self::Graph(_) | Self::Storage(_) | Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// Short machine-readable code for the error body.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Story(StoryError::Format(_)) => "format_error",
            Self::Story(StoryError::NotAMember { .. }) => "not_a_member",
            Self::Story(StoryError::UnknownProject(_)) => "unknown_project",
            Self::Story(StoryError::UnknownStory(_)) => "unknown_story",
            Self::Story(_) => "conflict",
            Self::Import(_) => "bad_payload",
            Self::Suggest(_) => "unknown_suggestion",
            Self::UnknownUser(_) => "unknown_user",
            Self::Provider(_) => "provider_unavailable",
            Self::BadRequest(_) => "bad_request",
            Self::Graph(_) | Self::Storage(_) | Self::Internal(_) => "internal",
        }
    }

    /// The rejected story text, so a client can put it back in the editor.
    pub fn rejected_text(&self) -> Option<&str> {
        match self {
            Self::Story(StoryError::Format(FormatError { text, .. })) => Some(text),
            _ => None,
        }
    }
}

impl From<FormatError> for ServiceError {
    fn from(e: FormatError) -> Self {
        Self::Story(e.into())
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectDetails {
    pub project: Project,
    pub members: Vec<Stakeholder>,
}

struct Inner {
    state: AppState,
    journal: Journal,
}

/// The engine behind the HTTP API.
///
/// Story, membership, feedback and chat changes are validated and applied
/// under one state lock, which also orders channel deliveries. Suggestion
/// requests hold a per-project async lock while the pipeline runs on a copy
/// of the stores, then publish the new graphs in a single event.
pub struct Service {
    config: Config,
    provider: Arc<dyn EmbeddingProvider>,
    inner: Mutex<Inner>,
    project_locks: Mutex<HashMap<ProjectId, Arc<tokio::sync::Mutex<()>>>>,
    pub hub: Hub,
}

impl Service {
    /// Opens `config.data_dir` with the provider named in the config.
    pub fn open(config: Config) -> ServiceResult<Arc<Self>> {
        let provider: Arc<dyn EmbeddingProvider> = match &config.embedding_provider {
            ProviderSpec::Builtin => Arc::new(HashedTrigramEmbedder::default()),
            ProviderSpec::Remote(url) => Arc::new(RemoteEmbedder::new(url.clone())?),
        };
        Self::with_provider(config, provider)
    }

    pub fn with_provider(config: Config, provider: Arc<dyn EmbeddingProvider>) -> ServiceResult<Arc<Self>> {
        let (journal, state) = Journal::open(&config.data_dir, config.snapshot_every)?;
        info!(data_dir = %config.data_dir.display(), seq = journal.seq(), model = provider.model_id(), "state recovered");
        Ok(Arc::new(Self {
            config,
            provider,
            inner: Mutex::new(Inner { state, journal }),
            project_locks: Mutex::new(HashMap::new()),
            hub: Hub::default(),
        }))
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Serialized persisted state, for recovery checks.
    pub fn state_json(&self) -> Vec<u8> {
        self.inner.lock().state.to_json()
    }

    /// Journals `event`, then applies it. Callers validate first, so a
    /// failing apply means the stored state is inconsistent.
    fn record(inner: &mut Inner, event: Event) -> ServiceResult<()> {
        inner.journal.append(&event)?;
        inner.state.apply(event).map_err(ServiceError::Internal)?;
        inner.journal.maybe_snapshot(&inner.state)?;
        Ok(())
    }

    pub fn create_project(&self, project: Project, founders: Vec<Stakeholder>) -> ServiceResult<ProjectDetails> {
        let mut inner = self.inner.lock();
        if inner.state.stories.project(&project.id).is_some() {
            return Err(StoryError::DuplicateProject(project.id).into());
        }
        if project.id.as_str().trim().is_empty() {
            return Err(ServiceError::BadRequest("project id must not be empty".into()));
        }
        // founders are checked against each other on a scratch store
        let mut scratch = storygraph_core::story::StoryStore::new();
        scratch.create_project(project.clone(), founders.clone())?;
        let id = project.id.clone();
        Self::record(&mut inner, Event::ProjectCreated { project, founders })?;
        details(&inner.state, &id)
    }

    pub fn join(&self, project: &ProjectId, stakeholder: Stakeholder) -> ServiceResult<ProjectDetails> {
        let mut inner = self.inner.lock();
        let members = &inner
            .state
            .stories
            .project(project)
            .ok_or_else(|| StoryError::UnknownProject(project.clone()))?
            .member_ids;
        let clash = members.iter().any(|m| {
            m != &stakeholder.id
                && inner
                    .state
                    .stories
                    .stakeholder(m)
                    .is_some_and(|s| s.display_name == stakeholder.display_name)
        });
        if clash {
            return Err(StoryError::DuplicateDisplayName {
                project: project.clone(),
                name: stakeholder.display_name,
            }
            .into());
        }
        Self::record(
            &mut inner,
            Event::MemberJoined {
                project: project.clone(),
                stakeholder,
            },
        )?;
        details(&inner.state, project)
    }

    pub fn project(&self, project: &ProjectId) -> ServiceResult<ProjectDetails> {
        details(&self.inner.lock().state, project)
    }

    fn put_stories(&self, inner: &mut Inner, stories: Vec<UserStory>, counter: u64, change: StoryChange) -> ServiceResult<()> {
        Self::record(
            inner,
            Event::StoriesPut {
                stories: stories.clone(),
                story_counter: counter,
            },
        )?;
        for story in stories {
            let project = story.project_id.clone();
            self.hub.broadcast(&project, &Frame::StoryChanged { change, story });
        }
        Ok(())
    }

    pub fn create_story(&self, project: &ProjectId, author: &UserId, text: &str) -> ServiceResult<UserStory> {
        let mut inner = self.inner.lock();
        inner.state.stories.require_member(project, author)?;
        let counter = inner.state.story_counter + 1;
        let story = UserStory::create(
            StoryId(format!("st-{counter}")),
            project.clone(),
            author.clone(),
            text,
            Utc::now(),
            self.config.format_mode(),
        )?;
        self.put_stories(&mut inner, vec![story.clone()], counter, StoryChange::Created)?;
        Ok(story)
    }

    /// Edits or deletes a live story on behalf of `user`, who must be a
    /// member of the story's project.
    fn change_story(
        &self,
        id: &StoryId,
        user: &UserId,
        change: StoryChange,
        f: impl FnOnce(&mut UserStory) -> ServiceResult<()>,
    ) -> ServiceResult<UserStory> {
        let mut inner = self.inner.lock();
        let mut story = inner
            .state
            .stories
            .story(id)
            .filter(|s| !s.deleted)
            .cloned()
            .ok_or_else(|| StoryError::UnknownStory(id.clone()))?;
        inner.state.stories.require_member(&story.project_id, user)?;
        f(&mut story)?;
        let counter = inner.state.story_counter;
        self.put_stories(&mut inner, vec![story.clone()], counter, change)?;
        Ok(story)
    }

    pub fn edit_story(&self, id: &StoryId, user: &UserId, text: &str) -> ServiceResult<UserStory> {
        let mode = self.config.format_mode();
        self.change_story(id, user, StoryChange::Edited, |s| Ok(s.retext(text, Utc::now(), mode)?))
    }

    pub fn delete_story(&self, id: &StoryId, user: &UserId) -> ServiceResult<UserStory> {
        self.change_story(id, user, StoryChange::Deleted, |s| {
            s.deleted = true;
            s.updated_at = Utc::now();
            Ok(())
        })
    }

    pub fn list_stories(
        &self,
        project: &ProjectId,
        author: Option<&UserId>,
        include_deleted: bool,
    ) -> ServiceResult<Vec<UserStory>> {
        let inner = self.inner.lock();
        if inner.state.stories.project(project).is_none() {
            return Err(StoryError::UnknownProject(project.clone()).into());
        }
        Ok(inner
            .state
            .stories
            .stories(project, author, include_deleted)
            .into_iter()
            .cloned()
            .collect())
    }

    pub fn import(&self, project: &ProjectId, author: &UserId, format: StoryFormat, payload: &[u8]) -> ServiceResult<ImportReport> {
        let mut inner = self.inner.lock();
        inner.state.stories.require_member(project, author)?;
        let mut counter = inner.state.story_counter;
        let report = import_stories(payload, format, project, author, Utc::now(), self.config.format_mode(), || {
            counter += 1;
            StoryId(format!("st-{counter}"))
        })?;
        if !report.stories.is_empty() {
            self.put_stories(&mut inner, report.stories.clone(), counter, StoryChange::Created)?;
        }
        Ok(report)
    }

    pub fn export(&self, project: &ProjectId, author: Option<&UserId>, format: StoryFormat, include_deleted: bool) -> ServiceResult<Vec<u8>> {
        let inner = self.inner.lock();
        Ok(export_stories(&inner.state.stories, project, author, format, include_deleted)?)
    }

    fn project_lock(&self, project: &ProjectId) -> Arc<tokio::sync::Mutex<()>> {
        self.project_locks.lock().entry(project.clone()).or_default().clone()
    }

    /// Runs the whole pipeline for `user` and publishes the new graphs and
    /// suggestions. On failure nothing is stored.
    pub async fn request_suggestions(self: &Arc<Self>, project: &ProjectId, user: &UserId) -> ServiceResult<SuggestionSet> {
        let lock = self.project_lock(project);
        let _guard = lock.lock().await;
        let (stories, mut graphs) = {
            let inner = self.inner.lock();
            inner.state.stories.require_member(project, user)?;
            (inner.state.stories.clone(), inner.state.graphs.clone())
        };
        let user_scope = Scope::user(user.clone(), project.clone());
        let project_scope = Scope::project(project.clone());
        let at = [&user_scope, &project_scope]
            .iter()
            .filter_map(|s| graphs.graph(s).and_then(|g| g.last_commit))
            .fold(Utc::now(), DateTime::max);
        let this = self.clone();
        let (p, u) = (project.clone(), user.clone());
        let (set, graphs) = tokio::task::spawn_blocking(move || {
            let pipeline = Pipeline::new(this.provider.as_ref(), this.config.pipeline());
            let set = pipeline.request_suggestions(&stories, &mut graphs, &p, &u, at)?;
            Ok::<_, ServiceError>((set, graphs))
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;

        let changed = [&user_scope, &project_scope]
            .iter()
            .filter_map(|s| graphs.graph(s).cloned())
            .collect();
        let mut inner = self.inner.lock();
        Self::record(
            &mut inner,
            Event::SuggestionsIssued {
                project: project.clone(),
                user: user.clone(),
                set: set.clone(),
                graphs: changed,
                next_node: graphs.next_node(),
            },
        )?;
        self.hub.send_to(
            project,
            user,
            Frame::SuggestionReady {
                project_id: project.clone(),
                user_id: user.clone(),
                quality: set.quality.len(),
                completeness: set.completeness.len(),
            },
        );
        Ok(inner.state.book.present(set, user, true))
    }

    /// The latest suggestions issued to `user`, with their dislikes applied.
    pub fn suggestions(&self, project: &ProjectId, user: &UserId, include_hidden: bool) -> ServiceResult<SuggestionSet> {
        let inner = self.inner.lock();
        inner.state.stories.require_member(project, user)?;
        let set = inner.state.latest.get(&latest_key(project, user)).cloned().unwrap_or_default();
        Ok(inner.state.book.present(set, user, include_hidden))
    }

    pub fn feedback(&self, suggestion_id: &str, user: &UserId, disliked: bool) -> ServiceResult<SuggestionFeedback> {
        let mut inner = self.inner.lock();
        if inner.state.book.get(suggestion_id).is_none() {
            return Err(SuggestError::UnknownSuggestion(suggestion_id.to_owned()).into());
        }
        if inner.state.stories.stakeholder(user).is_none() {
            return Err(ServiceError::UnknownUser(user.clone()));
        }
        let feedback = SuggestionFeedback {
            suggestion_id: suggestion_id.to_owned(),
            user_id: user.clone(),
            disliked,
            at: Utc::now(),
        };
        Self::record(&mut inner, Event::Feedback { feedback: feedback.clone() })?;
        Ok(feedback)
    }

    /// Active graph of a scope. A user scope needs the user to be a member.
    pub fn graph(&self, scope: &Scope) -> ServiceResult<GraphView> {
        let inner = self.inner.lock();
        let project = scope.project_id();
        if inner.state.stories.project(project).is_none() {
            return Err(StoryError::UnknownProject(project.clone()).into());
        }
        if let Some(user) = scope.user_id() {
            inner.state.stories.require_member(project, user)?;
        }
        Ok(inner.state.graphs.view(scope))
    }

    pub fn metrics(&self, project: &ProjectId) -> ServiceResult<ProjectMetrics> {
        let inner = self.inner.lock();
        if inner.state.stories.project(project).is_none() {
            return Err(StoryError::UnknownProject(project.clone()).into());
        }
        let count = inner.state.stories.stories(project, None, false).len();
        Ok(project_metrics(project.clone(), count, &inner.state.graphs.view(&Scope::project(project.clone()))))
    }

    /// Stores a chat message and delivers it to every live channel of the
    /// project; returns the message and the delivery count.
    pub fn chat(&self, project: &ProjectId, sender: &UserId, body: &str) -> ServiceResult<(ChatMessage, usize)> {
        if body.trim().is_empty() {
            return Err(ServiceError::BadRequest("chat message body must not be empty".into()));
        }
        let mut inner = self.inner.lock();
        inner.state.stories.require_member(project, sender)?;
        let counter = inner.state.chat_counter + 1;
        let message = ChatMessage {
            id: format!("m-{counter}"),
            project_id: project.clone(),
            sender_id: sender.clone(),
            body: body.to_owned(),
            sent_at: Utc::now(),
            seq: inner.state.chats.get(project).map_or(0, Vec::len) as u64 + 1,
        };
        Self::record(
            &mut inner,
            Event::Chat {
                message: message.clone(),
                chat_counter: counter,
            },
        )?;
        let delivered = self.hub.broadcast(project, &Frame::Chat { message: message.clone() });
        Ok((message, delivered))
    }

    pub fn chat_history(&self, project: &ProjectId, user: &UserId, since: u64) -> ServiceResult<Vec<ChatMessage>> {
        let inner = self.inner.lock();
        inner.state.stories.require_member(project, user)?;
        Ok(chats_since(&inner.state, project, since))
    }

    /// Opens the channel of a member and queues the chat messages after
    /// `since` on it. Holding the state lock here means no message is both
    /// replayed and broadcast, and none falls between the two.
    pub fn connect(&self, project: &ProjectId, user: &UserId, since: u64) -> ServiceResult<Registration> {
        let inner = self.inner.lock();
        inner.state.stories.require_member(project, user)?;
        let registration = self.hub.register(project, user);
        for message in chats_since(&inner.state, project, since) {
            self.hub.send_to(project, user, Frame::Chat { message });
        }
        Ok(registration)
    }

    /// Checks membership without opening anything.
    pub fn require_member(&self, project: &ProjectId, user: &UserId) -> ServiceResult<()> {
        self.inner.lock().state.stories.require_member(project, user)?;
        Ok(())
    }

    /// Forces a snapshot, used on shutdown.
    pub fn snapshot(&self) -> ServiceResult<()> {
        let mut inner = self.inner.lock();
        let Inner { state, journal } = &mut *inner;
        journal.snapshot(state)?;
        Ok(())
    }
}

fn chats_since(state: &AppState, project: &ProjectId, since: u64) -> Vec<ChatMessage> {
    state
        .chats
        .get(project)
        .map(|log| log.iter().filter(|m| m.seq > since).cloned().collect())
        .unwrap_or_default()
}

fn details(state: &AppState, project: &ProjectId) -> ServiceResult<ProjectDetails> {
    let project = state
        .stories
        .project(project)
        .ok_or_else(|| StoryError::UnknownProject(project.clone()))?
        .clone();
    let members = project
        .member_ids
        .iter()
        .filter_map(|m| state.stories.stakeholder(m).cloned())
        .collect();
    Ok(ProjectDetails { project, members })
}
