use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use storygraph_core::graph::{GraphStore, NodeId, ScopedGraph};
use storygraph_core::story::{Project, Stakeholder, StoryStore, UserStory};
use storygraph_core::suggest::{SuggestionBook, SuggestionFeedback, SuggestionSet};
use storygraph_core::{ProjectId, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatMessage {
    pub id: String,
    pub project_id: ProjectId,
    pub sender_id: UserId,
    pub body: String,
    pub sent_at: DateTime<Utc>,
    /// Position in the project's chat log, from 1.
    pub seq: u64,
}

/// Everything the service persists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppState {
    pub stories: StoryStore,
    pub graphs: GraphStore,
    pub book: SuggestionBook,
    /// Latest suggestion set per `project/user`.
    pub latest: BTreeMap<String, SuggestionSet>,
    pub chats: BTreeMap<ProjectId, Vec<ChatMessage>>,
    pub story_counter: u64,
    pub chat_counter: u64,
}

pub fn latest_key(project: &ProjectId, user: &UserId) -> String {
    format!("{project}/{user}")
}

/// A validated change. Applying the same events in order always rebuilds the
/// same state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ProjectCreated {
        project: Project,
        founders: Vec<Stakeholder>,
    },
    MemberJoined {
        project: ProjectId,
        stakeholder: Stakeholder,
    },
    StoriesPut {
        stories: Vec<UserStory>,
        story_counter: u64,
    },
    SuggestionsIssued {
        project: ProjectId,
        user: UserId,
        set: SuggestionSet,
        graphs: Vec<ScopedGraph>,
        next_node: NodeId,
    },
    Feedback {
        feedback: SuggestionFeedback,
    },
    Chat {
        message: ChatMessage,
        chat_counter: u64,
    },
}

impl AppState {
    /// Applies an event that was validated against this state. Replay of a
    /// corrupted journal is the only way this can fail.
    pub fn apply(&mut self, event: Event) -> Result<(), String> {
        match event {
            Event::ProjectCreated { project, founders } => {
                self.stories.create_project(project, founders).map_err(|e| e.to_string())?;
            }
            Event::MemberJoined { project, stakeholder } => {
                self.stories.join(&project, stakeholder).map_err(|e| e.to_string())?;
            }
            Event::StoriesPut { stories, story_counter } => {
                for s in stories {
                    self.stories.put_story(s);
                }
                self.story_counter = story_counter;
            }
            Event::SuggestionsIssued {
                project,
                user,
                set,
                graphs,
                next_node,
            } => {
                for g in graphs {
                    self.graphs.restore_graph(g, next_node);
                }
                self.book.issue(&set);
                self.latest.insert(latest_key(&project, &user), set);
            }
            Event::Feedback { feedback } => {
                self.book
                    .record_feedback(&feedback.suggestion_id, &feedback.user_id, feedback.disliked, feedback.at)
                    .map_err(|e| e.to_string())?;
            }
            Event::Chat { message, chat_counter } => {
                self.chats.entry(message.project_id.clone()).or_default().push(message);
                self.chat_counter = chat_counter;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("state serializes")
    }
}
