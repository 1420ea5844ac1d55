use std::collections::HashMap;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use storygraph_core::story::UserStory;
use storygraph_core::{ProjectId, UserId};

use crate::state::ChatMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryChange {
    Created,
    Edited,
    Deleted,
}

/// Server to client frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Frame {
    Chat {
        message: ChatMessage,
    },
    #[serde(rename_all = "camelCase")]
    SuggestionReady {
        project_id: ProjectId,
        user_id: UserId,
        quality: usize,
        completeness: usize,
    },
    StoryChanged {
        change: StoryChange,
        story: UserStory,
    },
    Error {
        message: String,
    },
}

/// Client to server frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientFrame {
    Chat { body: String },
}

struct Channel {
    conn: u64,
    tx: UnboundedSender<Frame>,
}

/// Live channels, at most one per (user, project).
#[derive(Default)]
pub struct Hub {
    channels: Mutex<HashMap<(ProjectId, UserId), Channel>>,
    next_conn: Mutex<u64>,
}

pub struct Registration {
    pub conn: u64,
    pub rx: UnboundedReceiver<Frame>,
}

impl Hub {
    /// Opens a channel for `user` in `project`. An existing one for the same
    /// pair is dropped, which ends that connection.
    pub fn register(&self, project: &ProjectId, user: &UserId) -> Registration {
        let conn = {
            let mut n = self.next_conn.lock();
            *n += 1;
            *n
        };
        let (tx, rx) = unbounded_channel();
        self.channels.lock().insert((project.clone(), user.clone()), Channel { conn, tx });
        Registration { conn, rx }
    }

    /// Removes the channel if it is still the one opened as `conn`.
    pub fn unregister(&self, project: &ProjectId, user: &UserId, conn: u64) {
        let mut channels = self.channels.lock();
        let key = (project.clone(), user.clone());
        if channels.get(&key).is_some_and(|c| c.conn == conn) {
            channels.remove(&key);
        }
    }

    /// Sends to every live channel of `project`; returns the delivery count.
    pub fn broadcast(&self, project: &ProjectId, frame: &Frame) -> usize {
        self.channels
            .lock()
            .iter()
            .filter(|((p, _), _)| p == project)
            .filter(|(_, c)| c.tx.send(frame.clone()).is_ok())
            .count()
    }

    pub fn send_to(&self, project: &ProjectId, user: &UserId, frame: Frame) -> bool {
        self.channels
            .lock()
            .get(&(project.clone(), user.clone()))
            .is_some_and(|c| c.tx.send(frame).is_ok())
    }

    pub fn is_live(&self, project: &ProjectId, user: &UserId) -> bool {
        self.channels.lock().contains_key(&(project.clone(), user.clone()))
    }
}
