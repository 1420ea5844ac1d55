use std::fmt::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::GraphView;
use crate::ids::{ProjectId, StoryId, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeExport {
    pub key: String,
    pub user: Option<UserId>,
    pub project: ProjectId,
    pub stories: Vec<StoryId>,
    pub active: bool,
    pub expiry: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeExport {
    pub from: String,
    pub to: String,
    #[serde(rename = "self")]
    pub self_link: bool,
}

/// Active snapshot in the shape consumed by visualizations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<EdgeExport>,
}

impl GraphView {
    pub fn export(&self) -> GraphExport {
        let nodes = self
            .nodes()
            .map(|n| NodeExport {
                key: n.key.clone(),
                user: n.user_id.clone(),
                project: n.project_id.clone(),
                stories: n.user_story.iter().map(|a| a.story_id.clone()).collect(),
                active: n.is_active,
                expiry: n.expiry_date,
            })
            .collect();
        let mut edges: Vec<EdgeExport> = self
            .edges()
            .map(|(a, b)| EdgeExport {
                from: a.to_owned(),
                to: b.to_owned(),
                self_link: false,
            })
            .collect();
        edges.extend(self.keys().filter(|k| self.has_self_link(k)).map(|k| EdgeExport {
            from: k.to_owned(),
            to: k.to_owned(),
            self_link: true,
        }));
        GraphExport { nodes, edges }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph concepts {\n");
        for k in self.keys() {
            let _ = writeln!(out, "  {:?} [stories={}];", k, self.story_count(k));
        }
        for e in self.export().edges {
            let _ = writeln!(out, "  {:?} -- {:?};", e.from, e.to);
        }
        out.push_str("}\n");
        out
    }
}
